#include "nsgms/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "nsgms/errors.hpp"
#include "nsgms/parallel.hpp"
#include "nsgms/rng.hpp"
#include "nsgms/sampler.hpp"
#include "text_io.hpp"

namespace nsgms {

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (p < 2) fail("p must be >= 2");
    if (s_true < 0 || s_true > p - 1) fail("s_true must lie in [0, p-1]");
    if (s_est < s_true) fail("s_est must be >= s_true");
    if (s_est > p - 1) fail("s_est must be <= p-1");
    if (B < 1) fail("B must be >= 1");
    const int grids = !L_grid.empty() + !N_grid.empty() + !bound_multiples.empty();
    if (grids != 1) fail("exactly one of L_grid, N_grid, bound_multiples must be given");
    for (auto l : L_grid)
        if (l < 1) fail("L_grid entries must be positive");
    for (auto n : N_grid)
        if (n < 1 || n % B != 0) fail("N_grid entries must be positive multiples of B");
    for (auto m : bound_multiples)
        if (!(m > 0.0)) fail("bound_multiples entries must be positive");
    if (!(beta > 1.0)) fail("beta must be > 1");
    if (!(coupling > 0.0 && coupling < 1.0)) fail("coupling must lie in (0, 1)");
    if (lambda && !(*lambda >= 0.0)) fail("explicit lambda must be >= 0");
    if (trials < 1) fail("trials must be >= 1");
    if (!(eta > 0.0)) fail("eta must be positive");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("empty list entry in '" + s + "'");
        out.push_back(item);
    }
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
    try {
        if constexpr (std::is_floating_point_v<T>) {
            return static_cast<T>(text::to_double(value, key));
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            std::uint64_t v = 0;
            const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
            if (ec != std::errc{} || ptr != value.data() + value.size())
                throw ConfigError("malformed unsigned integer for " + key + ": '" + value + "'");
            return v;
        } else {
            const auto v = text::to_int(value, key);
            if (v < static_cast<long long>(std::numeric_limits<T>::min()) ||
                v > static_cast<long long>(std::numeric_limits<T>::max()))
                throw ConfigError("value out of range for " + key);
            return static_cast<T>(v);
        }
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    std::map<std::string, std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
        if (!seen.emplace(key, value).second) throw ConfigError("duplicate key '" + key + "'");

        if (key == "p") cfg.p = parse_number<int>(key, value);
        else if (key == "s_true") cfg.s_true = parse_number<int>(key, value);
        else if (key == "s_est") cfg.s_est = parse_number<int>(key, value);
        else if (key == "B") cfg.B = parse_number<int>(key, value);
        else if (key == "L_grid") {
            for (const auto& v : split_list(value)) cfg.L_grid.push_back(parse_number<long long>(key, v));
        } else if (key == "N_grid") {
            for (const auto& v : split_list(value)) cfg.N_grid.push_back(parse_number<long long>(key, v));
        } else if (key == "bound_multiples") {
            for (const auto& v : split_list(value)) cfg.bound_multiples.push_back(parse_number<double>(key, v));
        } else if (key == "beta") cfg.beta = parse_number<double>(key, value);
        else if (key == "coupling") cfg.coupling = parse_number<double>(key, value);
        else if (key == "lambda_mode") {
            if (value == "default") cfg.lambda.reset();
            else cfg.lambda = parse_number<double>(key, value);
        } else if (key == "trials") cfg.trials = parse_number<int>(key, value);
        else if (key == "eta") cfg.eta = parse_number<double>(key, value);
        else if (key == "master_seed") cfg.master_seed = parse_number<std::uint64_t>(key, value);
        else if (key == "combine_rule") {
            try {
                cfg.combine_rule = parse_combine_rule(value);
            } catch (const InvalidParameter& e) {
                throw ConfigError(e.what());
            }
        } else {
            throw ConfigError("unknown key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse_config(in);
}

BinomialInterval wilson_interval(long long successes, long long trials) {
    if (trials < 1 || successes < 0 || successes > trials) throw InvalidParameter("invalid binomial counts");
    constexpr double z = 1.959963984540054;
    const double n = static_cast<double>(trials);
    const double phat = static_cast<double>(successes) / n;
    const double denom = 1.0 + z * z / n;
    const double centre = (phat + z * z / (2.0 * n)) / denom;
    const double half = z * std::sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom;
    // clamp so that roundoff never excludes the point estimate
    return {std::min(phat, std::max(0.0, centre - half)), std::max(phat, std::min(1.0, centre + half))};
}

std::vector<double> antitonic_regression(std::span<const double> values, std::span<const double> weights) {
    if (values.size() != weights.size()) throw DimensionMismatch("values and weights differ in length");
    struct Pool {
        double mean, weight;
        std::size_t count;
    };
    std::vector<Pool> pools;
    for (std::size_t k = 0; k < values.size(); ++k) {
        pools.push_back({values[k], weights[k], 1});
        // non-increasing: merge while a later pool exceeds the one before it
        while (pools.size() > 1 && pools[pools.size() - 2].mean < pools.back().mean) {
            auto last = pools.back();
            pools.pop_back();
            auto& prev = pools.back();
            const double w = prev.weight + last.weight;
            prev.mean = w > 0.0 ? (prev.mean * prev.weight + last.mean * last.weight) / w
                                : 0.5 * (prev.mean + last.mean);
            prev.weight = w;
            prev.count += last.count;
        }
    }
    std::vector<double> fit;
    fit.reserve(values.size());
    for (const auto& pool : pools) fit.insert(fit.end(), pool.count, pool.mean);
    return fit;
}

namespace {

struct Trial {
    Cig graph{2};
    std::vector<Eigen::MatrixXd> factors;
    int target = 0;
    std::vector<int> truth;
    double rho_min = 0.0;
};

Trial make_trial(const ExperimentConfig& cfg, int t) {
    const auto tk = static_cast<std::uint64_t>(t);
    Trial trial;
    trial.graph = cfg.s_true > 0 ? random_cig(cfg.p, cfg.s_true, derive_key(cfg.master_seed, {1, tk}))
                                 : Cig(cfg.p);
    // the precisions do not depend on L, so one model serves every grid point
    const auto model = build_block_model(trial.graph, cfg.B, 1, cfg.beta, cfg.coupling,
                                         derive_key(cfg.master_seed, {2, tk}));
    trial.rho_min = min_edge_partial_correlation(model, trial.graph);
    for (const auto& c : model.covariances) trial.factors.push_back(cholesky_factor(c));

    std::vector<int> eligible;
    for (int i = 0; i < cfg.p; ++i)
        if (trial.graph.degree(i) > 0) eligible.push_back(i);
    if (eligible.empty())
        for (int i = 0; i < cfg.p; ++i) eligible.push_back(i);
    KeyedRng rng(derive_key(cfg.master_seed, {3, tk}));
    trial.target = eligible[rng.uniform_index(eligible.size())];
    trial.truth = trial.graph.neighbors(trial.target);
    return trial;
}

struct TrialOutcome {
    bool node_error = false;
    bool graph_error = false;
};

TrialOutcome run_trial(const ExperimentConfig& cfg, const Trial& trial, std::size_t grid_index, int t,
                       long long L, const EstimatorConfig& est) {
    constexpr long long kChunk = 4096;
    const auto seed = derive_key(cfg.master_seed, {4, grid_index, static_cast<std::uint64_t>(t)});
    ReducedBlocks reduced(cfg.p, cfg.B);
    Eigen::MatrixXd buf(cfg.p, std::min(kChunk, L));
    for (int b = 0; b < cfg.B; ++b) {
        for (long long begin = 0; begin < L; begin += kChunk) {
            const long long count = std::min(kChunk, L - begin);
            if (buf.cols() != count) buf.resize(cfg.p, count);
            sample_block_columns(trial.factors[b], seed, b, begin, buf);
            reduced.absorb(b, buf);
        }
    }
    std::vector<NeighborhoodEstimate> estimates(cfg.p);
    for (int i = 0; i < cfg.p; ++i) estimates[i] = estimate_neighborhood(reduced, i, est);
    TrialOutcome out;
    out.node_error = estimates[trial.target].selected != trial.truth;
    out.graph_error = !(combine_neighborhoods(cfg.p, estimates, cfg.combine_rule) == trial.graph);
    return out;
}

}  // namespace

ExperimentResult run_node_recovery(const ExperimentConfig& cfg, const RunOptions& options) {
    cfg.validate();

    std::vector<Trial> trials(cfg.trials);
    parallel_for(trials.size(), options.threads,
                 [&](std::size_t t) { trials[t] = make_trial(cfg, static_cast<int>(t)); });
    double rho_min = std::numeric_limits<double>::infinity();
    for (const auto& t : trials) rho_min = std::min(rho_min, t.rho_min);
    const bool has_edges = std::isfinite(rho_min);

    double lambda = 0.0;
    if (cfg.lambda) lambda = *cfg.lambda;
    else if (has_edges) lambda = default_lambda(rho_min);
    else throw ConfigError("lambda_mode = default needs ground-truth graphs with edges; give an explicit lambda");

    const double bound_n = has_edges ? sample_size_bound(cfg.beta, rho_min, cfg.p, cfg.s_est, cfg.eta)
                                     : std::numeric_limits<double>::quiet_NaN();

    std::vector<long long> block_lengths;
    for (auto l : cfg.L_grid) block_lengths.push_back(l);
    for (auto n : cfg.N_grid) block_lengths.push_back(n / cfg.B);
    for (auto m : cfg.bound_multiples) {
        if (!has_edges) throw ConfigError("bound_multiples needs ground-truth graphs with edges");
        block_lengths.push_back(std::max(1LL, static_cast<long long>(std::ceil(m * bound_n / cfg.B))));
    }

    ExperimentResult result;
    for (std::size_t g = 0; g < block_lengths.size(); ++g) {
        const long long L = block_lengths[g];
        if (3LL * cfg.s_est >= L)
            throw InfeasibleConfig("s_est = " + std::to_string(cfg.s_est) + " violates s < L/3 at L = " +
                                   std::to_string(L));
        const auto start = std::chrono::steady_clock::now();

        EstimatorConfig est;
        est.s = cfg.s_est;
        est.lambda = lambda;
        std::vector<TrialOutcome> outcomes(cfg.trials);
        parallel_for(outcomes.size(), options.threads, [&](std::size_t t) {
            outcomes[t] = run_trial(cfg, trials[t], g, static_cast<int>(t), L, est);
        });

        GridPointResult row;
        row.N = L * cfg.B;
        row.B = cfg.B;
        row.L = L;
        row.p = cfg.p;
        row.s_true = cfg.s_true;
        row.s_est = cfg.s_est;
        row.beta = cfg.beta;
        row.rho_min = rho_min;
        row.lambda = lambda;
        row.trials = cfg.trials;
        for (const auto& o : outcomes) {
            row.errors += o.node_error;
            row.graph_errors += o.graph_error;
        }
        row.error_rate = static_cast<double>(row.errors) / cfg.trials;
        const auto ci = wilson_interval(row.errors, cfg.trials);
        row.ci_low = ci.low;
        row.ci_high = ci.high;
        row.bound_N = bound_n;
        row.rho_cond = has_edges ? rho_condition_holds(rho_min, cfg.beta, static_cast<double>(L)) : true;
        if (options.record_wall_time)
            row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        result.rows.push_back(row);
    }
    return result;
}

PhaseTransitionResult run_phase_transition(const ExperimentConfig& cfg, const RunOptions& options) {
    PhaseTransitionResult out;
    out.result = run_node_recovery(cfg, options);
    auto& rows = out.result.rows;
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.N < b.N; });
    std::vector<double> rates, weights;
    for (const auto& r : rows) {
        rates.push_back(r.error_rate);
        weights.push_back(r.trials);
    }
    out.antitonic_fit = antitonic_regression(rates, weights);
    out.monotone_trend = rows.empty() || rows.back().error_rate <= rows.front().error_rate + 0.05;
    return out;
}

void write_csv(std::ostream& out, const ExperimentResult& result) {
    out << kRecoveryCsvHeader << '\n';
    for (const auto& r : result.rows) {
        out << r.N << ',' << r.B << ',' << r.L << ',' << r.p << ',' << r.s_true << ',' << r.s_est << ','
            << text::fmt(r.beta) << ',' << text::fmt(r.rho_min) << ',' << text::fmt(r.lambda) << ','
            << r.trials << ',' << r.errors << ',' << text::fmt(r.error_rate) << ',' << text::fmt(r.ci_low)
            << ',' << text::fmt(r.ci_high) << ',' << text::fmt(r.bound_N) << ',' << (r.rho_cond ? 1 : 0)
            << ',' << text::fmt(r.wall_ms) << '\n';
    }
}

ExperimentResult parse_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kRecoveryCsvHeader) throw IoError("unexpected CSV header");
    ExperimentResult result;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::string cell;
        std::istringstream ss(line);
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 17) throw IoError("CSV row has " + std::to_string(f.size()) + " fields, expected 17");
        GridPointResult r;
        r.N = text::to_int(f[0], "N");
        r.B = static_cast<int>(text::to_int(f[1], "B"));
        r.L = text::to_int(f[2], "L");
        r.p = static_cast<int>(text::to_int(f[3], "p"));
        r.s_true = static_cast<int>(text::to_int(f[4], "s_true"));
        r.s_est = static_cast<int>(text::to_int(f[5], "s_est"));
        r.beta = text::to_double(f[6], "beta");
        r.rho_min = text::to_double(f[7], "rho_min");
        r.lambda = text::to_double(f[8], "lambda");
        r.trials = static_cast<int>(text::to_int(f[9], "trials"));
        r.errors = static_cast<int>(text::to_int(f[10], "errors"));
        r.error_rate = text::to_double(f[11], "error_rate");
        r.ci_low = text::to_double(f[12], "ci_low");
        r.ci_high = text::to_double(f[13], "ci_high");
        r.bound_N = text::to_double(f[14], "bound_N");
        r.rho_cond = text::to_int(f[15], "rho_cond") != 0;
        r.wall_ms = text::to_double(f[16], "wall_ms");
        result.rows.push_back(r);
    }
    return result;
}

void emit_csv(const ExperimentResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_csv(out, result);
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<LemmaRow> run_lemma_check(const QuadraticForm& form, std::span<const double> eta_grid,
                                      long long trials, std::uint64_t seed, int threads) {
    form.validate();
    if (form.is_zero()) throw DegenerateForm("lemma check needs a nonzero form");
    const auto empirical = empirical_tails(form, eta_grid, trials, seed, threads);
    std::vector<LemmaRow> rows;
    rows.reserve(eta_grid.size());
    for (std::size_t k = 0; k < eta_grid.size(); ++k)
        rows.push_back({eta_grid[k], tail_bound(form, eta_grid[k]), empirical[k], trials});
    return rows;
}

void write_lemma_csv(std::ostream& out, std::span<const LemmaRow> rows) {
    out << kLemmaCsvHeader << '\n';
    for (const auto& r : rows)
        out << text::fmt(r.eta) << ',' << text::fmt(r.bound) << ',' << text::fmt(r.empirical) << ','
            << r.trials << '\n';
}

}  // namespace nsgms
