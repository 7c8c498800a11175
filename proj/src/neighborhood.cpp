#include "nsgms/neighborhood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "nsgms/errors.hpp"
#include "nsgms/parallel.hpp"
#include "text_io.hpp"

namespace nsgms {

void EstimatorConfig::validate() const {
    if (s < 0) throw InvalidParameter("estimator budget s must be >= 0");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidParameter("lambda must be finite and >= 0");
    if (!(rank_tol > 0.0 && rank_tol < 1.0)) throw InvalidParameter("rank_tol must lie in (0, 1)");
}

namespace {

void check_rank_tol(double rank_tol) {
    if (!(rank_tol > 0.0 && rank_tol < 1.0)) throw InvalidParameter("rank_tol must lie in (0, 1)");
}

void check_index_set(std::span<const int> T, int p, int exclude) {
    for (std::size_t a = 0; a < T.size(); ++a) {
        if (T[a] < 0 || T[a] >= p) throw IndexOutOfRange("index set entry out of range");
        if (T[a] == exclude) throw InvalidParameter("index set must not contain the target node");
        for (std::size_t b = 0; b < a; ++b)
            if (T[a] == T[b]) throw InvalidParameter("index set contains duplicates");
    }
}

// Orthonormal basis (as columns) for the span of the columns of `vectors`.
Eigen::MatrixXd orthonormal_basis(const Eigen::Ref<const Eigen::MatrixXd>& vectors, double rank_tol) {
    Eigen::MatrixXd q(vectors.rows(), vectors.cols());
    Eigen::Index rank = 0;
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
        const double original = vectors.col(c).norm();
        if (original == 0.0) continue;
        Eigen::VectorXd w = vectors.col(c);
        for (int pass = 0; pass < 2; ++pass) {
            if (rank == 0) break;
            const Eigen::VectorXd coeff = q.leftCols(rank).transpose() * w;
            w.noalias() -= q.leftCols(rank) * coeff;
        }
        const double remaining = w.norm();
        if (remaining <= rank_tol * original) continue;
        q.col(rank++) = w / remaining;
    }
    q.conservativeResize(Eigen::NoChange, rank);
    return q;
}

Eigen::VectorXd complement_residual(const Eigen::Ref<const Eigen::MatrixXd>& vectors,
                                    const Eigen::VectorXd& x, double rank_tol) {
    const Eigen::MatrixXd q = orthonormal_basis(vectors, rank_tol);
    Eigen::VectorXd y = x;
    if (q.cols() == 0) return y;
    for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXd coeff = q.transpose() * y;
        y.noalias() -= q * coeff;
    }
    return y;
}

double reduced_residual_sq(const Eigen::MatrixXd& r, int i, std::span<const int> T, double rank_tol) {
    Eigen::MatrixXd cols(r.rows(), static_cast<Eigen::Index>(T.size()));
    for (std::size_t a = 0; a < T.size(); ++a) cols.col(static_cast<Eigen::Index>(a)) = r.col(T[a]);
    return complement_residual(cols, r.col(i), rank_tol).squaredNorm();
}

// Visits every k-subset of `items` in lexicographic order.
template <class Fn>
void for_each_combination(const std::vector<int>& items, int k, Fn&& fn) {
    const int n = static_cast<int>(items.size());
    if (k > n) return;
    std::vector<int> pos(k);
    for (int a = 0; a < k; ++a) pos[a] = a;
    std::vector<int> subset(k);
    for (;;) {
        for (int a = 0; a < k; ++a) subset[a] = items[pos[a]];
        fn(std::span<const int>(subset));
        int a = k - 1;
        while (a >= 0 && pos[a] == n - k + a) --a;
        if (a < 0) return;
        ++pos[a];
        for (int c = a + 1; c < k; ++c) pos[c] = pos[c - 1] + 1;
    }
}

}  // namespace

Eigen::VectorXd project_complement(const Eigen::MatrixXd& block_data, std::span<const int> T,
                                   const Eigen::VectorXd& x, double rank_tol) {
    check_rank_tol(rank_tol);
    if (x.size() != block_data.cols()) throw DimensionMismatch("x must have length L");
    check_index_set(T, static_cast<int>(block_data.rows()), -1);
    if (static_cast<Eigen::Index>(T.size()) >= block_data.cols())
        throw InfeasibleConfig("|T| must be smaller than the block length");
    Eigen::MatrixXd cols(block_data.cols(), static_cast<Eigen::Index>(T.size()));
    for (std::size_t a = 0; a < T.size(); ++a)
        cols.col(static_cast<Eigen::Index>(a)) = block_data.row(T[a]).transpose();
    return complement_residual(cols, x, rank_tol);
}

double residual_statistic(const SampleBlocks& samples, int i, std::span<const int> T, double rank_tol) {
    if (i < 0 || i >= samples.p) throw IndexOutOfRange("node index out of range");
    check_index_set(T, samples.p, i);
    double acc = 0.0;
    for (const auto& x : samples.blocks)
        acc += project_complement(x, T, x.row(i).transpose(), rank_tol).squaredNorm();
    return acc / static_cast<double>(samples.N());
}

ReducedBlocks::ReducedBlocks(int p, int B) : p_(p) {
    if (p < 1 || B < 1) throw InvalidParameter("ReducedBlocks needs p >= 1 and B >= 1");
    factors_.assign(B, Eigen::MatrixXd(0, p));
    counts_.assign(B, 0);
}

ReducedBlocks ReducedBlocks::from_samples(const SampleBlocks& samples) {
    samples.validate();
    ReducedBlocks r(samples.p, samples.B);
    constexpr Eigen::Index kChunk = 8192;
    for (int b = 0; b < samples.B; ++b) {
        const auto& x = samples.blocks[b];
        for (Eigen::Index c = 0; c < x.cols(); c += kChunk)
            r.absorb(b, x.middleCols(c, std::min(kChunk, x.cols() - c)));
    }
    return r;
}

void ReducedBlocks::absorb(int b, const Eigen::Ref<const Eigen::MatrixXd>& columns) {
    if (b < 0 || b >= B()) throw IndexOutOfRange("block index out of range");
    if (columns.rows() != p_) throw DimensionMismatch("absorbed columns must have p rows");
    if (columns.cols() == 0) return;
    auto& r = factors_[b];
    Eigen::MatrixXd stacked(r.rows() + columns.cols(), p_);
    stacked.topRows(r.rows()) = r;
    stacked.bottomRows(columns.cols()) = columns.transpose();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(stacked);
    const Eigen::Index k = std::min<Eigen::Index>(stacked.rows(), p_);
    r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    counts_[b] += columns.cols();
}

long long ReducedBlocks::N() const noexcept {
    long long n = 0;
    for (auto c : counts_) n += c;
    return n;
}

long long ReducedBlocks::min_block_length() const noexcept {
    return *std::min_element(counts_.begin(), counts_.end());
}

double residual_statistic(const ReducedBlocks& reduced, int i, std::span<const int> T, double rank_tol) {
    check_rank_tol(rank_tol);
    if (i < 0 || i >= reduced.p()) throw IndexOutOfRange("node index out of range");
    check_index_set(T, reduced.p(), i);
    if (static_cast<long long>(T.size()) >= reduced.min_block_length())
        throw InfeasibleConfig("|T| must be smaller than the block length");
    double acc = 0.0;
    for (int b = 0; b < reduced.B(); ++b) acc += reduced_residual_sq(reduced.factor(b), i, T, rank_tol);
    return acc / static_cast<double>(reduced.N());
}

NeighborhoodEstimate estimate_neighborhood(const SampleBlocks& samples, int i,
                                           const EstimatorConfig& config) {
    return estimate_neighborhood(ReducedBlocks::from_samples(samples), i, config);
}

NeighborhoodEstimate estimate_neighborhood(const ReducedBlocks& reduced, int i,
                                           const EstimatorConfig& config) {
    config.validate();
    const int p = reduced.p();
    if (i < 0 || i >= p) throw IndexOutOfRange("node index out of range");
    if (config.s >= reduced.min_block_length())
        throw InfeasibleConfig("estimator budget s must be smaller than the block length L");
    if (config.s >= p) throw InfeasibleConfig("estimator budget s must be smaller than p");

    std::vector<int> candidates;
    candidates.reserve(p - 1);
    for (int j = 0; j < p; ++j)
        if (j != i) candidates.push_back(j);

    const double inv_n = 1.0 / static_cast<double>(reduced.N());
    NeighborhoodEstimate best;
    best.node = i;
    best.objective = std::numeric_limits<double>::infinity();
    // Sizes ascend and subsets of equal size come in lexicographic order, so a
    // strict comparison keeps the tie-break-minimal incumbent.
    for (int t = 0; t <= config.s; ++t) {
        for_each_combination(candidates, t, [&](std::span<const int> T) {
            double z = 0.0;
            for (int b = 0; b < reduced.B(); ++b)
                z += reduced_residual_sq(reduced.factor(b), i, T, config.rank_tol);
            const double objective = z * inv_n + config.lambda * t;
            ++best.evaluated;
            if (objective < best.objective) {
                best.objective = objective;
                best.selected.assign(T.begin(), T.end());
            }
        });
    }
    return best;
}

Cig combine_neighborhoods(int p, const std::vector<NeighborhoodEstimate>& estimates, CombineRule combine) {
    std::vector<std::uint8_t> picks(static_cast<std::size_t>(p) * p, 0);
    for (const auto& e : estimates)
        for (int j : e.selected) picks[static_cast<std::size_t>(e.node) * p + j] = 1;
    Cig g(p);
    for (int i = 0; i < p; ++i) {
        for (int j = i + 1; j < p; ++j) {
            const bool ij = picks[static_cast<std::size_t>(i) * p + j];
            const bool ji = picks[static_cast<std::size_t>(j) * p + i];
            if (combine == CombineRule::Or ? (ij || ji) : (ij && ji)) g.add_edge(i, j);
        }
    }
    return g;
}

Cig estimate_graph(const SampleBlocks& samples, const EstimatorConfig& config, CombineRule combine,
                   int threads) {
    return estimate_graph(ReducedBlocks::from_samples(samples), config, combine, threads);
}

Cig estimate_graph(const ReducedBlocks& reduced, const EstimatorConfig& config, CombineRule combine,
                   int threads) {
    std::vector<NeighborhoodEstimate> estimates(reduced.p());
    parallel_for(estimates.size(), threads, [&](std::size_t i) {
        estimates[i] = estimate_neighborhood(reduced, static_cast<int>(i), config);
    });
    return combine_neighborhoods(reduced.p(), estimates, combine);
}

double default_lambda(double rho_min) {
    if (!(rho_min > 0.0)) throw InvalidParameter("rho_min must be positive");
    return rho_min / 6.0;
}

double sample_size_bound(double beta, double rho_min, double p, double s, double eta) {
    if (!(beta > 0.0 && rho_min > 0.0 && p > 0.0 && s > 0.0 && eta > 0.0))
        throw InvalidParameter("sample_size_bound needs positive arguments");
    return 864.0 * (beta / rho_min) * std::log(6.0 * p * s * s / eta);
}

bool rho_condition_holds(double rho_min, double beta, double L) {
    return rho_min >= 24.0 * beta / L;
}

std::uint64_t candidate_set_count(int p, int s) {
    std::uint64_t total = 0;
    std::uint64_t binom = 1;  // C(p-1, t)
    for (int t = 0; t <= s && t <= p - 1; ++t) {
        total += binom;
        binom = binom * static_cast<std::uint64_t>(p - 1 - t) / static_cast<std::uint64_t>(t + 1);
    }
    return total;
}

std::string format_neighborhood(const NeighborhoodEstimate& e) {
    std::string out = "node " + std::to_string(e.node + 1) + ": {";
    for (std::size_t a = 0; a < e.selected.size(); ++a) {
        if (a) out += ',';
        out += std::to_string(e.selected[a] + 1);
    }
    out += "} objective=" + text::fmt(e.objective);
    return out;
}

void write_edge_list(std::ostream& out, const Cig& graph) {
    for (auto [i, j] : graph.edges()) out << "edge " << (i + 1) << ' ' << (j + 1) << '\n';
}

CombineRule parse_combine_rule(const std::string& name) {
    if (name == "or" || name == "OR") return CombineRule::Or;
    if (name == "and" || name == "AND") return CombineRule::And;
    throw InvalidParameter("combine rule must be 'or' or 'and', got '" + name + "'");
}

}  // namespace nsgms
