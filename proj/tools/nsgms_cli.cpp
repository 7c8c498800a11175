// nsgms: command-line front end for model generation, sampling, neighbourhood
// estimation, DFT decorrelation, the quadratic-form tail check and Monte Carlo
// recovery experiments.
//
// Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nsgms/concentration.hpp"
#include "nsgms/decorrelation.hpp"
#include "nsgms/errors.hpp"
#include "nsgms/experiment.hpp"
#include "nsgms/graph_model.hpp"
#include "nsgms/neighborhood.hpp"
#include "nsgms/parallel.hpp"
#include "nsgms/sampler.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

// Writes through `fn` to `path`, or to stdout when the path is empty.
void with_output(const std::string& path, const std::function<void(std::ostream&)>& fn) {
    if (path.empty()) {
        fn(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw nsgms::IoError("cannot open " + path + " for writing");
    fn(out);
    if (!out) throw nsgms::IoError("failed writing " + path);
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graphical model selection from block-wise i.i.d. Gaussian data"};
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "worker threads (results do not depend on it)")
        ->check(CLI::PositiveNumber);

    // model
    auto* model_cmd = app.add_subcommand("model", "generate a random graph and block model");
    int p = 8, s_max = 2, blocks = 4, block_length = 64;
    double beta = 2.0, coupling = 0.5;
    std::uint64_t seed = 1;
    std::string out_path;
    model_cmd->add_option("--p", p, "number of nodes")->required();
    model_cmd->add_option("--s-max", s_max, "maximum node degree")->required();
    model_cmd->add_option("--blocks,-B", blocks, "number of blocks");
    model_cmd->add_option("--block-length,-L", block_length, "samples per block");
    model_cmd->add_option("--beta", beta, "covariance eigenvalue upper bound");
    model_cmd->add_option("--coupling", coupling, "edge weight scale in (0,1)");
    model_cmd->add_option("--seed", seed, "RNG seed");
    model_cmd->add_option("-o,--output", out_path, "output file (default stdout)");

    // sample
    auto* sample_cmd = app.add_subcommand("sample", "draw block samples from a model");
    std::string model_path;
    bool binary = false;
    sample_cmd->add_option("--model", model_path, "nsgms-model file")->required();
    sample_cmd->add_option("--seed", seed, "RNG seed");
    sample_cmd->add_option("-o,--output", out_path, "output file")->required();
    sample_cmd->add_flag("--binary", binary, "write float64 data plus a .hdr sidecar");

    // estimate
    auto* estimate_cmd = app.add_subcommand("estimate", "sparse neighbourhood regression");
    std::string samples_path, combine = "or";
    int s_budget = 2;
    double lambda = 0.0, rank_tol = 1e-10;
    std::optional<int> node;
    estimate_cmd->add_option("--samples", samples_path, "nsgms-samples file")->required();
    estimate_cmd->add_option("--s", s_budget, "largest neighbourhood size searched")->required();
    estimate_cmd->add_option("--lambda", lambda, "penalty per selected index")->required();
    estimate_cmd->add_option("--node", node, "estimate only this node (1-based)");
    estimate_cmd->add_option("--combine", combine, "graph rule: or | and");
    estimate_cmd->add_option("--rank-tol", rank_tol, "relative rank threshold");
    estimate_cmd->add_option("-o,--output", out_path, "output file (default stdout)");

    // decorrelate
    auto* decor_cmd = app.add_subcommand("decorrelate", "DFT a stationary record into frequency blocks");
    std::string input_path;
    int width = 1;
    decor_cmd->add_option("--input", input_path, "nsgms-samples file with B=1")->required();
    decor_cmd->add_option("--width", width, "correlation width W (number of blocks)")->required();
    decor_cmd->add_option("-o,--output", out_path, "output file")->required();
    decor_cmd->add_flag("--binary", binary, "write float64 data plus a .hdr sidecar");

    // lemma
    auto* lemma_cmd = app.add_subcommand("lemma", "compare the quadratic-form tail bound with Monte Carlo");
    std::vector<double> a_coeffs, b_coeffs, etas;
    int random_length = 0;
    std::uint64_t form_seed = 1;
    long long trials = 100000;
    lemma_cmd->add_option("--a", a_coeffs, "quadratic coefficients")->delimiter(',');
    lemma_cmd->add_option("--b", b_coeffs, "linear coefficients")->delimiter(',');
    lemma_cmd->add_option("--random-length", random_length, "draw a random form of this length instead");
    lemma_cmd->add_option("--form-seed", form_seed, "seed for --random-length");
    lemma_cmd->add_option("--eta", etas, "deviation grid")->delimiter(',')->required();
    lemma_cmd->add_option("--trials", trials, "Monte Carlo draws per eta");
    lemma_cmd->add_option("--seed", seed, "RNG seed");
    lemma_cmd->add_option("-o,--output", out_path, "CSV output (default stdout)");

    // experiment
    auto* exp_cmd = app.add_subcommand("experiment", "run a Monte Carlo node-recovery sweep");
    std::string config_path;
    bool no_wall_time = false, phase = false;
    exp_cmd->add_option("config", config_path, "key = value config file")->required();
    exp_cmd->add_option("-o,--output", out_path, "CSV output (default stdout)");
    exp_cmd->add_flag("--no-wall-time", no_wall_time, "write wall_ms as 0 for byte-stable output");
    exp_cmd->add_flag("--phase-transition", phase, "sort by N and report the monotone-trend check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*model_cmd) {
            const auto cig = nsgms::random_cig(p, s_max, seed);
            const auto model = nsgms::build_block_model(cig, blocks, block_length, beta, coupling, seed);
            with_output(out_path, [&](std::ostream& out) { nsgms::write_model(out, model); });
            const auto rep = nsgms::verify_assumptions(model, cig, 0.0, s_max);
            std::cerr << "edges=" << cig.edge_count() << " max_degree=" << rep.max_degree
                      << " rho_min=" << rep.rho_min_achieved << " eig=[" << rep.eig_min << ", " << rep.eig_max
                      << "]\n";
        } else if (*sample_cmd) {
            std::ifstream in(model_path);
            if (!in) throw nsgms::IoError("cannot open " + model_path);
            const auto model = nsgms::read_model(in);
            const auto samples = nsgms::sample_process(model, seed, threads);
            nsgms::save_samples(out_path, samples,
                                binary ? nsgms::SampleFormat::Binary : nsgms::SampleFormat::Text);
        } else if (*estimate_cmd) {
            const auto samples = nsgms::load_samples(samples_path);
            const auto reduced = nsgms::ReducedBlocks::from_samples(samples);
            nsgms::EstimatorConfig cfg{s_budget, lambda, rank_tol};
            if (node) {
                if (*node < 1 || *node > samples.p) throw nsgms::InvalidParameter("--node must lie in [1, p]");
                const auto est = nsgms::estimate_neighborhood(reduced, *node - 1, cfg);
                with_output(out_path, [&](std::ostream& out) { out << nsgms::format_neighborhood(est) << '\n'; });
            } else {
                const auto rule = nsgms::parse_combine_rule(combine);
                std::vector<nsgms::NeighborhoodEstimate> ests(samples.p);
                nsgms::parallel_for(ests.size(), threads, [&](std::size_t i) {
                    ests[i] = nsgms::estimate_neighborhood(reduced, static_cast<int>(i), cfg);
                });
                const auto graph = nsgms::combine_neighborhoods(samples.p, ests, rule);
                with_output(out_path, [&](std::ostream& out) {
                    for (const auto& e : ests) out << nsgms::format_neighborhood(e) << '\n';
                    nsgms::write_edge_list(out, graph);
                });
            }
        } else if (*decor_cmd) {
            const auto record = nsgms::load_samples(input_path);
            nsgms::StationarySeries series;
            series.data.resize(record.p, record.N());
            for (int b = 0; b < record.B; ++b)
                series.data.middleCols(static_cast<Eigen::Index>(b) * record.L, record.L) = record.blocks[b];
            series.width = width;
            const auto blocks_out = nsgms::to_block_samples(series);
            nsgms::save_samples(out_path, blocks_out,
                                binary ? nsgms::SampleFormat::Binary : nsgms::SampleFormat::Text);
            if (blocks_out.L >= 2) {
                const auto rep = nsgms::decorrelation_report(blocks_out);
                std::cerr << "cross_block_energy=" << rep.cross_block_energy
                          << " within_block_flatness=" << rep.within_block_flatness << '\n';
            }
        } else if (*lemma_cmd) {
            nsgms::QuadraticForm form;
            if (random_length > 0) {
                form = nsgms::random_quadratic_form(random_length, random_length, form_seed);
            } else {
                if (a_coeffs.empty() && b_coeffs.empty())
                    throw nsgms::InvalidParameter("give --a/--b or --random-length");
                if (a_coeffs.empty()) a_coeffs.assign(b_coeffs.size(), 0.0);
                if (b_coeffs.empty()) b_coeffs.assign(a_coeffs.size(), 0.0);
                form = {to_vector(a_coeffs), to_vector(b_coeffs)};
            }
            const auto rows = nsgms::run_lemma_check(form, etas, trials, seed, threads);
            with_output(out_path, [&](std::ostream& out) { nsgms::write_lemma_csv(out, rows); });
        } else if (*exp_cmd) {
            const auto cfg = nsgms::load_config(config_path);
            const nsgms::RunOptions opts{threads, !no_wall_time};
            nsgms::ExperimentResult result;
            if (phase) {
                const auto pt = nsgms::run_phase_transition(cfg, opts);
                result = pt.result;
                std::cerr << "monotone_trend=" << (pt.monotone_trend ? "yes" : "no") << '\n';
            } else {
                result = nsgms::run_node_recovery(cfg, opts);
            }
            with_output(out_path, [&](std::ostream& out) { nsgms::write_csv(out, result); });
            for (const auto& r : result.rows)
                std::cerr << "N=" << r.N << " error_rate=" << r.error_rate << " graph_errors=" << r.graph_errors
                          << '/' << r.trials << '\n';
        }
    } catch (const nsgms::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const nsgms::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return 0;
}
