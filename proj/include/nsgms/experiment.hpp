#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nsgms/concentration.hpp"
#include "nsgms/neighborhood.hpp"

namespace nsgms {

// Declarative description of a node-recovery sweep. Exactly one of the three
// grids is set; `bound_multiples` expresses N as multiples of the sample-size
// bound evaluated at the achieved rho_min.
struct ExperimentConfig {
    int p = 8;
    int s_true = 2;  // degree bound of the generated graphs; 0 means no edges
    int s_est = 2;
    int B = 4;
    std::vector<long long> L_grid;
    std::vector<long long> N_grid;
    std::vector<double> bound_multiples;
    double beta = 2.0;
    double coupling = 0.5;
    std::optional<double> lambda;  // nullopt: lambda = rho_min / 6
    int trials = 200;
    double eta = 0.1;
    std::uint64_t master_seed = 1;
    CombineRule combine_rule = CombineRule::Or;

    // Throws ConfigError.
    void validate() const;
};

// Parses `key = value` lines (`#` starts a comment). Unknown or repeated keys
// are errors. Lists are comma-separated. Throws ConfigError.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

struct GridPointResult {
    long long N = 0;
    int B = 0;
    long long L = 0;
    int p = 0;
    int s_true = 0;
    int s_est = 0;
    double beta = 0.0;
    double rho_min = 0.0;  // min over the trials' models of the achieved minimum edge rho
    double lambda = 0.0;
    int trials = 0;
    int errors = 0;         // trials whose estimated neighbourhood differs from the truth
    double error_rate = 0.0;
    double ci_low = 0.0;    // Wilson 95% interval
    double ci_high = 0.0;
    double bound_N = 0.0;
    bool rho_cond = false;
    double wall_ms = 0.0;
    int graph_errors = 0;   // trials whose whole-graph estimate is wrong; not part of the CSV

    bool operator==(const GridPointResult&) const = default;
};

struct ExperimentResult {
    std::vector<GridPointResult> rows;
};

struct RunOptions {
    int threads = 1;
    bool record_wall_time = true;
};

// Each trial draws a fresh graph and block model keyed by (master_seed, trial),
// picks a node with a nonempty neighbourhood, samples N = B L observations keyed
// by (master_seed, grid index, trial) and checks whether the estimated
// neighbourhood matches. Output depends only on the config.
ExperimentResult run_node_recovery(const ExperimentConfig& config, const RunOptions& options = {});

struct PhaseTransitionResult {
    ExperimentResult result;       // rows sorted by N
    std::vector<double> antitonic_fit;  // non-increasing least-squares fit of error_rate vs N
    bool monotone_trend = false;   // rate(N_max) <= rate(N_min) + 0.05
};

PhaseTransitionResult run_phase_transition(const ExperimentConfig& config, const RunOptions& options = {});

// Pool-adjacent-violators fit constrained to be non-increasing.
std::vector<double> antitonic_regression(std::span<const double> values, std::span<const double> weights);

struct BinomialInterval {
    double low = 0.0;
    double high = 0.0;
};

// Wilson score interval at 95% confidence.
BinomialInterval wilson_interval(long long successes, long long trials);

inline constexpr const char* kRecoveryCsvHeader =
    "N,B,L,p,s_true,s_est,beta,rho_min,lambda,trials,errors,error_rate,ci_low,ci_high,bound_N,rho_cond,wall_ms";

void write_csv(std::ostream& out, const ExperimentResult& result);
ExperimentResult parse_csv(std::istream& in);
void emit_csv(const ExperimentResult& result, const std::filesystem::path& path);

struct LemmaRow {
    double eta = 0.0;
    double bound = 0.0;
    double empirical = 0.0;
    long long trials = 0;
};

std::vector<LemmaRow> run_lemma_check(const QuadraticForm& form, std::span<const double> eta_grid,
                                      long long trials, std::uint64_t seed, int threads = 1);

inline constexpr const char* kLemmaCsvHeader = "eta,bound,empirical,trials";
void write_lemma_csv(std::ostream& out, std::span<const LemmaRow> rows);

}  // namespace nsgms
