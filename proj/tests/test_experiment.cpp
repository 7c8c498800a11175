#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nsgms/errors.hpp"
#include "nsgms/experiment.hpp"

using namespace nsgms;

namespace {

ExperimentConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.p = 6;
    c.s_true = 1;
    c.s_est = 1;
    c.B = 2;
    c.L_grid = {20, 200};
    c.trials = 12;
    c.master_seed = 5;
    return c;
}

std::string csv(const ExperimentResult& r) {
    std::ostringstream out;
    write_csv(out, r);
    return out.str();
}

}  // namespace

TEST_CASE("config parsing") {
    const auto c = parse(
        "# sweep\n"
        "p = 8\n"
        "s_true = 2\n"
        "s_est = 2\n"
        "B = 4\n"
        "N_grid = 400, 800\n"
        "beta = 2.5\n"
        "coupling = 0.4\n"
        "lambda_mode = 0.01\n"
        "trials = 3   # inline\n"
        "eta = 0.2\n"
        "master_seed = 18446744073709551615\n"
        "combine_rule = and\n");
    CHECK(c.p == 8);
    CHECK(c.N_grid == std::vector<long long>{400, 800});
    CHECK(c.beta == 2.5);
    REQUIRE(c.lambda.has_value());
    CHECK(*c.lambda == 0.01);
    CHECK(c.trials == 3);
    CHECK(c.master_seed == 18446744073709551615ULL);
    CHECK(c.combine_rule == CombineRule::And);
    CHECK_FALSE(parse("L_grid = 10\nlambda_mode = default\n").lambda.has_value());
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse("L_grid = 10\nfoo = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse("L_grid = 10\np = 8\np = 9\n"), ConfigError);
    CHECK_THROWS_AS(parse("L_grid = 10\np = eight\n"), ConfigError);
    CHECK_THROWS_AS(parse("L_grid = 10\np 8\n"), ConfigError);
    CHECK_THROWS_AS(parse("p = 8\n"), ConfigError);                         // no grid
    CHECK_THROWS_AS(parse("L_grid = 10\nN_grid = 40\n"), ConfigError);      // two grids
    CHECK_THROWS_AS(parse("L_grid = 10\ntrials = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse("L_grid = 10\ns_true = 3\ns_est = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse("N_grid = 10\nB = 4\n"), ConfigError);            // not a multiple of B
    CHECK_THROWS_AS(parse("L_grid = 10,,20\n"), ConfigError);
    CHECK_THROWS_AS(parse("L_grid = 10\ncombine_rule = xor\n"), ConfigError);
    CHECK_THROWS_AS(parse("L_grid = 10\nmaster_seed = -1\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/nsgms.cfg"), ConfigError);
}

TEST_CASE("Wilson interval") {
    const auto zero = wilson_interval(0, 200);
    CHECK(zero.low == 0.0);
    CHECK(zero.high == doctest::Approx(0.018845326377266575).epsilon(1e-12));
    const auto all = wilson_interval(200, 200);
    CHECK(all.high == 1.0);
    CHECK(all.low == doctest::Approx(1.0 - 0.018845326377266575).epsilon(1e-12));
    const auto half = wilson_interval(50, 100);
    CHECK(half.low == doctest::Approx(1.0 - half.high).epsilon(1e-12));
    CHECK(half.low < 0.5);
    CHECK(half.high > 0.5);
    CHECK_THROWS_AS(wilson_interval(3, 2), InvalidParameter);
}

TEST_CASE("antitonic regression") {
    const std::vector<double> w(4, 1.0);
    CHECK(antitonic_regression(std::vector<double>{4, 3, 2, 1}, w) == std::vector<double>{4, 3, 2, 1});
    CHECK(antitonic_regression(std::vector<double>{1, 2, 3, 4}, w) == std::vector<double>{2.5, 2.5, 2.5, 2.5});
    CHECK(antitonic_regression(std::vector<double>{3, 1, 2, 0}, w) == std::vector<double>{3, 1.5, 1.5, 0});
    const auto weighted = antitonic_regression(std::vector<double>{1, 3}, std::vector<double>{3, 1});
    CHECK(weighted[0] == doctest::Approx(1.5));
    CHECK(weighted[1] == doctest::Approx(1.5));
}

TEST_CASE("node recovery rows are consistent and deterministic") {
    const auto cfg = small_config();
    const auto a = run_node_recovery(cfg, {1, false});
    const auto b = run_node_recovery(cfg, {3, false});
    CHECK(csv(a) == csv(b));
    REQUIRE(a.rows.size() == 2);
    for (const auto& r : a.rows) {
        CHECK(r.N == r.B * r.L);
        CHECK(r.trials == 12);
        CHECK(r.error_rate == doctest::Approx(r.errors / 12.0));
        CHECK(r.ci_low <= r.error_rate);
        CHECK(r.ci_high >= r.error_rate);
        CHECK(r.lambda == doctest::Approx(r.rho_min / 6.0).epsilon(1e-15));
        CHECK(r.bound_N == sample_size_bound(r.beta, r.rho_min, r.p, r.s_est, cfg.eta));
        CHECK(r.rho_cond == rho_condition_holds(r.rho_min, r.beta, static_cast<double>(r.L)));
        CHECK(r.wall_ms == 0.0);
    }
    CHECK_FALSE(a.rows[0].rho_cond);  // L = 20 is far too short for 24 beta / L
    CHECK(a.rows[1].errors <= a.rows[0].errors);

    auto other = cfg;
    other.master_seed = 6;
    CHECK(csv(run_node_recovery(other, {1, false})) != csv(a));
}

TEST_CASE("bound multiples translate to block lengths") {
    auto cfg = small_config();
    cfg.L_grid.clear();
    cfg.bound_multiples = {0.01};
    cfg.trials = 2;
    const auto r = run_node_recovery(cfg, {1, false});
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].L == static_cast<long long>(std::ceil(0.01 * r.rows[0].bound_N / cfg.B)));
}

TEST_CASE("infeasible budgets and empty graphs") {
    auto cfg = small_config();
    cfg.L_grid = {3};
    CHECK_THROWS_AS(run_node_recovery(cfg), InfeasibleConfig);

    auto empty = small_config();
    empty.s_true = 0;
    empty.L_grid = {300};
    empty.trials = 20;
    CHECK_THROWS_AS(run_node_recovery(empty), ConfigError);
    empty.lambda = 0.05;
    const auto r = run_node_recovery(empty, {1, false});
    CHECK(r.rows[0].errors <= 2);
    CHECK(std::isnan(r.rows[0].bound_N));
    CHECK(r.rows[0].rho_cond);
}

TEST_CASE("phase transition sorts rows and fits a non-increasing curve") {
    auto cfg = small_config();
    cfg.L_grid = {400, 20, 100};
    const auto pt = run_phase_transition(cfg, {1, false});
    REQUIRE(pt.result.rows.size() == 3);
    CHECK(pt.result.rows[0].L == 20);
    CHECK(pt.result.rows[2].L == 400);
    for (std::size_t k = 1; k < pt.antitonic_fit.size(); ++k) CHECK(pt.antitonic_fit[k] <= pt.antitonic_fit[k - 1]);
    CHECK(pt.monotone_trend);
}

TEST_CASE("CSV output") {
    ExperimentResult empty;
    CHECK(csv(empty) == std::string(kRecoveryCsvHeader) + "\n");

    const auto r = run_node_recovery(small_config(), {1, true});
    ExperimentResult one{{r.rows[0]}};
    const auto text = csv(one);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    CHECK(text.find('\r') == std::string::npos);

    std::istringstream in(csv(r));
    const auto back = parse_csv(in);
    REQUIRE(back.rows.size() == r.rows.size());
    for (std::size_t k = 0; k < r.rows.size(); ++k) {
        auto expect = r.rows[k];
        expect.graph_errors = 0;
        CHECK(back.rows[k] == expect);
    }
    std::istringstream bad("N,B\n");
    CHECK_THROWS_AS(parse_csv(bad), IoError);
}

TEST_CASE("lemma rows") {
    const QuadraticForm f{Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Zero(1)};
    const std::vector<double> etas{2.0, 50.0};
    const auto rows = run_lemma_check(f, etas, 1000, 3);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].bound == doctest::Approx(1.6929634497812283).epsilon(1e-15));
    CHECK(rows[1].empirical == 0.0);
    CHECK(rows[0].trials == 1000);
    std::ostringstream out;
    write_lemma_csv(out, rows);
    CHECK(out.str().rfind("eta,bound,empirical,trials\n2,1.6929634497812283,", 0) == 0);
    const QuadraticForm zero{Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)};
    CHECK_THROWS_AS(run_lemma_check(zero, etas, 10, 1), DegenerateForm);
}
