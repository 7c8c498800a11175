#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace nsgms {

// y = sum_j a_j z_j^2 + b_j z_j with z_j i.i.d. standard normal.
struct QuadraticForm {
    Eigen::VectorXd a;
    Eigen::VectorXd b;

    // Throws DimensionMismatch for unequal lengths, InvalidParameter for
    // non-finite entries.
    void validate() const;
    bool is_zero() const { return a.isZero(0.0) && b.isZero(0.0); }
    double mean() const { return a.sum(); }
};

// Two-sided deviation bound
//   P{|y - E y| >= eta} <= 2 exp(-(eta^2/8) / (|a|_2^2 + |b|_2^2 + |a|_inf eta)).
// The raw value is returned; it exceeds 1 for small eta.
double tail_bound(const QuadraticForm& form, double eta);

// E exp(lam (a z^2 + b z)) = exp((lam^2 b^2 / 2) / (1 - 2 lam a)) / sqrt(1 - 2 lam a).
// Throws DomainError unless 1 - 2 lam a > 0.
double mgf_term(double a, double b, double lam);

// Fraction of `trials` draws with |y - E y| >= eta. Trial t uses the stream
// keyed by (seed, t), so the result does not depend on `threads`.
double empirical_tail(const QuadraticForm& form, double eta, long long trials, std::uint64_t seed,
                      int threads = 1);

// Same draws as empirical_tail, evaluated for every eta at once.
std::vector<double> empirical_tails(const QuadraticForm& form, std::span<const double> etas,
                                    long long trials, std::uint64_t seed, int threads = 1);

struct MgfEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

// Monte Carlo average of exp(lam (a z^2 + b z)). Partial sums are reduced in a
// fixed order, so the result is bit-identical for any thread count.
MgfEstimate mgf_empirical(double a, double b, double lam, long long trials, std::uint64_t seed,
                          int threads = 1);

// Uniform entries in [-1, 1], length in [min_len, max_len].
QuadraticForm random_quadratic_form(int min_len, int max_len, std::uint64_t seed);

namespace detail {

// Same bound with |b|_2^2 / 2 in the denominator. Tighter than tail_bound.
double tail_bound_half_linear(const QuadraticForm& form, double eta);

}  // namespace detail

}  // namespace nsgms
