#include "nsgms/concentration.hpp"

#include <algorithm>
#include <cmath>

#include "nsgms/errors.hpp"
#include "nsgms/parallel.hpp"
#include "nsgms/rng.hpp"

namespace nsgms {

void QuadraticForm::validate() const {
    if (a.size() != b.size()) throw DimensionMismatch("quadratic form vectors must have equal length");
    if (a.size() == 0) throw DegenerateForm("quadratic form has no terms");
    if (!a.allFinite() || !b.allFinite()) throw InvalidParameter("quadratic form has non-finite entries");
}

namespace {

double bound_with_linear_weight(const QuadraticForm& form, double eta, double linear_weight) {
    form.validate();
    if (form.is_zero()) throw DegenerateForm("tail bound is undefined for a = b = 0");
    if (!(eta > 0.0)) throw InvalidParameter("eta must be positive");
    const double denom = form.a.squaredNorm() + linear_weight * form.b.squaredNorm() +
                         form.a.cwiseAbs().maxCoeff() * eta;
    return 2.0 * std::exp(-(eta * eta / 8.0) / denom);
}

constexpr long long kChunk = 4096;

}  // namespace

double tail_bound(const QuadraticForm& form, double eta) {
    return bound_with_linear_weight(form, eta, 1.0);
}

double detail::tail_bound_half_linear(const QuadraticForm& form, double eta) {
    return bound_with_linear_weight(form, eta, 0.5);
}

double mgf_term(double a, double b, double lam) {
    const double d = 1.0 - 2.0 * lam * a;
    if (!(d > 0.0)) throw DomainError("mgf_term requires 1 - 2 lam a > 0");
    return std::exp(lam * lam * b * b / 2.0 / d) * std::sqrt(1.0 / d);
}

std::vector<double> empirical_tails(const QuadraticForm& form, std::span<const double> etas,
                                    long long trials, std::uint64_t seed, int threads) {
    form.validate();
    if (trials < 1) throw InvalidParameter("trials must be >= 1");
    const double mean = form.mean();
    const auto n = form.a.size();
    const long long chunks = (trials + kChunk - 1) / kChunk;
    std::vector<std::vector<long long>> hits(chunks, std::vector<long long>(etas.size(), 0));
    parallel_for(static_cast<std::size_t>(chunks), threads, [&](std::size_t c) {
        const long long begin = static_cast<long long>(c) * kChunk;
        const long long end = std::min(trials, begin + kChunk);
        for (long long t = begin; t < end; ++t) {
            KeyedRng rng(derive_key(seed, {static_cast<std::uint64_t>(t)}));
            double y = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                const double z = rng.normal();
                y += form.a(j) * z * z + form.b(j) * z;
            }
            const double dev = std::abs(y - mean);
            for (std::size_t e = 0; e < etas.size(); ++e)
                if (dev >= etas[e]) ++hits[c][e];
        }
    });
    std::vector<double> out(etas.size(), 0.0);
    for (std::size_t e = 0; e < etas.size(); ++e) {
        long long total = 0;
        for (const auto& h : hits) total += h[e];
        out[e] = static_cast<double>(total) / static_cast<double>(trials);
    }
    return out;
}

double empirical_tail(const QuadraticForm& form, double eta, long long trials, std::uint64_t seed,
                      int threads) {
    const double etas[] = {eta};
    return empirical_tails(form, etas, trials, seed, threads).front();
}

MgfEstimate mgf_empirical(double a, double b, double lam, long long trials, std::uint64_t seed,
                          int threads) {
    mgf_term(a, b, lam);  // domain check
    if (trials < 1) throw InvalidParameter("trials must be >= 1");
    const long long chunks = (trials + kChunk - 1) / kChunk;
    std::vector<double> sums(chunks, 0.0), sq_sums(chunks, 0.0);
    parallel_for(static_cast<std::size_t>(chunks), threads, [&](std::size_t c) {
        const long long begin = static_cast<long long>(c) * kChunk;
        const long long end = std::min(trials, begin + kChunk);
        double s = 0.0, s2 = 0.0;
        for (long long t = begin; t < end; ++t) {
            KeyedRng rng(derive_key(seed, {static_cast<std::uint64_t>(t)}));
            const double z = rng.normal();
            const double v = std::exp(lam * (a * z * z + b * z));
            s += v;
            s2 += v * v;
        }
        sums[c] = s;
        sq_sums[c] = s2;
    });
    double s = 0.0, s2 = 0.0;
    for (long long c = 0; c < chunks; ++c) {
        s += sums[c];
        s2 += sq_sums[c];
    }
    const auto m = static_cast<double>(trials);
    MgfEstimate est;
    est.mean = s / m;
    const double var = trials > 1 ? std::max(0.0, (s2 - m * est.mean * est.mean) / (m - 1.0)) : 0.0;
    est.std_error = std::sqrt(var / m);
    return est;
}

QuadraticForm random_quadratic_form(int min_len, int max_len, std::uint64_t seed) {
    if (min_len < 1 || max_len < min_len) throw InvalidParameter("invalid length range");
    KeyedRng rng(derive_key(seed, {0x7166}));
    const auto n = min_len + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(max_len - min_len + 1)));
    QuadraticForm f{Eigen::VectorXd(n), Eigen::VectorXd(n)};
    for (int j = 0; j < n; ++j) {
        f.a(j) = rng.uniform(-1.0, 1.0);
        f.b(j) = rng.uniform(-1.0, 1.0);
    }
    return f;
}

}  // namespace nsgms
