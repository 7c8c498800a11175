#include "nsgms/decorrelation.hpp"

#include <cmath>
#include <memory>
#include <mutex>

#include <fftw3.h>

#include "nsgms/errors.hpp"
#include "nsgms/rng.hpp"

namespace nsgms {

void StationarySeries::validate() const {
    if (data.rows() < 1 || data.cols() < 1) throw InvalidParameter("series must be non-empty");
    if (width < 1 || data.cols() % width != 0)
        throw WidthMismatch("correlation width W must divide the series length N");
    if (!data.allFinite()) throw InvalidParameter("series contains non-finite values");
}

namespace {

// FFTW's planner is not thread-safe; execution with new-array functions is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const noexcept { fftw_free(p); }
};

struct PlanDestroy {
    void operator()(fftw_plan_s* p) const noexcept {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(p);
    }
};

}  // namespace

Eigen::MatrixXcd dft_coefficients(const StationarySeries& series) {
    series.validate();
    const int p = series.p();
    const int n = series.N();
    const int half = n / 2 + 1;

    std::unique_ptr<double, FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
    std::unique_ptr<fftw_complex, FftwFree> out(
        static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * half)));
    std::unique_ptr<fftw_plan_s, PlanDestroy> plan;
    {
        std::lock_guard lock(planner_mutex());
        plan.reset(fftw_plan_dft_r2c_1d(n, in.get(), out.get(), FFTW_ESTIMATE));
    }
    if (!plan) throw NumericalError("FFTW planning failed");

    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    Eigen::MatrixXcd coeffs(p, n);
    for (int i = 0; i < p; ++i) {
        for (int t = 0; t < n; ++t) in.get()[t] = series.data(i, t);
        fftw_execute_dft_r2c(plan.get(), in.get(), out.get());
        for (int k = 0; k < half; ++k) {
            const std::complex<double> v(out.get()[k][0] * scale, out.get()[k][1] * scale);
            coeffs(i, k) = v;
            if (k > 0 && n - k >= half) coeffs(i, n - k) = std::conj(v);
        }
    }
    return coeffs;
}

SampleBlocks to_block_samples(const StationarySeries& series) {
    const Eigen::MatrixXcd coeffs = dft_coefficients(series);
    const int p = series.p();
    const int n = series.N();
    const double root2 = std::sqrt(2.0);

    Eigen::MatrixXd real(p, n);
    Eigen::Index col = 0;
    real.col(col++) = coeffs.col(0).real();
    for (int k = 1; 2 * k < n; ++k) {
        real.col(col++) = root2 * coeffs.col(k).real();
        real.col(col++) = root2 * coeffs.col(k).imag();
    }
    if (n % 2 == 0 && n > 1) real.col(col++) = coeffs.col(n / 2).real();

    SampleBlocks s;
    s.p = p;
    s.B = series.width;
    s.L = n / series.width;
    s.blocks.reserve(s.B);
    for (int b = 0; b < s.B; ++b) s.blocks.push_back(real.middleCols(static_cast<Eigen::Index>(b) * s.L, s.L));
    return s;
}

namespace {

// Orthonormal basis of the span of the rows of x (as columns of an L x r matrix).
Eigen::MatrixXd row_space_basis(const Eigen::MatrixXd& x) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x.transpose());
    qr.setThreshold(1e-12);
    const Eigen::Index r = qr.rank();
    Eigen::MatrixXd q = Eigen::MatrixXd::Identity(x.cols(), r);
    q.applyOnTheLeft(qr.householderQ());
    return q;
}

}  // namespace

DecorrelationReport decorrelation_report(const SampleBlocks& blocks) {
    blocks.validate();
    if (blocks.L < 2) throw InsufficientData("decorrelation_report needs at least two columns per block");

    DecorrelationReport report;
    std::vector<Eigen::MatrixXd> bases;
    bases.reserve(blocks.B);
    for (const auto& x : blocks.blocks) {
        bases.push_back(row_space_basis(x));

        const Eigen::Index h = x.cols() / 2;
        const Eigen::MatrixXd first = x.leftCols(h) * x.leftCols(h).transpose() / static_cast<double>(h);
        const Eigen::MatrixXd second = x.rightCols(x.cols() - h) * x.rightCols(x.cols() - h).transpose() /
                                       static_cast<double>(x.cols() - h);
        const double whole = (x * x.transpose() / static_cast<double>(x.cols())).norm();
        if (whole > 0.0)
            report.within_block_flatness = std::max(report.within_block_flatness, (first - second).norm() / whole);
    }

    double total = 0.0;
    long long pairs = 0;
    for (int a = 0; a < blocks.B; ++a) {
        for (int b = a + 1; b < blocks.B; ++b) {
            const auto r = std::min(bases[a].cols(), bases[b].cols());
            if (r > 0) total += (bases[a].transpose() * bases[b]).squaredNorm() / static_cast<double>(r);
            ++pairs;
        }
    }
    report.cross_block_energy = pairs ? total / static_cast<double>(pairs) : 0.0;
    return report;
}

Eigen::MatrixXd simulate_var1(const Eigen::MatrixXd& A, int N, std::uint64_t seed, int burn_in) {
    if (A.rows() != A.cols()) throw DimensionMismatch("VAR(1) matrix must be square");
    if (N < 1 || burn_in < 0) throw InvalidParameter("VAR(1) length must be positive");
    const auto p = A.rows();
    KeyedRng rng(derive_key(seed, {0x766172}));
    Eigen::VectorXd x = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd w(p);
    Eigen::MatrixXd out(p, N);
    for (int t = -burn_in; t < N; ++t) {
        for (Eigen::Index i = 0; i < p; ++i) w(i) = rng.normal();
        x = A * x + w;
        if (t >= 0) out.col(t) = x;
    }
    return out;
}

Eigen::MatrixXd random_var1_matrix(int p, double spectral_radius, std::uint64_t seed) {
    if (p < 1) throw InvalidParameter("p must be positive");
    if (!(spectral_radius >= 0.0 && spectral_radius < 1.0))
        throw InvalidParameter("spectral radius must lie in [0, 1) for a stationary VAR(1)");
    KeyedRng rng(derive_key(seed, {0x41}));
    Eigen::MatrixXd a(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) a(i, j) = rng.normal();
    const double current = Eigen::EigenSolver<Eigen::MatrixXd>(a, false).eigenvalues().cwiseAbs().maxCoeff();
    if (current == 0.0) return Eigen::MatrixXd::Zero(p, p);
    return a * (spectral_radius / current);
}

}  // namespace nsgms
