#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "nsgms/sampler.hpp"

namespace nsgms {

// One realization of a stationary p-dimensional process with a user-supplied
// effective correlation width W. Columns are time samples.
struct StationarySeries {
    Eigen::MatrixXd data;  // p x N
    int width = 1;

    int p() const noexcept { return static_cast<int>(data.rows()); }
    int N() const noexcept { return static_cast<int>(data.cols()); }

    // Throws WidthMismatch unless W >= 1 divides N.
    void validate() const;
};

// Unitary DFT per coordinate: column k is (1/sqrt N) sum_n x[n] exp(-j 2 pi n k / N).
Eigen::MatrixXcd dft_coefficients(const StationarySeries& series);

// Maps the DFT to real block samples: DC (and Nyquist for even N) as a single
// real column, every other conjugate pair k, N-k as the two columns
// sqrt(2) Re x^[k] and sqrt(2) Im x^[k]. The N resulting columns keep frequency
// order and are cut into B = W contiguous blocks of L = N/W columns.
SampleBlocks to_block_samples(const StationarySeries& series);

struct DecorrelationReport {
    // Mean over block pairs of the normalized sum of squared canonical
    // correlations between the two blocks' component sequences (0: independent,
    // 1: identical spans).
    double cross_block_energy = 0.0;
    // Max over blocks of |C_first_half - C_second_half|_F / |C_block|_F, where
    // C_* are empirical covariances over the first/second half of the columns.
    double within_block_flatness = 0.0;
};

// Throws InsufficientData when a block has fewer than two columns.
DecorrelationReport decorrelation_report(const SampleBlocks& blocks);

// VAR(1) realization x[n] = A x[n-1] + w[n], w ~ N(0, I), after `burn_in`
// discarded steps.
Eigen::MatrixXd simulate_var1(const Eigen::MatrixXd& A, int N, std::uint64_t seed, int burn_in = 512);

// Random p x p matrix rescaled to the given spectral radius.
Eigen::MatrixXd random_var1_matrix(int p, double spectral_radius, std::uint64_t seed);

}  // namespace nsgms
