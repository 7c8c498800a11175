#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nsgms/graph_model.hpp"

namespace nsgms {

// N = B*L observations stored as B matrices of size p x L. Column n of block b
// is the observation x[b*L + n]; row i of block b is the component x_i^(b).
struct SampleBlocks {
    int p = 0;
    int B = 0;
    int L = 0;
    std::vector<Eigen::MatrixXd> blocks;

    long long N() const noexcept { return static_cast<long long>(B) * L; }

    // Throws DimensionMismatch / InvalidParameter on shape errors or non-finite data.
    void validate() const;
};

// Lower-triangular G with G G^T = C. Throws NotPositiveDefinite.
Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& c);

// Writes columns [col_begin, col_begin + out.cols()) of block b into `out`.
// Column n of block b is G * z with z drawn from the stream keyed by
// (seed, b, n), so any chunking or scheduling reproduces the same data.
void sample_block_columns(const Eigen::MatrixXd& chol, std::uint64_t seed, int b,
                          long long col_begin, Eigen::Ref<Eigen::MatrixXd> out);

SampleBlocks sample_process(const BlockModel& model, std::uint64_t seed, int threads = 1);

enum class SampleFormat { Text, Binary };

std::string samples_header(const SampleBlocks& samples);

// `nsgms-samples v1` text: header, then per block a `block <b>` line followed
// by L lines holding one observation (p values) each.
void write_samples_text(std::ostream& out, const SampleBlocks& samples);
SampleBlocks read_samples_text(std::istream& in);

// Raw little-endian float64, blocks in order, each block column-major.
void write_samples_binary(std::ostream& out, const SampleBlocks& samples);
SampleBlocks read_samples_binary(std::istream& in, const std::string& header_line);

// Binary files get their header in a sidecar `<path>.hdr`.
std::filesystem::path sidecar_path(const std::filesystem::path& data_path);
void save_samples(const std::filesystem::path& path, const SampleBlocks& samples, SampleFormat format);
// Picks the binary reader when a sidecar header exists next to `path`.
SampleBlocks load_samples(const std::filesystem::path& path);

}  // namespace nsgms
