#include "nsgms/sampler.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "nsgms/errors.hpp"
#include "nsgms/parallel.hpp"
#include "nsgms/rng.hpp"
#include "text_io.hpp"

namespace nsgms {

static_assert(std::endian::native == std::endian::little, "binary sample I/O assumes little-endian");

void SampleBlocks::validate() const {
    if (p < 1 || B < 1 || L < 1) throw InvalidParameter("sample dimensions must be positive");
    if (static_cast<int>(blocks.size()) != B) throw DimensionMismatch("block count does not match B");
    for (const auto& x : blocks) {
        if (x.rows() != p || x.cols() != L) throw DimensionMismatch("sample block is not p x L");
        if (!x.allFinite()) throw InvalidParameter("sample block contains non-finite values");
    }
}

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& c) {
    if (c.rows() != c.cols()) throw DimensionMismatch("cholesky_factor needs a square matrix");
    const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
    if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw InvalidParameter("cholesky_factor needs a symmetric matrix");
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("matrix is not positive definite");
    return llt.matrixL();
}

void sample_block_columns(const Eigen::MatrixXd& chol, std::uint64_t seed, int b,
                          long long col_begin, Eigen::Ref<Eigen::MatrixXd> out) {
    const auto p = chol.rows();
    if (out.rows() != p) throw DimensionMismatch("output rows must equal p");
    for (Eigen::Index n = 0; n < out.cols(); ++n) {
        KeyedRng rng(derive_key(seed, {static_cast<std::uint64_t>(b),
                                       static_cast<std::uint64_t>(col_begin + n)}));
        for (Eigen::Index r = 0; r < p; ++r) out(r, n) = rng.normal();
    }
    out = chol.triangularView<Eigen::Lower>() * out;
}

SampleBlocks sample_process(const BlockModel& model, std::uint64_t seed, int threads) {
    SampleBlocks s;
    s.p = model.p;
    s.B = model.B;
    s.L = model.L;
    s.blocks.assign(model.B, Eigen::MatrixXd(model.p, model.L));
    std::vector<Eigen::MatrixXd> factors;
    factors.reserve(model.B);
    for (const auto& c : model.covariances) factors.push_back(cholesky_factor(c));

    constexpr long long kChunk = 4096;
    const long long chunks_per_block = (model.L + kChunk - 1) / kChunk;
    parallel_for(static_cast<std::size_t>(model.B * chunks_per_block), threads, [&](std::size_t k) {
        const int b = static_cast<int>(k / chunks_per_block);
        const long long begin = static_cast<long long>(k % chunks_per_block) * kChunk;
        const long long count = std::min<long long>(kChunk, model.L - begin);
        Eigen::MatrixXd buf(model.p, count);
        sample_block_columns(factors[b], seed, b, begin, buf);
        s.blocks[b].middleCols(begin, count) = buf;
    });
    return s;
}

std::string samples_header(const SampleBlocks& s) {
    return "nsgms-samples v1 p=" + std::to_string(s.p) + " B=" + std::to_string(s.B) +
           " L=" + std::to_string(s.L);
}

void write_samples_text(std::ostream& out, const SampleBlocks& s) {
    out << samples_header(s) << '\n';
    for (int b = 0; b < s.B; ++b) {
        out << "block " << (b + 1) << '\n';
        const auto& x = s.blocks[b];
        for (Eigen::Index n = 0; n < x.cols(); ++n) {
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
                if (i) out << ' ';
                out << text::fmt(x(i, n));
            }
            out << '\n';
        }
    }
}

namespace {

struct Dims {
    int p, B, L;
};

Dims parse_dims(const std::string& header) {
    const auto h = text::parse_header(header, "nsgms-samples");
    const auto p = text::to_int(text::require_field(h, "p"), "p");
    const auto B = text::to_int(text::require_field(h, "B"), "B");
    const auto L = text::to_int(text::require_field(h, "L"), "L");
    if (p < 1 || B < 1 || L < 1) throw IoError("samples header has nonpositive dimensions");
    return {static_cast<int>(p), static_cast<int>(B), static_cast<int>(L)};
}

SampleBlocks allocate(const Dims& d) {
    SampleBlocks s;
    s.p = d.p;
    s.B = d.B;
    s.L = d.L;
    s.blocks.assign(d.B, Eigen::MatrixXd(d.p, d.L));
    return s;
}

}  // namespace

SampleBlocks read_samples_text(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty samples file");
    auto s = allocate(parse_dims(line));
    for (int b = 1; b <= s.B; ++b) {
        if (text::read_token(in, "block marker") != "block") throw IoError("expected 'block' line");
        if (text::to_int(text::read_token(in, "block index"), "block index") != b)
            throw IoError("block indices out of order");
        auto& x = s.blocks[b - 1];
        for (Eigen::Index n = 0; n < x.cols(); ++n)
            for (Eigen::Index i = 0; i < x.rows(); ++i)
                x(i, n) = text::to_double(text::read_token(in, "sample value"), "sample value");
    }
    s.validate();
    return s;
}

void write_samples_binary(std::ostream& out, const SampleBlocks& s) {
    for (const auto& x : s.blocks)
        out.write(reinterpret_cast<const char*>(x.data()),
                  static_cast<std::streamsize>(x.size() * sizeof(double)));
}

SampleBlocks read_samples_binary(std::istream& in, const std::string& header_line) {
    auto s = allocate(parse_dims(header_line));
    for (auto& x : s.blocks) {
        in.read(reinterpret_cast<char*>(x.data()), static_cast<std::streamsize>(x.size() * sizeof(double)));
        if (!in) throw IoError("binary samples file is shorter than its header states");
    }
    if (in.peek() != std::char_traits<char>::eof()) throw IoError("binary samples file has trailing data");
    s.validate();
    return s;
}

std::filesystem::path sidecar_path(const std::filesystem::path& data_path) {
    auto p = data_path;
    p += ".hdr";
    return p;
}

void save_samples(const std::filesystem::path& path, const SampleBlocks& s, SampleFormat format) {
    if (format == SampleFormat::Text) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open " + path.string() + " for writing");
        write_samples_text(out, s);
        if (!out) throw IoError("failed writing " + path.string());
        std::filesystem::remove(sidecar_path(path));
        return;
    }
    std::ofstream data(path, std::ios::binary);
    std::ofstream hdr(sidecar_path(path), std::ios::binary);
    if (!data || !hdr) throw IoError("cannot open " + path.string() + " for writing");
    write_samples_binary(data, s);
    hdr << samples_header(s) << '\n';
    if (!data || !hdr) throw IoError("failed writing " + path.string());
}

SampleBlocks load_samples(const std::filesystem::path& path) {
    const auto side = sidecar_path(path);
    if (std::filesystem::exists(side)) {
        std::ifstream hdr(side, std::ios::binary);
        std::string header;
        if (!std::getline(hdr, header)) throw IoError("empty sidecar header " + side.string());
        std::ifstream data(path, std::ios::binary);
        if (!data) throw IoError("cannot open " + path.string());
        return read_samples_binary(data, header);
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_samples_text(in);
}

}  // namespace nsgms
