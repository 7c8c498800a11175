#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace nsgms {

// Undirected simple graph on nodes 0..p-1. Text formats use 1-based labels.
class Cig {
public:
    explicit Cig(int p);

    int p() const noexcept { return p_; }

    // Returns false if the edge already exists. Throws on self-loops or bad indices.
    bool add_edge(int i, int j);
    bool remove_edge(int i, int j);
    bool has_edge(int i, int j) const;

    int degree(int i) const;
    int max_degree() const noexcept;
    std::size_t edge_count() const noexcept { return edge_count_; }

    // sorted ascending
    std::vector<int> neighbors(int i) const;
    // pairs (i, j) with i < j, sorted lexicographically
    std::vector<std::pair<int, int>> edges() const;

    bool operator==(const Cig& other) const = default;

private:
    void check_index(int i) const;

    int p_;
    std::vector<std::uint8_t> adj_;
    std::vector<int> degree_;
    std::size_t edge_count_ = 0;
};

// Random graph with max degree <= s_max. Isolated nodes left over by the
// random fill are reconnected where the degree bound allows it.
Cig random_cig(int p, int s_max, std::uint64_t seed);

// Per-block precision/covariance pairs of the block-wise i.i.d. process.
struct BlockModel {
    int p = 0;
    int B = 0;
    int L = 0;
    double beta = 1.0;
    std::vector<Eigen::MatrixXd> precisions;
    std::vector<Eigen::MatrixXd> covariances;

    long long N() const noexcept { return static_cast<long long>(B) * L; }

    // Builds a model from precision matrices, inverting them to get the
    // covariances. Throws NotPositiveDefinite if some K^(b) is not SPD.
    static BlockModel from_precisions(int L, double beta, std::vector<Eigen::MatrixXd> precisions);
};

// K^(b) = I + W^(b) with W supported on the edges of `cig`, redrawn per block,
// followed by an affine map of the spectrum of K^(b) onto [1/beta, 1] so that
// every covariance eigenvalue lies in [1, beta].
BlockModel build_block_model(const Cig& cig, int B, int L, double beta, double coupling,
                             std::uint64_t seed);

// Average partial correlation (1/B) sum_b (K_ij / K_ii)^2.
double partial_correlation(const BlockModel& model, int i, int j);

// Edges are the off-diagonal entries that are nonzero in at least one block.
Cig cig_from_model(const BlockModel& model);

struct ModelReport {
    double rho_min_achieved = 0.0;  // +inf when the graph has no edges
    int max_degree = 0;
    double eig_min = 0.0;
    double eig_max = 0.0;
    bool min_partial_correlation_ok = false;
    bool sparsity_ok = false;
    bool eigenvalue_bounds_ok = false;

    bool all_ok() const noexcept {
        return min_partial_correlation_ok && sparsity_ok && eigenvalue_bounds_ok;
    }
};

inline constexpr double kEigenvalueTolerance = 1e-9;

ModelReport verify_assumptions(const BlockModel& model, const Cig& cig, double rho_min, int s);

// Smallest partial correlation over the edges of `cig`, +inf without edges.
double min_edge_partial_correlation(const BlockModel& model, const Cig& cig);

// `nsgms-model v1` text format.
void write_model(std::ostream& out, const BlockModel& model);
BlockModel read_model(std::istream& in);

}  // namespace nsgms
