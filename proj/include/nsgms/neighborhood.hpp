#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nsgms/graph_model.hpp"
#include "nsgms/sampler.hpp"

namespace nsgms {

struct EstimatorConfig {
    int s = 0;              // largest candidate neighbourhood considered
    double lambda = 0.0;    // penalty per selected index
    double rank_tol = 1e-10;

    void validate() const;
};

struct NeighborhoodEstimate {
    int node = 0;
    std::vector<int> selected;  // sorted, never contains `node`
    double objective = 0.0;     // Z(selected) + lambda * |selected|
    std::uint64_t evaluated = 0;
};

enum class CombineRule { Or, And };

// Applies the projection onto the orthogonal complement of
// span{ row j of block_data : j in T } to x (length L).
//
// The span basis is built by Gram-Schmidt with one reorthogonalization pass;
// a column whose orthogonalized norm falls below rank_tol times its original
// norm is treated as linearly dependent and skipped.
Eigen::VectorXd project_complement(const Eigen::MatrixXd& block_data, std::span<const int> T,
                                   const Eigen::VectorXd& x, double rank_tol = 1e-10);

// Z(T) = (1/N) sum_b |P_{T-perp}^(b) x_i^(b)|^2, evaluated directly on the
// length-L block components.
double residual_statistic(const SampleBlocks& samples, int i, std::span<const int> T,
                          double rank_tol = 1e-10);

// Compressed form of SampleBlocks that preserves every inner product between
// components within a block. For block data X (p x L) with X^T = Q R, the
// component x_j equals Q r_j, where r_j is column j of R. Projection residual
// norms computed on the columns of R are identical to those on X, so Z(T) costs
// O(p^2) per block instead of O(L).
//
// Columns can be absorbed in chunks (streaming TSQR), which lets the Monte
// Carlo harness process very long blocks without holding them in memory.
class ReducedBlocks {
public:
    ReducedBlocks(int p, int B);

    static ReducedBlocks from_samples(const SampleBlocks& samples);

    // `columns` is p x m: m further observations of block b.
    void absorb(int b, const Eigen::Ref<const Eigen::MatrixXd>& columns);

    int p() const noexcept { return p_; }
    int B() const noexcept { return static_cast<int>(factors_.size()); }
    long long N() const noexcept;
    long long block_length(int b) const { return counts_.at(b); }
    long long min_block_length() const noexcept;

    // k x p upper-trapezoidal factor, k = min(block_length(b), p)
    const Eigen::MatrixXd& factor(int b) const { return factors_.at(b); }

private:
    int p_;
    std::vector<Eigen::MatrixXd> factors_;
    std::vector<long long> counts_;
};

double residual_statistic(const ReducedBlocks& reduced, int i, std::span<const int> T,
                          double rank_tol = 1e-10);

// Exhaustive penalized search: argmin over T subset of {0..p-1}\{i}, |T| <= s,
// of Z(T) + lambda |T|. Ties go to the smaller set, then to the
// lexicographically smaller sorted index tuple.
//
// Throws InfeasibleConfig when s >= L or s >= p.
NeighborhoodEstimate estimate_neighborhood(const SampleBlocks& samples, int i,
                                           const EstimatorConfig& config);
NeighborhoodEstimate estimate_neighborhood(const ReducedBlocks& reduced, int i,
                                           const EstimatorConfig& config);

// Per-node estimates combined into an undirected graph (OR: either endpoint
// selects the other; AND: both do).
Cig estimate_graph(const SampleBlocks& samples, const EstimatorConfig& config,
                   CombineRule combine = CombineRule::Or, int threads = 1);
Cig estimate_graph(const ReducedBlocks& reduced, const EstimatorConfig& config,
                   CombineRule combine = CombineRule::Or, int threads = 1);
Cig combine_neighborhoods(int p, const std::vector<NeighborhoodEstimate>& estimates,
                          CombineRule combine);

// lambda = rho_min / 6
double default_lambda(double rho_min);

// 864 (beta / rho_min) log(6 p s^2 / eta)
double sample_size_bound(double beta, double rho_min, double p, double s, double eta);

// rho_min >= 24 beta / L
bool rho_condition_holds(double rho_min, double beta, double L);

// Number of candidate sets with at most s of the p-1 other indices.
std::uint64_t candidate_set_count(int p, int s);

// `node <i>: {j1,j2} objective=<value>` with 1-based labels.
std::string format_neighborhood(const NeighborhoodEstimate& estimate);
// `edge i j` lines, i < j, 1-based, sorted.
void write_edge_list(std::ostream& out, const Cig& graph);

CombineRule parse_combine_rule(const std::string& name);

}  // namespace nsgms
