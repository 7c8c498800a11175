#include "nsgms/graph_model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "nsgms/errors.hpp"
#include "nsgms/rng.hpp"
#include "text_io.hpp"

namespace nsgms {

Cig::Cig(int p) : p_(p) {
    if (p < 1) throw InvalidParameter("graph needs at least one node");
    adj_.assign(static_cast<std::size_t>(p) * p, 0);
    degree_.assign(p, 0);
}

void Cig::check_index(int i) const {
    if (i < 0 || i >= p_)
        throw IndexOutOfRange("node index " + std::to_string(i) + " outside [0, " +
                              std::to_string(p_) + ")");
}

bool Cig::add_edge(int i, int j) {
    check_index(i);
    check_index(j);
    if (i == j) throw InvalidParameter("self-loops are not allowed");
    auto& e = adj_[static_cast<std::size_t>(i) * p_ + j];
    if (e) return false;
    e = 1;
    adj_[static_cast<std::size_t>(j) * p_ + i] = 1;
    ++degree_[i];
    ++degree_[j];
    ++edge_count_;
    return true;
}

bool Cig::remove_edge(int i, int j) {
    if (!has_edge(i, j)) return false;
    adj_[static_cast<std::size_t>(i) * p_ + j] = 0;
    adj_[static_cast<std::size_t>(j) * p_ + i] = 0;
    --degree_[i];
    --degree_[j];
    --edge_count_;
    return true;
}

bool Cig::has_edge(int i, int j) const {
    check_index(i);
    check_index(j);
    return adj_[static_cast<std::size_t>(i) * p_ + j] != 0;
}

int Cig::degree(int i) const {
    check_index(i);
    return degree_[i];
}

int Cig::max_degree() const noexcept {
    return degree_.empty() ? 0 : *std::max_element(degree_.begin(), degree_.end());
}

std::vector<int> Cig::neighbors(int i) const {
    check_index(i);
    std::vector<int> out;
    out.reserve(degree_[i]);
    for (int j = 0; j < p_; ++j)
        if (adj_[static_cast<std::size_t>(i) * p_ + j]) out.push_back(j);
    return out;
}

std::vector<std::pair<int, int>> Cig::edges() const {
    std::vector<std::pair<int, int>> out;
    out.reserve(edge_count_);
    for (int i = 0; i < p_; ++i)
        for (int j = i + 1; j < p_; ++j)
            if (adj_[static_cast<std::size_t>(i) * p_ + j]) out.emplace_back(i, j);
    return out;
}

namespace {

template <class T>
void shuffle(std::vector<T>& v, KeyedRng& rng) {
    for (std::size_t k = v.size(); k > 1; --k) std::swap(v[k - 1], v[rng.uniform_index(k)]);
}

}  // namespace

Cig random_cig(int p, int s_max, std::uint64_t seed) {
    if (p < 2) throw InvalidParameter("random_cig requires p >= 2");
    if (s_max < 1 || s_max > p - 1) throw InvalidParameter("random_cig requires 1 <= s_max <= p-1");

    KeyedRng rng(derive_key(seed, {0x636967}));
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(p) * (p - 1) / 2);
    for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j) pairs.emplace_back(i, j);
    shuffle(pairs, rng);

    Cig g(p);
    for (auto [i, j] : pairs)
        if (g.degree(i) < s_max && g.degree(j) < s_max) g.add_edge(i, j);

    // Reconnect isolated nodes: first to any node with spare degree, otherwise
    // by stealing an edge {j,k} whose endpoints both keep degree >= 1.
    for (int i = 0; i < p; ++i) {
        if (g.degree(i) > 0) continue;
        std::vector<int> order(p);
        for (int k = 0; k < p; ++k) order[k] = k;
        shuffle(order, rng);
        bool done = false;
        for (int j : order) {
            if (j != i && g.degree(j) < s_max) {
                g.add_edge(i, j);
                done = true;
                break;
            }
        }
        if (done) continue;
        auto edges = g.edges();
        shuffle(edges, rng);
        for (auto [j, k] : edges) {
            if (g.degree(k) >= 2 && g.degree(j) >= 1) {
                g.remove_edge(j, k);
                g.add_edge(i, j);
                done = true;
                break;
            }
            if (g.degree(j) >= 2 && g.degree(k) >= 1) {
                g.remove_edge(j, k);
                g.add_edge(i, k);
                done = true;
                break;
            }
        }
    }
    return g;
}

namespace {

Eigen::MatrixXd invert_spd(const Eigen::MatrixXd& k) {
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("precision matrix is not positive definite");
    Eigen::MatrixXd c = llt.solve(Eigen::MatrixXd::Identity(k.rows(), k.cols()));
    return 0.5 * (c + c.transpose());
}

void check_inverse(const Eigen::MatrixXd& c, const Eigen::MatrixXd& k) {
    const auto p = static_cast<double>(k.rows());
    const Eigen::MatrixXd r = c * k - Eigen::MatrixXd::Identity(k.rows(), k.cols());
    const double err = r.cwiseAbs().rowwise().sum().maxCoeff();
    if (!(err <= 1e-8 * p))
        throw ConstructionFailure("covariance/precision inversion error " + text::fmt(err) +
                                  " exceeds tolerance");
}

}  // namespace

BlockModel BlockModel::from_precisions(int L, double beta, std::vector<Eigen::MatrixXd> precisions) {
    if (precisions.empty()) throw InvalidParameter("model needs at least one block");
    if (L < 1) throw InvalidParameter("block length must be positive");
    if (!(beta >= 1.0)) throw InvalidParameter("beta must be >= 1");
    const auto p = precisions.front().rows();
    if (p < 1) throw InvalidParameter("empty precision matrix");
    BlockModel m;
    m.p = static_cast<int>(p);
    m.B = static_cast<int>(precisions.size());
    m.L = L;
    m.beta = beta;
    m.covariances.reserve(precisions.size());
    for (const auto& k : precisions) {
        if (k.rows() != p || k.cols() != p) throw DimensionMismatch("precision matrices must all be p x p");
        if ((k - k.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, k.cwiseAbs().maxCoeff()))
            throw InvalidParameter("precision matrix is not symmetric");
        m.covariances.push_back(invert_spd(k));
        check_inverse(m.covariances.back(), k);
    }
    m.precisions = std::move(precisions);
    return m;
}

BlockModel build_block_model(const Cig& cig, int B, int L, double beta, double coupling,
                             std::uint64_t seed) {
    if (B < 1) throw InvalidParameter("B must be >= 1");
    if (L < 1) throw InvalidParameter("L must be >= 1");
    if (!(beta > 1.0)) throw InvalidParameter("beta must be > 1");
    if (!(coupling > 0.0 && coupling < 1.0)) throw InvalidParameter("coupling must lie in (0, 1)");

    const int p = cig.p();
    const double s = std::max(1, cig.max_degree());
    const double lo = coupling / (2.0 * s);
    const double hi = coupling / s;
    const auto edges = cig.edges();
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);

    BlockModel m;
    m.p = p;
    m.B = B;
    m.L = L;
    m.beta = beta;
    for (int b = 0; b < B; ++b) {
        KeyedRng rng(derive_key(seed, {0x6b6d, static_cast<std::uint64_t>(b)}));
        Eigen::MatrixXd k = eye;
        for (auto [i, j] : edges) {
            const double mag = rng.uniform(lo, hi);
            const double w = rng.uniform_index(2) ? mag : -mag;
            k(i, j) = w;
            k(j, i) = w;
        }
        if (Eigen::LLT<Eigen::MatrixXd>(k).info() != Eigen::Success)
            throw ConstructionFailure("I + W is not positive definite; coupling too large");

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k, Eigen::EigenvaluesOnly);
        const double kmin = es.eigenvalues()(0);
        const double kmax = es.eigenvalues()(p - 1);
        if (kmax - kmin > 1e-12 * kmax) {
            // eig(K) -> [1/beta, 1], hence eig(C) -> [1, beta]; zero pattern untouched
            const double a = (1.0 - 1.0 / beta) / (kmax - kmin);
            k = a * (k - kmin * eye) + (1.0 / beta) * eye;
        }
        Eigen::MatrixXd c;
        try {
            c = invert_spd(k);
        } catch (const NotPositiveDefinite&) {
            throw ConstructionFailure("rescaled precision lost positive definiteness");
        }
        check_inverse(c, k);
        m.precisions.push_back(std::move(k));
        m.covariances.push_back(std::move(c));
    }
    return m;
}

double partial_correlation(const BlockModel& model, int i, int j) {
    if (i < 0 || i >= model.p || j < 0 || j >= model.p)
        throw IndexOutOfRange("partial_correlation index out of range");
    if (i == j) throw InvalidParameter("partial_correlation requires i != j");
    double acc = 0.0;
    for (const auto& k : model.precisions) {
        const double r = k(i, j) / k(i, i);
        acc += r * r;
    }
    return acc / model.B;
}

Cig cig_from_model(const BlockModel& model) {
    Cig g(model.p);
    for (const auto& k : model.precisions)
        for (int i = 0; i < model.p; ++i)
            for (int j = i + 1; j < model.p; ++j)
                if (k(i, j) != 0.0) g.add_edge(i, j);
    return g;
}

double min_edge_partial_correlation(const BlockModel& model, const Cig& cig) {
    double rho = std::numeric_limits<double>::infinity();
    for (auto [i, j] : cig.edges()) rho = std::min(rho, partial_correlation(model, i, j));
    return rho;
}

ModelReport verify_assumptions(const BlockModel& model, const Cig& cig, double rho_min, int s) {
    if (cig.p() != model.p) throw DimensionMismatch("model and graph disagree on p");
    ModelReport r;
    r.rho_min_achieved = min_edge_partial_correlation(model, cig);
    r.max_degree = cig.max_degree();
    r.eig_min = std::numeric_limits<double>::infinity();
    r.eig_max = -std::numeric_limits<double>::infinity();
    for (const auto& c : model.covariances) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c, Eigen::EigenvaluesOnly);
        r.eig_min = std::min(r.eig_min, es.eigenvalues()(0));
        r.eig_max = std::max(r.eig_max, es.eigenvalues()(model.p - 1));
    }
    r.min_partial_correlation_ok = r.rho_min_achieved >= rho_min;
    r.sparsity_ok = r.max_degree <= s && s < model.p / 3.0 && s < model.L / 3.0;
    r.eigenvalue_bounds_ok =
        r.eig_min >= 1.0 - kEigenvalueTolerance && r.eig_max <= model.beta + kEigenvalueTolerance;
    return r;
}

void write_model(std::ostream& out, const BlockModel& model) {
    out << "nsgms-model v1 p=" << model.p << " B=" << model.B << " L=" << model.L
        << " beta=" << text::fmt(model.beta) << '\n';
    for (int b = 0; b < model.B; ++b) {
        out << "block " << (b + 1) << '\n';
        const auto& k = model.precisions[b];
        for (int i = 0; i < model.p; ++i) {
            for (int j = 0; j < model.p; ++j) {
                if (j) out << ' ';
                out << text::fmt(k(i, j));
            }
            out << '\n';
        }
    }
}

BlockModel read_model(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty model file");
    const auto h = text::parse_header(line, "nsgms-model");
    const auto p = text::to_int(text::require_field(h, "p"), "p");
    const auto B = text::to_int(text::require_field(h, "B"), "B");
    const auto L = text::to_int(text::require_field(h, "L"), "L");
    const double beta = text::to_double(text::require_field(h, "beta"), "beta");
    if (p < 1 || B < 1 || L < 1) throw IoError("model header has nonpositive dimensions");

    std::vector<Eigen::MatrixXd> ks;
    ks.reserve(B);
    for (long long b = 1; b <= B; ++b) {
        if (text::read_token(in, "block marker") != "block") throw IoError("expected 'block' line");
        if (text::to_int(text::read_token(in, "block index"), "block index") != b)
            throw IoError("block indices out of order");
        Eigen::MatrixXd k(p, p);
        for (long long i = 0; i < p; ++i)
            for (long long j = 0; j < p; ++j)
                k(i, j) = text::to_double(text::read_token(in, "precision entry"), "precision entry");
        ks.push_back(std::move(k));
    }
    return BlockModel::from_precisions(static_cast<int>(L), beta, std::move(ks));
}

}  // namespace nsgms
