#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "isaacs/coef_fn.hpp"
#include "isaacs/errors.hpp"
#include "isaacs/types.hpp"

namespace isaacs {

/// Finite ordered set of control labels.
class ControlSet {
public:
    ControlSet() = default;
    explicit ControlSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
        if (labels_.empty()) throw ConfigError("control set must not be empty");
        std::set<std::string> seen(labels_.begin(), labels_.end());
        if (seen.size() != labels_.size()) throw ConfigError("control labels must be distinct");
    }
    int size() const { return static_cast<int>(labels_.size()); }
    const std::string& label(int i) const { return labels_.at(static_cast<std::size_t>(i)); }
    const std::vector<std::string>& labels() const { return labels_; }
    int index_of(const std::string& l) const {
        for (int i = 0; i < size(); ++i)
            if (labels_[static_cast<std::size_t>(i)] == l) return i;
        return -1;
    }

private:
    std::vector<std::string> labels_;
};

struct Constants {
    double K0 = 1.0;
    double delta = 0.5;
    std::optional<double> delta1;  ///< lower bound on c, whole-space mode only
};

/// Coefficients of one (alpha, beta) pair. sigma is stored row-major, d x d1.
struct ControlEntry {
    std::vector<CoefFn> sigma;
    std::vector<CoefFn> b;
    CoefFn c;
    CoefFn f;
};

/// a = sigma sigma' / 2.
template <class Derived>
SqMat diffusion_from_sigma(const Eigen::MatrixBase<Derived>& sigma) {
    if (sigma.rows() < 1 || sigma.cols() < sigma.rows())
        throw ConfigError("diffusion_from_sigma: need d1 >= d >= 1");
    if (sigma.rows() > kMaxDim) throw ConfigError("diffusion_from_sigma: dimension above supported maximum");
    SqMat a = 0.5 * (sigma * sigma.transpose());
    return 0.5 * (a + a.transpose());
}

/// Game data: sigma, b, c, f over (alpha, beta, x), terminal cost g, and the constants.
class GameCoefficients {
public:
    GameCoefficients() = default;
    GameCoefficients(int dim, int noise_dim, ControlSet A, ControlSet B, std::vector<ControlEntry> table, CoefFn g,
                     Constants k)
        : dim_(dim), noise_dim_(noise_dim), A_(std::move(A)), B_(std::move(B)), table_(std::move(table)),
          g_(std::move(g)), k_(k) {
        if (dim_ < 1 || dim_ > kMaxDim) throw ConfigError("dimension must be in [1, 3]");
        if (noise_dim_ < dim_ || noise_dim_ > kMaxNoise) throw ConfigError("noise dimension d1 must be in [d, 6]");
        if (static_cast<int>(table_.size()) != A_.size() * B_.size())
            throw ConfigError("coefficient table size must equal |A|*|B|");
        for (const auto& e : table_) {
            if (static_cast<int>(e.sigma.size()) != dim_ * noise_dim_) throw ConfigError("sigma must be d x d1");
            if (static_cast<int>(e.b.size()) != dim_) throw ConfigError("b must have d components");
        }
        if (!(k_.delta > 0.0 && k_.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
        if (!(k_.K0 > 0.0)) throw ConfigError("K0 must be positive");
        if (k_.delta1 && !(*k_.delta1 > 0.0)) throw ConfigError("delta1 must be positive");
    }

    int dim() const { return dim_; }
    int noise_dim() const { return noise_dim_; }
    const ControlSet& alphas() const { return A_; }
    const ControlSet& betas() const { return B_; }
    const Constants& constants() const { return k_; }
    const CoefFn& terminal_fn() const { return g_; }
    const ControlEntry& entry(int ia, int ib) const {
        return table_.at(static_cast<std::size_t>(ia * B_.size() + ib));
    }
    const std::vector<ControlEntry>& table() const { return table_; }

    SigmaMat sigma(int ia, int ib, const Point& x) const {
        const auto& e = entry(ia, ib);
        SigmaMat s(dim_, noise_dim_);
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < noise_dim_; ++j) s(i, j) = e.sigma[static_cast<std::size_t>(i * noise_dim_ + j)](x);
        return s;
    }
    Point drift(int ia, int ib, const Point& x) const {
        const auto& e = entry(ia, ib);
        Point b(dim_);
        for (int i = 0; i < dim_; ++i) b(i) = e.b[static_cast<std::size_t>(i)](x);
        return b;
    }
    double discount(int ia, int ib, const Point& x) const { return entry(ia, ib).c(x); }
    double running_cost(int ia, int ib, const Point& x) const { return entry(ia, ib).f(x); }
    double terminal(const Point& x) const { return g_(x); }

    LocalCoeffs local(int ia, int ib, const Point& x) const {
        return {diffusion_from_sigma(sigma(ia, ib, x)), drift(ia, ib, x), discount(ia, ib, x), running_cost(ia, ib, x)};
    }

    GameCoefficients with_table(std::vector<ControlEntry> table, CoefFn g) const {
        return GameCoefficients(dim_, noise_dim_, A_, B_, std::move(table), std::move(g), k_);
    }
    GameCoefficients with_constants(Constants k) const {
        return GameCoefficients(dim_, noise_dim_, A_, B_, table_, g_, k);
    }

private:
    int dim_ = 1;
    int noise_dim_ = 1;
    ControlSet A_, B_;
    std::vector<ControlEntry> table_;
    CoefFn g_;
    Constants k_;
};

/// L u = a:D^2u + b.Du - c u for a smooth u given by value, gradient and Hessian.
inline double apply_L_smooth(const LocalCoeffs& k, double u, const Point& du, const SqMat& d2u) {
    return (k.a.cwiseProduct(d2u)).sum() + k.b.dot(du) - k.c * u;
}

}  // namespace isaacs
