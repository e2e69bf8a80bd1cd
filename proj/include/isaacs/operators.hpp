#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "isaacs/errors.hpp"
#include "isaacs/extended.hpp"
#include "isaacs/grid.hpp"
#include "isaacs/model.hpp"

namespace isaacs {

/// Finite differences of a field at one interior node.
struct NodeDerivs {
    int d = 1;
    double h = 1.0;
    double u0 = 0.0;
    std::array<double, 2> d2{};  ///< central second differences
    std::array<double, 2> dp{};  ///< forward differences
    std::array<double, 2> dm{};  ///< backward differences
    double tp = 0.0;             ///< mixed derivative along e1+e2
    double tm = 0.0;             ///< mixed derivative along e1-e2
};

inline NodeDerivs node_derivatives(const Grid& g, const ScalarField& u, int node) {
    if (g.kind(node) != NodeKind::Interior)
        throw DiscretizationError("operator evaluated off the interior at " + g.describe(node));
    NodeDerivs D;
    D.d = g.dim();
    D.h = g.h();
    D.u0 = u[static_cast<std::size_t>(node)];
    const double h = g.h(), h2 = h * h;
    auto at = [&](int s0, int s1) {
        const int nb = g.neighbor(node, {s0, s1, 0});
        if (nb < 0 || g.kind(nb) == NodeKind::Exterior)
            throw DiscretizationError("stencil out of range at " + g.describe(node));
        return u[static_cast<std::size_t>(nb)];
    };
    for (int i = 0; i < D.d; ++i) {
        const double up = i == 0 ? at(1, 0) : at(0, 1);
        const double um = i == 0 ? at(-1, 0) : at(0, -1);
        D.d2[static_cast<std::size_t>(i)] = (up - 2.0 * D.u0 + um) / h2;
        D.dp[static_cast<std::size_t>(i)] = (up - D.u0) / h;
        D.dm[static_cast<std::size_t>(i)] = (D.u0 - um) / h;
    }
    if (D.d == 2) {
        const double avg = 0.5 * (D.d2[0] + D.d2[1]);
        D.tp = (at(1, 1) + at(-1, -1) - 2.0 * D.u0) / (2.0 * h2) - avg;
        D.tm = avg - (at(1, -1) + at(-1, 1) - 2.0 * D.u0) / (2.0 * h2);
    }
    return D;
}

/// a:D^2_h u with the diagonal (sign-selected) form for the cross term.
inline double second_order(const NodeDerivs& D, const SqMat& a) {
    if (D.d == 1) return a(0, 0) * D.d2[0];
    const double a12 = a(0, 1);
    return a(0, 0) * D.d2[0] + a(1, 1) * D.d2[1] + 2.0 * a12 * (a12 >= 0.0 ? D.tp : D.tm);
}

/// b.D_h u with upwinding by the sign of each component.
inline double first_order(const NodeDerivs& D, const Point& b) {
    double s = 0.0;
    for (int i = 0; i < D.d; ++i) {
        const double bi = b(i);
        s += bi > 0.0 ? bi * D.dp[static_cast<std::size_t>(i)] : bi * D.dm[static_cast<std::size_t>(i)];
    }
    return s;
}

inline double apply_L(const NodeDerivs& D, const LocalCoeffs& k) {
    return (second_order(D, k.a) + first_order(D, k.b)) - k.c * D.u0;
}

/// Linear stencil of L at a node: center weight plus neighbour weights.
struct Stencil {
    double center = 0.0;
    int n = 0;
    std::array<std::pair<std::array<int, kMaxDim>, double>, 12> nb{};

    void add(int s0, int s1, double w) {
        for (int i = 0; i < n; ++i)
            if (nb[static_cast<std::size_t>(i)].first[0] == s0 && nb[static_cast<std::size_t>(i)].first[1] == s1) {
                nb[static_cast<std::size_t>(i)].second += w;
                return;
            }
        nb[static_cast<std::size_t>(n++)] = {{s0, s1, 0}, w};
    }
};

inline Stencil make_stencil(int d, double h, const LocalCoeffs& k) {
    Stencil s;
    const double h2 = h * h;
    for (int i = 0; i < d; ++i) {
        const double aii = k.a(i, i);
        const int e0 = i == 0, e1 = i == 1;
        s.center -= 2.0 * aii / h2;
        s.add(e0, e1, aii / h2);
        s.add(-e0, -e1, aii / h2);
        const double bi = k.b(i);
        if (bi > 0.0) {
            s.center -= bi / h;
            s.add(e0, e1, bi / h);
        } else {
            s.center += bi / h;
            s.add(-e0, -e1, -bi / h);
        }
    }
    if (d == 2) {
        const double a12 = k.a(0, 1), m = std::abs(a12);
        s.center += 2.0 * m / h2;
        for (int i = 0; i < 2; ++i) {
            const int e0 = i == 0, e1 = i == 1;
            s.add(e0, e1, -m / h2);
            s.add(-e0, -e1, -m / h2);
        }
        if (a12 >= 0.0) {
            s.add(1, 1, m / h2);
            s.add(-1, -1, m / h2);
        } else {
            s.add(1, -1, m / h2);
            s.add(-1, 1, m / h2);
        }
    }
    s.center -= k.c;
    return s;
}

/// Grid plus the game coefficients precomputed at every interior node.
class DiscreteGame {
public:
    DiscreteGame(GameCoefficients game, std::shared_ptr<const Grid> grid)
        : game_(std::move(game)), grid_(std::move(grid)) {
        if (game_.dim() != grid_->dim()) throw ConfigError("grid and problem dimensions differ");
        nA_ = game_.alphas().size();
        nB_ = game_.betas().size();
        const auto& in = grid_->interior_nodes();
        table_.resize(in.size() * static_cast<std::size_t>(nA_ * nB_));
        for (std::size_t s = 0; s < in.size(); ++s) {
            const Point x = grid_->position(in[s]);
            for (int ia = 0; ia < nA_; ++ia)
                for (int ib = 0; ib < nB_; ++ib) table_[index(static_cast<int>(s), ia, ib)] = game_.local(ia, ib, x);
        }
    }

    const Grid& grid() const { return *grid_; }
    std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
    const GameCoefficients& game() const { return game_; }
    int n_alpha() const { return nA_; }
    int n_beta() const { return nB_; }
    const LocalCoeffs& coeffs(int slot, int ia, int ib) const { return table_[index(slot, ia, ib)]; }
    double boundary_value(int node) const { return game_.terminal(grid_->position(node)); }

    /// g on every non-interior node, zero inside.
    ScalarField boundary_field() const {
        ScalarField u(static_cast<std::size_t>(grid_->size()), 0.0);
        for (int n : grid_->boundary_nodes()) u[static_cast<std::size_t>(n)] = boundary_value(n);
        return u;
    }

private:
    std::size_t index(int slot, int ia, int ib) const {
        return static_cast<std::size_t>((slot * nA_ + ia) * nB_ + ib);
    }

    GameCoefficients game_;
    std::shared_ptr<const Grid> grid_;
    int nA_ = 1, nB_ = 1;
    std::vector<LocalCoeffs> table_;
};

inline double apply_L(const DiscreteGame& dg, const ScalarField& u, int ia, int ib, int node) {
    const auto D = node_derivatives(dg.grid(), u, node);
    return apply_L(D, dg.coeffs(dg.grid().slot(node), ia, ib));
}

struct HamiltonianValue {
    double value = 0.0;
    int alpha = 0;
    int beta = 0;
};

/// max over alpha of min over beta of L u + f; lowest index wins ties.
inline HamiltonianValue isaacs_H(const DiscreteGame& dg, const NodeDerivs& D, int slot) {
    HamiltonianValue best{-std::numeric_limits<double>::infinity(), 0, 0};
    for (int ia = 0; ia < dg.n_alpha(); ++ia) {
        double m = std::numeric_limits<double>::infinity();
        int mb = 0;
        for (int ib = 0; ib < dg.n_beta(); ++ib) {
            const auto& k = dg.coeffs(slot, ia, ib);
            const double v = apply_L(D, k) + k.f;
            if (v < m) m = v, mb = ib;
        }
        if (m > best.value) best = {m, ia, mb};
    }
    return best;
}

inline HamiltonianValue isaacs_H(const DiscreteGame& dg, const ScalarField& u, int node) {
    return isaacs_H(dg, node_derivatives(dg.grid(), u, node), dg.grid().slot(node));
}

struct PucciValue {
    double value = 0.0;
    LocalCoeffs maximizer;  ///< (a, b, c) attaining the sup; f = 0
    double spread = 0.0;    ///< largest eigenvalue spread among the candidate Hessians
};

/// Sup over the Pucci set of the monotone stencil, plus dh^{-1} times the
/// largest upwind one-sided slope (l-infinity), minus dh u.
///
/// In d = 2 the stencil depends on the sign of a12, so the sup is taken over
/// three candidates: the maximizer of tr(a H+) and of tr(a H-) (H+- use the
/// e1+-e2 mixed differences) and the best diagonal matrix. Their max equals the
/// sup of the stencil over the whole set.
inline PucciValue pucci_P(const NodeDerivs& D, double dh) {
    if (!(dh > 0.0 && dh < 1.0)) throw ConfigError("delta_hat must lie in (0, 1)");
    const double inv = 1.0 / dh;
    PucciValue out;
    const int d = D.d;
    out.maximizer.c = dh;
    out.maximizer.f = 0.0;
    out.maximizer.b = Point::Zero(d);
    double s2;
    if (d == 1) {
        const double a = D.d2[0] > 0.0 ? inv : dh;
        out.maximizer.a = SqMat::Constant(1, 1, a);
        s2 = second_order(D, out.maximizer.a);
    } else {
        SqMat ad = SqMat::Zero(2, 2);
        ad(0, 0) = D.d2[0] > 0.0 ? inv : dh;
        ad(1, 1) = D.d2[1] > 0.0 ? inv : dh;
        out.maximizer.a = ad;
        s2 = second_order(D, ad);
        for (double t : {D.tp, D.tm}) {
            SqMat H(2, 2);
            H << D.d2[0], t, t, D.d2[1];
            Eigen::SelfAdjointEigenSolver<SqMat> es(H);
            if (es.info() != Eigen::Success) throw InternalError("eigen-decomposition of the discrete Hessian failed");
            const auto& mu = es.eigenvalues();
            out.spread = std::max(out.spread, mu.maxCoeff() - mu.minCoeff());
            Point lam(2);
            for (int i = 0; i < 2; ++i) lam(i) = mu(i) > 0.0 ? inv : dh;
            SqMat a = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
            a(1, 0) = a(0, 1);
            const double v = second_order(D, a);
            if (v > s2) s2 = v, out.maximizer.a = a;
        }
    }
    double g = 0.0;
    int gi = -1;
    for (int i = 0; i < d; ++i) {
        const double fwd = D.dp[static_cast<std::size_t>(i)], bwd = -D.dm[static_cast<std::size_t>(i)];
        if (fwd > g) g = fwd, gi = 2 * i;
        if (bwd > g) g = bwd, gi = 2 * i + 1;
    }
    if (gi >= 0) out.maximizer.b(gi / 2) = gi % 2 == 0 ? inv : -inv;
    out.value = (s2 + inv * g) - dh * D.u0;
    return out;
}

inline double pucci_P(const Grid& g, const ScalarField& u, int node, double dh) {
    return pucci_P(node_derivatives(g, u, node), dh).value;
}

inline double regularized_residual(const DiscreteGame& dg, const ScalarField& u, int node, double K, double dh) {
    const auto D = node_derivatives(dg.grid(), u, node);
    const double H = isaacs_H(dg, D, dg.grid().slot(node)).value;
    return std::max(H, pucci_P(D, dh).value - K);
}

/// A2 vertices as local coefficients with running cost -K.
inline std::vector<LocalCoeffs> a2_local(const std::vector<ConstantControl>& a2, double K) {
    std::vector<LocalCoeffs> out;
    out.reserve(a2.size());
    for (const auto& v : a2) out.push_back({v.a, v.b, v.c, -K});
    return out;
}

/// Hamiltonian of the extended game over A1 u A2. alpha indexes A1 first, then A2.
inline HamiltonianValue extended_hamiltonian(const DiscreteGame& dg, const std::vector<LocalCoeffs>& a2,
                                             const NodeDerivs& D, int slot) {
    HamiltonianValue best = isaacs_H(dg, D, slot);
    for (std::size_t k = 0; k < a2.size(); ++k) {
        const double v = apply_L(D, a2[k]) + a2[k].f;
        if (v > best.value) best = {v, dg.n_alpha() + static_cast<int>(k), 0};
    }
    return best;
}

inline HamiltonianValue extended_hamiltonian(const DiscreteGame& dg, const ExtendedProblem& ep, const ScalarField& u,
                                             int node) {
    return extended_hamiltonian(dg, a2_local(ep.a2, ep.K), node_derivatives(dg.grid(), u, node), dg.grid().slot(node));
}

struct MonotonicityReport {
    bool monotone = true;
    int violations = 0;
    double worst_excess = 0.0;  ///< max of sum_j |a_ij| - a_ii over checked matrices
    std::string first_offender;
};

/// Diagonal dominance of every diffusion matrix the scheme will use. With
/// delta_hat given, also checks the Pucci set (d = 2 needs delta_hat >= sqrt(2) - 1).
inline MonotonicityReport monotonicity_report(const DiscreteGame& dg, std::optional<PucciSpec> pucci = std::nullopt) {
    MonotonicityReport r;
    const int d = dg.grid().dim();
    auto check = [&](const SqMat& a, const std::string& where) {
        for (int i = 0; i < d; ++i) {
            double off = 0.0;
            for (int j = 0; j < d; ++j)
                if (j != i) off += std::abs(a(i, j));
            const double excess = off - a(i, i);
            if (excess > 1e-13 * std::max(1.0, a(i, i))) {
                if (r.violations == 0) r.first_offender = where;
                ++r.violations;
                r.monotone = false;
            }
            r.worst_excess = std::max(r.worst_excess, excess);
        }
    };
    const auto& in = dg.grid().interior_nodes();
    for (std::size_t s = 0; s < in.size(); ++s)
        for (int ia = 0; ia < dg.n_alpha(); ++ia)
            for (int ib = 0; ib < dg.n_beta(); ++ib)
                check(dg.coeffs(static_cast<int>(s), ia, ib).a,
                      dg.game().alphas().label(ia) + "/" + dg.game().betas().label(ib) + " at " +
                          dg.grid().describe(in[s]));
    if (pucci) {
        for (const auto& v : a2_vertex_family(d, *pucci)) check(v.a, v.label);
        if (d == 2 && pucci->delta_hat < std::sqrt(2.0) - 1.0 - 1e-12) {
            if (r.violations == 0) r.first_offender = "Pucci set (delta_hat below sqrt(2)-1)";
            ++r.violations;
            r.monotone = false;
        }
    }
    return r;
}

}  // namespace isaacs
