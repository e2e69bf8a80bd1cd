#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "isaacs/errors.hpp"
#include "isaacs/model.hpp"
#include "isaacs/types.hpp"

namespace isaacs {

enum class DomainKind { Ball, Ellipse };

/// Psi(x) = kappa (e^mu - e^{mu q(x)}) with q(x) = sum_i x_i^2 / r_i^2.
///
/// G = {q < 1} is a ball (all r_i equal) or an axis-aligned ellipse centred at
/// the origin. Psi > 0 in G, Psi = 0 on the boundary, and Psi -> -inf at infinity.
class Barrier {
public:
    struct Eval {
        double psi;
        Point grad;
        SqMat hess;
    };

    Barrier(DomainKind kind, Point axes, double mu, double kappa)
        : kind_(kind), axes_(std::move(axes)), mu_(mu), kappa_(kappa) {
        if (axes_.size() < 1 || axes_.size() > kMaxDim) throw ConfigError("barrier dimension out of range");
        for (int i = 0; i < axes_.size(); ++i)
            if (!(axes_(i) > 0.0)) throw ConfigError("domain radius/axes must be positive");
        if (!(mu_ > 0.0) || !(kappa_ > 0.0)) throw BarrierError("barrier parameters must be positive");
        m_ = axes_.cwiseInverse().cwiseAbs2();
    }

    DomainKind kind() const { return kind_; }
    int dim() const { return static_cast<int>(axes_.size()); }
    const Point& axes() const { return axes_; }
    double mu() const { return mu_; }
    double kappa() const { return kappa_; }
    double bounding_radius() const { return axes_.maxCoeff(); }
    /// Trace of the normalizing matrix M = diag(1 / r_i^2).
    double trace_m() const { return m_.sum(); }

    double q(const Point& x) const { return m_.dot(x.cwiseAbs2()); }

    double psi(const Point& x) const { return kappa_ * (std::exp(mu_) - std::exp(mu_ * q(x))); }

    Point grad_psi(const Point& x) const {
        return -kappa_ * mu_ * std::exp(mu_ * q(x)) * 2.0 * m_.cwiseProduct(x);
    }

    SqMat hess_psi(const Point& x) const { return eval(x).hess; }

    Eval eval(const Point& x) const {
        const double e = std::exp(mu_ * q(x));
        const Point mx = m_.cwiseProduct(x);
        const double s = -kappa_ * mu_ * e;
        SqMat h = SqMat(4.0 * mu_ * (mx * mx.transpose()));
        h.diagonal() += 2.0 * m_;
        return {kappa_ * (std::exp(mu_) - e), s * 2.0 * mx, s * h};
    }

    double psi_max() const { return psi(Point::Zero(dim())); }

    /// Smallest |D Psi| over the boundary: 2 kappa mu e^mu / r_max.
    double boundary_gradient_floor() const { return 2.0 * kappa_ * mu_ * std::exp(mu_) / bounding_radius(); }

    /// Point where the ray from the origin along dir meets the boundary.
    Point boundary_point(const Point& dir) const {
        const double n = dir.norm();
        if (!(n > 0.0)) throw ConfigError("boundary_point: zero direction");
        const Point u = dir / n;
        return u / std::sqrt(q(u));
    }

    Barrier with_kappa(double kappa) const { return Barrier(kind_, axes_, mu_, kappa); }

private:
    DomainKind kind_;
    Point axes_;
    double mu_;
    double kappa_;
    Point m_;
};

/// Lattice points of spacing h covering the closure of G.
inline std::vector<Point> lattice_points(const Point& half_widths, double h) {
    const int d = static_cast<int>(half_widths.size());
    std::vector<int> m(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) m[static_cast<std::size_t>(i)] = static_cast<int>(std::ceil(half_widths(i) / h - 1e-12));
    std::vector<Point> out;
    std::vector<int> idx(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) idx[static_cast<std::size_t>(i)] = -m[static_cast<std::size_t>(i)];
    while (true) {
        Point p(d);
        for (int i = 0; i < d; ++i) p(i) = idx[static_cast<std::size_t>(i)] * h;
        out.push_back(p);
        int k = 0;
        while (k < d && ++idx[static_cast<std::size_t>(k)] > m[static_cast<std::size_t>(k)]) {
            idx[static_cast<std::size_t>(k)] = -m[static_cast<std::size_t>(k)];
            ++k;
        }
        if (k == d) break;
    }
    return out;
}

/// Sample directions: {+-1} in 1D, n equally spaced angles in 2D, axes and
/// diagonals in 3D.
inline std::vector<Point> sample_directions(int d, int n = 64) {
    std::vector<Point> out;
    if (d == 1) {
        out.push_back(Point::Constant(1, 1.0));
        out.push_back(Point::Constant(1, -1.0));
    } else if (d == 2) {
        for (int k = 0; k < n; ++k) {
            const double t = 2.0 * M_PI * k / n;
            Point p(2);
            p << std::cos(t), std::sin(t);
            out.push_back(p);
        }
    } else {
        for (int a = -1; a <= 1; ++a)
            for (int b = -1; b <= 1; ++b)
                for (int c = -1; c <= 1; ++c) {
                    if (a == 0 && b == 0 && c == 0) continue;
                    Point p(3);
                    p << a, b, c;
                    out.push_back(p.normalized());
                }
    }
    return out;
}

/// Interior lattice points of G used to verify L Psi + c Psi <= -1.
inline std::vector<Point> barrier_verification_points(const Barrier& bar, double h) {
    std::vector<Point> out;
    for (auto& p : lattice_points(bar.axes(), h))
        if (bar.psi(p) > 0.0) out.push_back(p);
    return out;
}

/// max over points in G and (alpha, beta) of L Psi + c Psi + 1. Nonpositive means pass.
inline double verify_barrier(const Barrier& bar, const GameCoefficients& game, const std::vector<Point>& points) {
    if (bar.dim() != game.dim()) throw ConfigError("verify_barrier: dimension mismatch");
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& x : points) {
        const auto e = bar.eval(x);
        if (!(e.psi > 0.0)) continue;
        for (int ia = 0; ia < game.alphas().size(); ++ia)
            for (int ib = 0; ib < game.betas().size(); ++ib) {
                const auto k = game.local(ia, ib, x);
                const double v = apply_L_smooth(k, e.psi, e.grad, e.hess) + k.c * e.psi + 1.0;
                worst = std::max(worst, v);
            }
    }
    return worst;
}

namespace detail {

inline double sup_drift(const GameCoefficients& game, const std::vector<Point>& pts) {
    double s = 0.0;
    for (const auto& x : pts)
        for (int ia = 0; ia < game.alphas().size(); ++ia)
            for (int ib = 0; ib < game.betas().size(); ++ib) s = std::max(s, game.drift(ia, ib, x).norm());
    return s;
}

inline Barrier make_quadratic_barrier(DomainKind kind, const Point& axes, const GameCoefficients& game, double h) {
    if (axes.size() != game.dim()) throw ConfigError("domain dimension does not match problem dimension");
    const Barrier probe(kind, axes, 1.0, 1.0);
    const auto pts = barrier_verification_points(probe, h);
    if (pts.empty()) throw BarrierError("verification lattice has no interior points; decrease h");
    // Bracket of -(L Psi + c Psi) / (kappa mu e^{mu q}) is at least
    // 2 delta tr M - B^2 / (4 mu delta); keep half of the leading term.
    const double delta = game.constants().delta;
    const double B = detail::sup_drift(game, pts);
    const double need = std::max(1.0, B * B / (4.0 * delta * delta * probe.trace_m()));
    double mu = 1.0;
    while (mu < need) mu *= 2.0;
    double kappa = std::ldexp(1.0, -20);
    for (int it = 0; it < 64; ++it, kappa *= 2.0) {
        const Barrier bar(kind, axes, mu, kappa);
        if (bar.boundary_gradient_floor() < 1.0) continue;
        if (verify_barrier(bar, game, pts) <= 0.0) return bar;
    }
    throw BarrierError("barrier parameter search exhausted its iteration budget");
}

}  // namespace detail

/// Ball of radius R. mu and kappa are powers of two; see README for the selection rule.
inline Barrier make_ball_barrier(double R, const GameCoefficients& game, double verification_h = 1.0 / 64) {
    if (!(R > 0.0)) throw ConfigError("ball radius must be positive");
    return detail::make_quadratic_barrier(DomainKind::Ball, Point::Constant(game.dim(), R), game, verification_h * R);
}

inline Barrier make_ellipse_barrier(const Point& axes, const GameCoefficients& game, double verification_h = 1.0 / 64) {
    return detail::make_quadratic_barrier(DomainKind::Ellipse, axes, game, verification_h * axes.minCoeff());
}

}  // namespace isaacs
