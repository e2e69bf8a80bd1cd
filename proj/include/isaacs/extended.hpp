#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "isaacs/errors.hpp"
#include "isaacs/model.hpp"

namespace isaacs {

/// Parameters of the Pucci-type regularizer and its constant-coefficient vertex sample.
struct PucciSpec {
    double delta_hat = 0.5;
    int rotations = 8;  ///< angles k*pi/rotations in d = 2; must be even
};

/// One constant-coefficient control of A2.
struct ConstantControl {
    std::string label;
    SqMat a;
    Point b;
    double c = 0.0;
};

namespace detail {
inline double snap(double v) { return std::abs(v) < 1e-14 ? 0.0 : v; }
}  // namespace detail

/// Vertex family: a = R diag(lambda) R' with lambda in {dh, 1/dh}, b in {0} u {+-e_i/dh}, c = dh.
///
/// d = 1: a in {dh, 1/dh}. d = 2: dh I, I/dh, and R_t diag(1/dh, dh) R_t' for
/// t = k pi / rotations. The c-component is fixed at dh so that the sup over the
/// family carries the -dh u term of P.
inline std::vector<ConstantControl> a2_vertex_family(int d, const PucciSpec& spec) {
    const double dh = spec.delta_hat, inv = 1.0 / dh;
    if (!(dh > 0.0 && dh < 1.0)) throw ConfigError("delta_hat must lie in (0, 1)");
    std::vector<SqMat> as;
    if (d == 1) {
        as.push_back(SqMat::Constant(1, 1, dh));
        as.push_back(SqMat::Constant(1, 1, inv));
    } else if (d == 2) {
        if (spec.rotations < 2 || spec.rotations % 2 != 0) throw ConfigError("rotations must be even and >= 2");
        as.push_back(SqMat(dh * SqMat::Identity(2, 2)));
        as.push_back(SqMat(inv * SqMat::Identity(2, 2)));
        for (int k = 0; k < spec.rotations; ++k) {
            const double t = M_PI * k / spec.rotations;
            const double cs = detail::snap(std::cos(t)), sn = detail::snap(std::sin(t));
            SqMat a(2, 2);
            a(0, 0) = detail::snap(inv * cs * cs + dh * sn * sn);
            a(1, 1) = detail::snap(inv * sn * sn + dh * cs * cs);
            a(0, 1) = a(1, 0) = detail::snap((inv - dh) * cs * sn);
            as.push_back(a);
        }
    } else {
        throw ConfigError("A2 vertex family is implemented for d <= 2");
    }
    std::vector<Point> bs;
    bs.push_back(Point::Zero(d));
    for (int i = 0; i < d; ++i) {
        Point e = Point::Zero(d);
        e(i) = inv;
        bs.push_back(e);
        bs.push_back(-e);
    }
    std::vector<ConstantControl> out;
    for (std::size_t i = 0; i < as.size(); ++i)
        for (std::size_t j = 0; j < bs.size(); ++j)
            out.push_back({"A2:a" + std::to_string(i) + ":b" + std::to_string(j), as[i], bs[j], dh});
    return out;
}

/// sin^2(pi / (2 n)) (1/dh - dh): multiply by the eigenvalue spread of the discrete
/// Hessian to bound the gap between P and the sampled A2 sup in d = 2.
inline double rotation_sampling_factor(const PucciSpec& spec, int d) {
    if (d == 1) return 0.0;
    const double s = std::sin(M_PI / (2.0 * spec.rotations));
    return (1.0 / spec.delta_hat - spec.delta_hat) * s * s;
}

/// Symmetric square root of 2a, padded with zero columns to d1.
inline SigmaMat sigma_from_diffusion(const SqMat& a, int d1) {
    Eigen::SelfAdjointEigenSolver<SqMat> es(SqMat(2.0 * a));
    if (es.info() != Eigen::Success) throw InternalError("eigen-decomposition failed");
    const SqMat r = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                    es.eigenvectors().transpose();
    SigmaMat s = SigmaMat::Zero(a.rows(), d1);
    s.leftCols(a.cols()) = r;
    return s;
}

/// The game over A1 u A2 with running cost f - K on A2.
struct ExtendedProblem {
    GameCoefficients base;
    std::vector<ConstantControl> a2;
    double K = 0.0;
    PucciSpec spec;

    int n_a1() const { return base.alphas().size(); }
    int n_total() const { return n_a1() + static_cast<int>(a2.size()); }

    /// Flatten into ordinary game coefficients (A2 rows replicate across beta).
    GameCoefficients as_game() const {
        const int d = base.dim(), d1 = base.noise_dim();
        std::vector<std::string> labels = base.alphas().labels();
        std::vector<ControlEntry> table = base.table();
        for (const auto& v : a2) {
            labels.push_back(v.label);
            const SigmaMat s = sigma_from_diffusion(v.a, d1);
            ControlEntry e;
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d1; ++j) e.sigma.emplace_back(s(i, j));
            for (int i = 0; i < d; ++i) e.b.emplace_back(v.b(i));
            e.c = CoefFn(v.c);
            e.f = CoefFn(-K);
            for (int ib = 0; ib < base.betas().size(); ++ib) table.push_back(e);
        }
        // A2 diffusions live in [dh, 1/dh], which may be wider than [delta, 1/delta].
        Constants k = base.constants();
        k.delta = std::min(k.delta, spec.delta_hat);
        return GameCoefficients(d, d1, ControlSet(labels), base.betas(), std::move(table), base.terminal_fn(), k);
    }
};

inline ExtendedProblem extend_problem(const GameCoefficients& game, const PucciSpec& spec, double K) {
    if (!(K >= 0.0)) throw ConfigError("K must be nonnegative");
    ExtendedProblem ep{game, a2_vertex_family(game.dim(), spec), K, spec};
    if (ep.a2.empty()) throw ConfigError("empty A2 family");
    for (const auto& v : ep.a2)
        if (game.alphas().index_of(v.label) >= 0) throw ConfigError("A2 label collides with an A1 label: " + v.label);
    return ep;
}

/// Replace g by 0 and f by L g + f. Requires closed-form derivatives of g.
inline GameCoefficients reduce_boundary_to_zero(const GameCoefficients& game) {
    const CoefFn& g = game.terminal_fn();
    if (g.is_zero()) return game;
    if (!g.has_hessian()) throw ConfigError("terminal cost has no closed-form second derivatives");
    // Captured by value: the reduced problem must outlive `game`.
    auto self = std::make_shared<const GameCoefficients>(game);
    std::vector<ControlEntry> table;
    for (int ia = 0; ia < game.alphas().size(); ++ia)
        for (int ib = 0; ib < game.betas().size(); ++ib) {
            ControlEntry e = game.entry(ia, ib);
            e.f = CoefFn::derived([self, ia, ib](const Point& x) {
                const auto k = self->local(ia, ib, x);
                const auto& gf = self->terminal_fn();
                return apply_L_smooth(k, gf(x), gf.gradient(x), gf.hessian(x)) + k.f;
            });
            table.push_back(std::move(e));
        }
    return game.with_table(std::move(table), CoefFn(0.0));
}

}  // namespace isaacs
