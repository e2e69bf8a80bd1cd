#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "isaacs/barrier.hpp"
#include "isaacs/errors.hpp"
#include "isaacs/grid.hpp"
#include "isaacs/model.hpp"
#include "isaacs/policy.hpp"
#include "isaacs/rng.hpp"
#include "isaacs/simulator.hpp"

namespace isaacs {

using Fiber = Eigen::Vector4d;
/// Noise increments of one lifted step, column i driving w^(i).
using FiberNoise = Eigen::Matrix<double, Eigen::Dynamic, 4, 0, kMaxNoise, 4>;

/// Point z = (x, y) of R^{d+4}; on the surface when Psi(x) = |y|^2.
struct LiftedState {
    Point x;
    Fiber y = Fiber::Zero();
};

inline LiftedState lift_point(const Point& x, const Barrier& bar, int fiber_axis = 0) {
    const double p = bar.psi(x);
    if (!(p > 0.0)) throw OutsideDomainError("lift_point needs Psi(x) > 0");
    if (fiber_axis < 0 || fiber_axis > 3) throw ConfigError("fiber axis must be 0..3");
    LiftedState z{x, Fiber::Zero()};
    z.y(fiber_axis) = std::sqrt(p);
    return z;
}

/// Lifted coefficients: c_hat = -(a:D^2 Psi + b.D Psi) and c_bar = max(-L Psi, 1/2).
class LiftedGame {
public:
    LiftedGame(GameCoefficients game, Barrier barrier) : game_(std::move(game)), bar_(std::move(barrier)) {
        if (bar_.dim() != game_.dim()) throw ConfigError("barrier and problem dimensions differ");
        const auto pts = barrier_verification_points(bar_, bar_.axes().minCoeff() / 32.0);
        for (int ia = 0; ia < game_.alphas().size(); ++ia)
            for (int ib = 0; ib < game_.betas().size(); ++ib)
                for (const auto& x : pts) {
                    sup_f_ = std::max(sup_f_, std::abs(game_.running_cost(ia, ib, x)));
                    sup_chat_ = std::max(sup_chat_, std::abs(c_hat(ia, ib, x)));
                }
    }

    const GameCoefficients& game() const { return game_; }
    const Barrier& barrier() const { return bar_; }
    double sup_f() const { return sup_f_; }
    double sup_c_hat() const { return sup_chat_; }

    double c_hat(int ia, int ib, const Point& x) const {
        const auto k = game_.local(ia, ib, x);
        const auto e = bar_.eval(x);
        return -((k.a.cwiseProduct(e.hess)).sum() + k.b.dot(e.grad));
    }
    double c_bar(int ia, int ib, const Point& x) const {
        const auto k = game_.local(ia, ib, x);
        const auto e = bar_.eval(x);
        const double L = (k.a.cwiseProduct(e.hess)).sum() + k.b.dot(e.grad) - k.c * e.psi;
        return std::max(-L, 0.5);
    }

    /// Drift of z and the four diffusion blocks (column block i multiplies dw^(i)).
    void coefficients(int ia, int ib, const LiftedState& z, Eigen::VectorXd& drift, Eigen::MatrixXd& diff) const {
        const int d = game_.dim(), d1 = game_.noise_dim();
        const auto k = game_.local(ia, ib, z.x);
        const SigmaMat sg = game_.sigma(ia, ib, z.x);
        const auto e = bar_.eval(z.x);
        const double ch = -((k.a.cwiseProduct(e.hess)).sum() + k.b.dot(e.grad));
        drift.setZero(d + 4);
        drift.head(d) = z.y.squaredNorm() * k.b + 2.0 * k.a * e.grad;
        drift.tail(4) = -0.5 * ch * z.y;
        diff.setZero(d + 4, 4 * d1);
        const Eigen::RowVectorXd gs = 0.5 * e.grad.transpose() * sg;
        for (int i = 0; i < 4; ++i) {
            diff.block(0, i * d1, d, d1) = z.y(i) * sg;
            diff.block(d + i, i * d1, 1, d1) = gs;
        }
    }

private:
    GameCoefficients game_;
    Barrier bar_;
    double sup_f_ = 0.0, sup_chat_ = 0.0;
};

struct SurfaceConfig {
    double dt = 1e-3;
    std::int64_t n_paths = 1000;
    std::uint64_t seed = 1;
    int threads = 1;
    bool projection = true;
    double tail_tol = 1e-3;  ///< value paths stop once 2 sup|f| e^{-phi_bar} falls below this

    void check() const {
        if (!(dt > 0.0)) throw ConfigError("dt must be positive");
        if (n_paths < 2 || n_paths > (std::int64_t{1} << 32)) throw ConfigError("n_paths must be in [2, 2^32]");
        if (threads < 1) throw ConfigError("threads must be positive");
        if (!(tail_tol > 0.0)) throw ConfigError("tail_tol must be positive");
    }
};

/// State and running statistics of one lifted path.
struct SurfacePath {
    LiftedState z;
    double t = 0.0;
    double phi_bar = 0.0;
    double integral = 0.0;   ///< int f e^{-phi_bar} dt
    double max_drift = 0.0;  ///< max over steps of |Psi(x) - |y|^2| before projection
    std::int64_t step = 0;
    bool refined = false;  ///< some step needed bridge refinement to keep Psi >= 0
    bool breached = false;
    bool finite = true;
};

/// Euler-Maruyama on the lifted system, four independent d1-dimensional noises.
class SurfaceSimulator {
public:
    /// `max_refine` bounds the bridge halvings of one step; 0 gives plain Euler-Maruyama.
    explicit SurfaceSimulator(LiftedGame lg, int max_refine = 16) : lg_(std::move(lg)), max_refine_(max_refine) {
        if (max_refine < 0 || max_refine > 24) throw ConfigError("max_refine must be in 0..24");
    }
    const LiftedGame& lifted() const { return lg_; }
    int max_refine() const { return max_refine_; }

    /// One step of size dt. With projection on, y is rescaled to |y| = sqrt(Psi(x)) after
    /// every substep. A substep landing at Psi < 0 is split in two along the Brownian bridge
    /// of its increment; the path is marked breached only when max_refine halvings do not help.
    void advance(SurfacePath& p, const MarkovPolicy& pol, double dt, bool projection, std::uint64_t seed,
                 std::uint64_t path) const {
        const int d1 = lg_.game().noise_dim();
        NormalStream ns(seed, path, static_cast<std::uint64_t>(p.step));
        const double sq = std::sqrt(dt);
        FiberNoise dw(d1, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < d1; ++j) dw(j, i) = sq * ns.next();
        if (projection)
            refine(p, pol, dt, dw, seed, path, 0, 0);
        else
            substep(p, pol, dt, dw, false);
        p.t += dt;
        ++p.step;
    }

    /// Simulates to a fixed horizon. Throws SurfaceBreachError when projection is on and Psi < 0.
    SurfacePath simulate(const LiftedState& z0, const MarkovPolicy& pol, double dt, double horizon, bool projection,
                         std::uint64_t seed, std::uint64_t path) const {
        SurfacePath p{z0};
        const auto steps = static_cast<std::int64_t>(std::llround(horizon / dt));
        for (std::int64_t s = 0; s < steps && p.finite; ++s) {
            advance(p, pol, dt, projection, seed, path);
            if (p.breached) throw SurfaceBreachError("Psi(x) < 0 at t = " + std::to_string(p.t) + "; decrease dt");
        }
        return p;
    }

    /// v_bar(z) = E int_0^inf f(x_t) e^{-phi_bar_t} dt. Breached paths stop and are counted as censored.
    McEstimate estimate_vbar(const LiftedState& z0, const MarkovPolicy& pol, const SurfaceConfig& cfg) const {
        cfg.check();
        require_zero_terminal();
        const double sf = std::max(lg_.sup_f(), 1e-300);
        const double stop_phi = std::log(2.0 * sf / cfg.tail_tol);
        const auto cap = static_cast<std::int64_t>(std::ceil(2.0 * std::max(stop_phi, 0.0) / 0.5 / cfg.dt)) + 1;
        auto e = monte_carlo(cfg.n_paths, cfg.threads, [&](std::int64_t i) {
            SurfacePath p{z0};
            while (p.phi_bar < stop_phi && p.step < cap && p.finite && !p.breached)
                advance(p, pol, cfg.dt, cfg.projection, cfg.seed, static_cast<std::uint64_t>(i));
            return PathStat{p.integral, p.breached, p.finite, 2.0 * lg_.sup_f() * std::exp(-p.phi_bar), p.refined};
        });
        e.seed = cfg.seed;
        e.dt = cfg.dt;
        return e;
    }

private:
    /// Euler step from p with increments dw (d1 x 4). Returns false, leaving p untouched,
    /// when projection is on and the proposed x has Psi < 0.
    bool substep(SurfacePath& p, const MarkovPolicy& pol, double dt, const FiberNoise& dw,
                 bool projection) const {
        const auto& game = lg_.game();
        const auto& bar = lg_.barrier();
        const Point& x = p.z.x;
        const int ia = pol.alpha(x), ib = pol.beta(x, ia);
        if (ia < 0 || ia >= game.alphas().size() || ib < 0 || ib >= game.betas().size())
            throw ConfigError("policy returned a control outside the problem's control sets");
        const auto k = game.local(ia, ib, x);
        const SigmaMat sg = game.sigma(ia, ib, x);
        const auto e = bar.eval(x);
        const double aH = (k.a.cwiseProduct(e.hess)).sum(), bg = k.b.dot(e.grad);
        const double ch = -(aH + bg);
        const double cb = std::max(-(aH + bg - k.c * e.psi), 0.5);
        const NoiseVec gs = 0.5 * sg.transpose() * e.grad;
        Point nx = x + (p.z.y.squaredNorm() * k.b + 2.0 * k.a * e.grad) * dt;
        Fiber ny = p.z.y * (1.0 - 0.5 * ch * dt);
        for (int i = 0; i < 4; ++i) {
            nx += p.z.y(i) * (sg * dw.col(i));
            ny(i) += gs.dot(dw.col(i));
        }
        const double integral = p.integral + k.f * std::exp(-p.phi_bar) * dt;
        if (!std::isfinite(nx.sum()) || !std::isfinite(ny.sum()) || !std::isfinite(integral)) {
            p.z.x = nx;
            p.z.y = ny;
            p.finite = false;
            return true;
        }
        const double psi = bar.psi(nx);
        if (projection && psi < 0.0) return false;
        p.integral = integral;
        p.phi_bar += cb * dt;
        p.max_drift = std::max(p.max_drift, std::abs(psi - ny.squaredNorm()));
        p.z.x = nx;
        p.z.y = ny;
        if (projection) {
            const double r = ny.norm();
            if (r > 0.0)
                p.z.y *= std::sqrt(psi) / r;
            else
                p.z.y = Fiber(std::sqrt(psi), 0.0, 0.0, 0.0);
        }
        return true;
    }

    void refine(SurfacePath& p, const MarkovPolicy& pol, double dt, const FiberNoise& dw, std::uint64_t seed,
                std::uint64_t path, int depth, std::uint64_t pos) const {
        if (p.breached || !p.finite) return;
        if (substep(p, pol, dt, dw, true)) return;
        if (depth == 0) p.refined = true;
        if (depth == max_refine_) {
            p.breached = true;
            return;
        }
        // Midpoint of the bridge: dw/2 + sqrt(dt)/2 * eta, with eta on a stream disjoint from the base steps.
        const std::uint64_t stream = (std::uint64_t{1} << 63) | (static_cast<std::uint64_t>(depth) << 57) |
                                     (pos << 33) | static_cast<std::uint64_t>(p.step);
        NormalStream ns(seed, path, stream);
        FiberNoise half(dw.rows(), 4);
        const double s = 0.5 * std::sqrt(dt);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < dw.rows(); ++j) half(j, i) = 0.5 * dw(j, i) + s * ns.next();
        refine(p, pol, 0.5 * dt, half, seed, path, depth + 1, 2 * pos);
        refine(p, pol, 0.5 * dt, FiberNoise(dw - half), seed, path, depth + 1, 2 * pos + 1);
    }

    void require_zero_terminal() const {
        if (!lg_.game().terminal_fn().is_zero()) throw ConfigError("the surface reduction requires g = 0");
    }

    LiftedGame lg_;
    int max_refine_;
};

struct ReductionRow {
    Point x;
    double psi = 0.0;
    double v_h = 0.0;
    McEstimate vbar;
    double difference = 0.0;  ///< |vbar Psi - v_h|
    double tolerance = 0.0;   ///< 3 stderr Psi + allowance
    bool skipped = false;
    bool pass = true;
};

/// Compares v_bar(lift(x)) Psi(x) with v_h(x) at each point. Points with Psi below
/// `min_psi` are reported as skipped.
inline std::vector<ReductionRow> check_reduction(const SurfaceSimulator& sim, const std::vector<Point>& xs,
                                                 const Grid& grid, const ScalarField& v, const MarkovPolicy& pol,
                                                 const SurfaceConfig& cfg, double allowance, double min_psi = 0.2) {
    if (!sim.lifted().game().terminal_fn().is_zero()) throw ConfigError("the surface reduction requires g = 0");
    std::vector<ReductionRow> out;
    for (const auto& x : xs) {
        ReductionRow r;
        r.x = x;
        r.psi = sim.lifted().barrier().psi(x);
        if (r.psi < min_psi) {
            r.skipped = true;
            out.push_back(r);
            continue;
        }
        r.v_h = interpolate(grid, v, x);
        r.vbar = sim.estimate_vbar(lift_point(x, sim.lifted().barrier()), pol, cfg);
        r.difference = std::abs(r.vbar.mean * r.psi - r.v_h);
        r.tolerance = 3.0 * r.vbar.std_error * r.psi + allowance;
        r.pass = r.vbar.usable && r.difference <= r.tolerance;
        out.push_back(r);
    }
    return out;
}

struct EquatorBand {
    double eps = 0.0;     ///< band {0 <= Psi <= 2 eps}
    double N0 = 0.0;
    double N1 = 0.0;
    double lambda = 0.0;  ///< (2 eps)^{-1/2}
    double L_b = 0.0, L_sigma = 0.0;
    double margin = 0.0;  ///< lambda^2 delta cos(1) / 16 - 2 N0 cos(1) - N1
    double min_band_gradient = 0.0;
};

namespace detail {

/// Points of {0 <= Psi <= 2 eps} along rays from the origin, `per_ray` per direction.
inline std::vector<Point> band_points(const Barrier& bar, double eps, int per_ray = 16) {
    std::vector<Point> out;
    for (const auto& u : sample_directions(bar.dim())) {
        const Point xb = bar.boundary_point(u);
        // Bisection for the inner edge s* with Psi(s* xb) = 2 eps.
        double lo = 0.0, hi = 1.0;
        if (bar.psi(Point::Zero(bar.dim())) <= 2.0 * eps) {
            hi = 0.0;
        } else {
            for (int it = 0; it < 80; ++it) {
                const double m = 0.5 * (lo + hi);
                (bar.psi(m * xb) > 2.0 * eps ? lo : hi) = m;
            }
        }
        for (int k = 0; k <= per_ray; ++k) out.push_back((hi + (1.0 - hi) * k / per_ray) * xb);
    }
    return out;
}

/// Spectral norm bound of the Jacobian of the lifted drift and the Frobenius
/// derivative norm of the diffusion at z, by central differences.
inline std::pair<double, double> lifted_jacobian_norms(const LiftedGame& lg, int ia, int ib, const LiftedState& z) {
    const int d = lg.game().dim(), n = d + 4;
    Eigen::MatrixXd J(n, n);
    double sig2 = 0.0;
    Eigen::VectorXd dp, dm;
    Eigen::MatrixXd sp, sm;
    for (int k = 0; k < n; ++k) {
        const double h = 1e-6;
        LiftedState zp = z, zm = z;
        if (k < d) {
            zp.x(k) += h;
            zm.x(k) -= h;
        } else {
            zp.y(k - d) += h;
            zm.y(k - d) -= h;
        }
        lg.coefficients(ia, ib, zp, dp, sp);
        lg.coefficients(ia, ib, zm, dm, sm);
        J.col(k) = (dp - dm) / (2 * h);
        sig2 += ((sp - sm) / (2 * h)).squaredNorm();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    return {svd.singularValues()(0), std::sqrt(sig2)};
}

}  // namespace detail

/// Lipschitz constants of the lifted system sampled on the surface over G.
inline std::pair<double, double> lifted_lipschitz(const LiftedGame& lg, std::uint64_t seed = 7) {
    const auto& bar = lg.barrier();
    const auto pts = barrier_verification_points(bar, bar.axes().minCoeff() / 8.0);
    double Lb = 0.0, Ls = 0.0;
    std::uint64_t path = 0;
    for (const auto& x : pts) {
        const double p = bar.psi(x);
        // Two fiber directions per point: one axis-aligned, one random.
        NormalStream ns(seed, path++, 0);
        Fiber u(ns.next(), ns.next(), ns.next(), ns.next());
        u.normalize();
        for (const Fiber& dir : {Fiber(1, 0, 0, 0), u}) {
            const LiftedState z{x, std::sqrt(std::max(p, 0.0)) * dir};
            for (int ia = 0; ia < lg.game().alphas().size(); ++ia)
                for (int ib = 0; ib < lg.game().betas().size(); ++ib) {
                    const auto [b, s] = detail::lifted_jacobian_norms(lg, ia, ib, z);
                    Lb = std::max(Lb, b);
                    Ls = std::max(Ls, s);
                }
        }
    }
    return {Lb, Ls};
}

/// Halve eps from Psi_max / 4 until |D Psi| >= 1/2 on the band and the moment inequality holds.
inline EquatorBand calibrate_equator_band(const LiftedGame& lg, double eps_floor = 1e-12) {
    const auto& bar = lg.barrier();
    EquatorBand b;
    std::tie(b.L_b, b.L_sigma) = lifted_lipschitz(lg);
    b.N0 = b.L_b + 0.5 * b.L_sigma * b.L_sigma + 0.5;
    b.N1 = 0.5 * lg.sup_c_hat();
    const double delta = lg.game().constants().delta, c1 = std::cos(1.0);
    for (double eps = bar.psi_max() / 4.0; eps >= eps_floor; eps *= 0.5) {
        double gmin = std::numeric_limits<double>::infinity();
        for (const auto& x : detail::band_points(bar, eps)) gmin = std::min(gmin, bar.grad_psi(x).norm());
        const double lam2 = 1.0 / (2.0 * eps);
        const double margin = lam2 / 16.0 * delta * c1 - 2.0 * b.N0 * c1 - b.N1;
        if (gmin >= 0.5 && margin >= 0.0) {
            b.eps = eps;
            b.lambda = std::sqrt(lam2);
            b.margin = margin;
            b.min_band_gradient = gmin;
            return b;
        }
    }
    throw CalibrationError("no equator band width above " + std::to_string(eps_floor));
}

/// Point with Psi(x) = level on the ray through `dir`, lifted with y along the first fiber axis.
inline LiftedState surface_point_at_level(const Barrier& bar, const Point& dir, double level) {
    const Point xb = bar.boundary_point(dir);
    if (!(level > 0.0 && level < bar.psi_max())) throw ConfigError("level must lie in (0, Psi_max)");
    double lo = 0.0, hi = 1.0;  // Psi(lo xb) > level >= Psi(hi xb)
    for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (lo + hi);
        (bar.psi(m * xb) > level ? lo : hi) = m;
    }
    const Point x = lo * xb;
    return {x, Fiber(std::sqrt(bar.psi(x)), 0.0, 0.0, 0.0)};
}

struct EquatorMoment {
    McEstimate estimate;        ///< of exp(2 N0 tau)
    double bound = 0.0;         ///< 1 / cos(1)
    double censor_value = 0.0;  ///< value assigned to censored or breached paths
    bool pass = true;
};

/// E exp(2 N0 tau), tau the first time Psi(x_t) >= 2 eps. Censored (or breached)
/// paths contribute the censoring value.
inline EquatorMoment equator_exit_moment(const SurfaceSimulator& sim, const EquatorBand& band, const LiftedState& z0,
                                         const MarkovPolicy& pol, const SurfaceConfig& cfg) {
    cfg.check();
    const auto& bar = sim.lifted().barrier();
    EquatorMoment m;
    m.bound = 1.0 / std::cos(1.0);
    const double T = std::log(100.0) / (2.0 * band.N0);
    m.censor_value = std::exp(2.0 * band.N0 * T);
    const auto cap = static_cast<std::int64_t>(std::ceil(T / cfg.dt));
    m.estimate = monte_carlo(cfg.n_paths, cfg.threads, [&](std::int64_t i) {
        SurfacePath p{z0};
        while (bar.psi(p.z.x) < 2.0 * band.eps) {
            if (p.step >= cap || p.breached || !p.finite) return PathStat{m.censor_value, true, true, 0.0};
            sim.advance(p, pol, cfg.dt, cfg.projection, cfg.seed, static_cast<std::uint64_t>(i));
        }
        return PathStat{std::exp(2.0 * band.N0 * p.t), false, true, 0.0};
    });
    m.estimate.seed = cfg.seed;
    m.estimate.dt = cfg.dt;
    m.pass = m.estimate.mean - 3.0 * m.estimate.std_error <= m.bound;
    return m;
}

struct SupermartingaleReport {
    std::vector<double> times;
    std::vector<McEstimate> levels;      ///< mean of the process at each checkpoint
    std::vector<McEstimate> increments;  ///< paired increments between checkpoints
    bool pass = true;
};

/// Process |z'_t - z''_t|^2 e^{-2 N0 t} + int_0^t |z'_s - z''_s|^2 e^{-2 N0 s} ds for two
/// paths with identical noise; passes when no checkpoint increment exceeds 3 stderr.
inline SupermartingaleReport coupled_supermartingale_check(const SurfaceSimulator& sim, const LiftedState& z1,
                                                           const LiftedState& z2, const MarkovPolicy& pol, double N0,
                                                           const SurfaceConfig& cfg,
                                                           std::vector<double> times = {0.0, 0.25, 0.5, 1.0}) {
    cfg.check();
    SupermartingaleReport r;
    r.times = times;
    const std::size_t K = times.size();
    const auto n = static_cast<std::size_t>(cfg.n_paths);
    std::vector<std::vector<double>> vals(K, std::vector<double>(n));
    std::vector<char> ok(n, 1);
    auto diff2 = [](const SurfacePath& a, const SurfacePath& b) {
        return (a.z.x - b.z.x).squaredNorm() + (a.z.y - b.z.y).squaredNorm();
    };
    monte_carlo(cfg.n_paths, cfg.threads, [&](std::int64_t i) {
        SurfacePath a{z1}, b{z2};
        double integral = 0.0;
        std::size_t next = 0;
        const auto iu = static_cast<std::size_t>(i);
        while (next < K) {
            const double D = diff2(a, b);
            while (next < K && a.t >= times[next] - 1e-12) {
                vals[next][iu] = D * std::exp(-2.0 * N0 * a.t) + integral;
                ++next;
            }
            if (next == K) break;
            if (a.breached || b.breached || !a.finite || !b.finite) {
                ok[iu] = 0;
                break;
            }
            integral += D * std::exp(-2.0 * N0 * a.t) * cfg.dt;
            sim.advance(a, pol, cfg.dt, cfg.projection, cfg.seed, static_cast<std::uint64_t>(i));
            sim.advance(b, pol, cfg.dt, cfg.projection, cfg.seed, static_cast<std::uint64_t>(i));
        }
        return PathStat{};
    });
    auto collect = [&](auto value) {
        std::vector<PathStat> s;
        for (std::size_t i = 0; i < n; ++i) s.push_back(PathStat{value(i), false, ok[i] != 0, 0.0});
        McEstimate e;
        detail::summarize(s, e);
        e.seed = cfg.seed;
        e.dt = cfg.dt;
        return e;
    };
    for (std::size_t k = 0; k < K; ++k) r.levels.push_back(collect([&](std::size_t i) { return vals[k][i]; }));
    for (std::size_t k = 0; k + 1 < K; ++k) {
        auto inc = collect([&](std::size_t i) { return vals[k + 1][i] - vals[k][i]; });
        const double se = std::isfinite(inc.std_error) ? inc.std_error : 0.0;
        if (!(inc.mean <= 3.0 * se) && !(inc.mean == 0.0)) r.pass = false;
        r.increments.push_back(inc);
    }
    return r;
}

struct GammaDriftRow {
    double dt = 0.0;
    McEstimate drift;      ///< E max_{t <= horizon} |Psi(x_t) - |y_t|^2|, finite paths only
    double fitted_C = 0.0; ///< drift / dt
    std::optional<double> ratio;  ///< drift at this dt over drift at the previous (larger) dt
};

struct GammaDriftStudy {
    std::vector<GammaDriftRow> rows;
    bool pass = true;  ///< every ratio in [0.35, 0.65] and no non-finite paths
};

/// Projection-off drift off the surface under dt refinement.
inline GammaDriftStudy gamma_invariance_study(const SurfaceSimulator& sim, const LiftedState& z0,
                                              const MarkovPolicy& pol, const std::vector<double>& dts,
                                              const SurfaceConfig& cfg, double horizon = 1.0) {
    cfg.check();
    GammaDriftStudy s;
    for (double dt : dts) {
        GammaDriftRow row;
        row.dt = dt;
        row.drift = monte_carlo(cfg.n_paths, cfg.threads, [&](std::int64_t i) {
            SurfacePath p{z0};
            const auto steps = static_cast<std::int64_t>(std::llround(horizon / dt));
            for (std::int64_t k = 0; k < steps && p.finite; ++k)
                sim.advance(p, pol, dt, false, cfg.seed, static_cast<std::uint64_t>(i));
            return PathStat{p.max_drift, false, p.finite && std::isfinite(p.max_drift), 0.0};
        });
        row.drift.seed = cfg.seed;
        row.drift.dt = dt;
        row.fitted_C = row.drift.mean / dt;
        if (!s.rows.empty()) row.ratio = row.drift.mean / s.rows.back().drift.mean;
        if (row.drift.nonfinite_count > 0) s.pass = false;
        if (row.ratio && !(*row.ratio >= 0.35 && *row.ratio <= 0.65)) s.pass = false;
        s.rows.push_back(row);
    }
    return s;
}

}  // namespace isaacs
