#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "isaacs/barrier.hpp"
#include "isaacs/model.hpp"

namespace isaacs {

struct SamplePlan {
    int points_per_axis = 21;   ///< lattice density over the sampling box
    int random_pairs = 2000;    ///< extra random pairs for Lipschitz quotients
    double box_scale = 1.0;     ///< sampling box = box_scale * domain half-widths
    double tolerance = 1e-9;    ///< relative slack on every threshold
    std::uint64_t seed = 1;
};

struct CheckResult {
    std::string name;
    double worst = 0.0;      ///< worst sampled value of the checked quantity
    double threshold = 0.0;  ///< pass iff worst <= threshold (or >= for floors, see `floor`)
    bool floor = false;
    bool pass = true;
    std::string detail;
};

struct ValidationReport {
    std::vector<CheckResult> checks;

    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
    std::vector<std::string> failed() const {
        std::vector<std::string> out;
        for (const auto& c : checks)
            if (!c.pass) out.push_back(c.name);
        return out;
    }
    const CheckResult* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

namespace detail {

inline std::string fmt_point(const Point& x) {
    std::ostringstream os;
    os.precision(6);
    os << '(';
    for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x(i);
    os << ')';
    return os.str();
}

inline CheckResult upper_check(std::string name, double worst, double thr, double tol, std::string detail) {
    return {std::move(name), worst, thr, false, worst <= thr * (1.0 + tol) + tol, std::move(detail)};
}

inline CheckResult lower_check(std::string name, double worst, double thr, double tol, std::string detail) {
    return {std::move(name), worst, thr, true, worst >= thr * (1.0 - tol) - tol, std::move(detail)};
}

}  // namespace detail

/// Sample the standing assumptions: uniform bounds, Lipschitz quotients, ellipticity,
/// sign of c, and (when a barrier is supplied) the barrier properties.
///
/// `half_widths` fixes the sampling box when no barrier is given (whole-space mode).
inline ValidationReport validate_assumptions(const GameCoefficients& game, const Barrier* barrier,
                                             const SamplePlan& plan, std::optional<Point> half_widths = std::nullopt) {
    using detail::fmt_point;
    const int d = game.dim();
    Point hw = barrier ? barrier->axes() : half_widths.value_or(Point::Constant(d, 1.0));
    hw *= plan.box_scale;
    const double step = 2.0 * hw.maxCoeff() / std::max(1, plan.points_per_axis - 1);
    std::vector<Point> pts = lattice_points(hw, step);

    const double K0 = game.constants().K0;
    const double delta = game.constants().delta;
    const double tol = plan.tolerance;
    const int nA = game.alphas().size(), nB = game.betas().size();

    struct Worst {
        double v = 0.0;
        std::string where;
    };
    Worst bs, bb, bc, bf, ls, lb, lc, lf;
    double ell_lo = std::numeric_limits<double>::infinity(), ell_hi = 0.0, cmin = std::numeric_limits<double>::infinity();
    std::string ell_lo_at, ell_hi_at, cmin_at;

    auto label = [&](int ia, int ib) { return game.alphas().label(ia) + "/" + game.betas().label(ib); };
    auto upd = [](Worst& w, double v, const std::string& where) {
        if (v > w.v) w = {v, where};
    };

    for (int ia = 0; ia < nA; ++ia)
        for (int ib = 0; ib < nB; ++ib)
            for (const auto& x : pts) {
                const std::string at = label(ia, ib) + " at " + fmt_point(x);
                const auto s = game.sigma(ia, ib, x);
                const double c = game.discount(ia, ib, x);
                upd(bs, s.norm(), at);
                upd(bb, game.drift(ia, ib, x).norm(), at);
                upd(bc, std::abs(c), at);
                upd(bf, std::abs(game.running_cost(ia, ib, x)), at);
                if (c < cmin) cmin = c, cmin_at = at;
                const SqMat a = diffusion_from_sigma(s);
                Eigen::SelfAdjointEigenSolver<SqMat> es(a, Eigen::EigenvaluesOnly);
                const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
                if (lo < ell_lo) ell_lo = lo, ell_lo_at = at;
                if (hi > ell_hi) ell_hi = hi, ell_hi_at = at;
            }

    // Lipschitz quotients over lattice neighbours and random pairs.
    std::vector<std::pair<Point, Point>> pairs;
    for (const auto& x : pts)
        for (int i = 0; i < d; ++i) {
            Point y = x;
            y(i) += step;
            if (y(i) <= hw(i) + 1e-12) pairs.emplace_back(x, y);
        }
    std::mt19937_64 rng(plan.seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int k = 0; k < plan.random_pairs; ++k) {
        Point x(d), y(d);
        for (int i = 0; i < d; ++i) x(i) = hw(i) * U(rng);
        for (int i = 0; i < d; ++i) y(i) = x(i) + step * 0.5 * U(rng);
        if ((x - y).norm() > 0.0) pairs.emplace_back(x, y);
    }
    for (int ia = 0; ia < nA; ++ia)
        for (int ib = 0; ib < nB; ++ib)
            for (const auto& [x, y] : pairs) {
                const double r = (x - y).norm();
                const std::string at = label(ia, ib) + " pair " + fmt_point(x) + " " + fmt_point(y);
                upd(ls, (game.sigma(ia, ib, x) - game.sigma(ia, ib, y)).norm() / r, at);
                upd(lb, (game.drift(ia, ib, x) - game.drift(ia, ib, y)).norm() / r, at);
                upd(lc, std::abs(game.discount(ia, ib, x) - game.discount(ia, ib, y)) / r, at);
                upd(lf, std::abs(game.running_cost(ia, ib, x) - game.running_cost(ia, ib, y)) / r, at);
            }

    ValidationReport rep;
    using detail::lower_check;
    using detail::upper_check;
    rep.checks.push_back(upper_check("bound_sigma", bs.v, K0, tol, bs.where));
    rep.checks.push_back(upper_check("bound_b", bb.v, K0, tol, bb.where));
    rep.checks.push_back(upper_check("bound_c", bc.v, K0, tol, bc.where));
    rep.checks.push_back(upper_check("bound_f", bf.v, K0, tol, bf.where));
    rep.checks.push_back(upper_check("lipschitz_sigma", ls.v, K0, tol, ls.where));
    rep.checks.push_back(upper_check("lipschitz_b", lb.v, K0, tol, lb.where));
    rep.checks.push_back(upper_check("lipschitz_c", lc.v, K0, tol, lc.where));
    rep.checks.push_back(upper_check("lipschitz_f", lf.v, K0, tol, lf.where));
    {
        // Both ellipticity bounds under one name; worst is the smaller relative margin.
        const double m_lo = ell_lo / delta, m_hi = (1.0 / delta) / ell_hi;
        CheckResult r = lower_check("ellipticity", std::min(m_lo, m_hi), 1.0, tol,
                                    m_lo <= m_hi ? "min eigenvalue " + std::to_string(ell_lo) + " " + ell_lo_at
                                                 : "max eigenvalue " + std::to_string(ell_hi) + " " + ell_hi_at);
        rep.checks.push_back(r);
    }
    rep.checks.push_back(lower_check("nonnegative_c", cmin, 0.0, 0.0, cmin_at));
    if (game.constants().delta1)
        rep.checks.push_back(lower_check("discount_floor", cmin, *game.constants().delta1, tol, cmin_at));

    if (barrier) {
        if (barrier->dim() != d) throw ConfigError("barrier and problem dimensions differ");
        double pos = std::numeric_limits<double>::infinity(), bz = 0.0, gfloor = std::numeric_limits<double>::infinity();
        std::string pos_at;
        for (const auto& x : pts)
            if (barrier->q(x) < 1.0 - 1e-9) {
                const double p = barrier->psi(x);
                if (p < pos) pos = p, pos_at = fmt_point(x);
            }
        bool rays_ok = true;
        for (const auto& u : sample_directions(d)) {
            const Point xb = barrier->boundary_point(u);
            bz = std::max(bz, std::abs(barrier->psi(xb)));
            gfloor = std::min(gfloor, barrier->grad_psi(xb).norm());
            double prev = barrier->psi(xb);
            for (double t = 1.25; t <= 4.0; t += 0.25) {
                const double v = barrier->psi(t * xb);
                if (!(v < prev)) rays_ok = false;
                prev = v;
            }
        }
        const double geo_tol = 1e-9 * std::max(1.0, barrier->psi_max());
        rep.checks.push_back(lower_check("barrier_positive_interior", pos > 0.0 ? 1.0 : 0.0, 1.0, 0.0,
                                         "min sampled Psi " + std::to_string(pos) + " " + pos_at));
        rep.checks.push_back(upper_check("barrier_boundary_zero", bz, geo_tol, 0.0, "max |Psi| on boundary"));
        rep.checks.push_back(lower_check("barrier_gradient_floor", gfloor, 1.0, tol, "min |D Psi| on boundary"));
        rep.checks.push_back(lower_check("barrier_rays", rays_ok ? 1.0 : 0.0, 1.0, 0.0, "Psi decreasing outside G"));
        const double vb = verify_barrier(*barrier, game, barrier_verification_points(*barrier, barrier->axes().minCoeff() / 64.0));
        rep.checks.push_back(upper_check("barrier_supersolution", vb, 0.0, 0.0, "max of L Psi + c Psi + 1 over G"));
    }
    return rep;
}

}  // namespace isaacs
