#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "isaacs/barrier.hpp"
#include "isaacs/errors.hpp"
#include "isaacs/grid.hpp"
#include "isaacs/model.hpp"
#include "isaacs/policy.hpp"
#include "isaacs/rng.hpp"

namespace isaacs {

struct SimConfig {
    double dt = 1e-3;
    double epsilon = 0.0;          ///< scale of the auxiliary d-dimensional noise
    std::int64_t n_paths = 1000;
    std::uint64_t seed = 1;
    int threads = 1;
    double discount_floor = 1e-8;  ///< whole-space paths stop once e^{-phi} drops below this
    double censor_factor = 10.0;   ///< domain paths are censored after censor_factor * Psi(x0) / dt steps

    void check() const {
        if (!(dt > 0.0)) throw ConfigError("dt must be positive");
        if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be nonnegative");
        if (n_paths < 2 || n_paths > (std::int64_t{1} << 32)) throw ConfigError("n_paths must be in [2, 2^32]");
        if (threads < 1) throw ConfigError("threads must be positive");
        if (!(discount_floor > 0.0 && discount_floor < 1.0)) throw ConfigError("discount_floor must lie in (0, 1)");
        if (!(censor_factor > 0.0)) throw ConfigError("censor_factor must be positive");
    }
};

struct PathOutcome {
    double integral = 0.0;  ///< int_0^tau f e^{-phi} dt
    double phi = 0.0;
    double tau = 0.0;
    Point exit_state;       ///< empty unless the path exited
    bool exited = false;
    bool censored = false;
    bool finite = true;
    double payoff = 0.0;    ///< integral + g(x_tau) e^{-phi_tau}
    double bias_bound = 0.0;
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;  ///< sample standard deviation / sqrt(count)
    std::int64_t n_paths = 0;
    std::uint64_t seed = 0;
    double dt = 0.0;
    double epsilon = 0.0;
    std::int64_t censored_count = 0;
    std::int64_t nonfinite_count = 0;
    double bias_bound = 0.0;  ///< mean over paths of the per-path truncation bound
    std::int64_t flagged_count = 0;  ///< lifted runs: paths where some step needed bridge refinement
    bool usable = true;
};

/// Per-path contribution to a Monte Carlo estimate.
struct PathStat {
    double value = 0.0;
    bool censored = false;
    bool finite = true;
    double bias = 0.0;
    bool flagged = false;
};

namespace detail {

/// Mean and standard error of stored values, summed in path order.
///
/// Sums are shifted by the first value, so n identical inputs give that value exactly.
inline void summarize(const std::vector<PathStat>& s, McEstimate& e) {
    e.n_paths = static_cast<std::int64_t>(s.size());
    std::vector<double> v;
    v.reserve(s.size());
    double bias = 0.0;
    for (const auto& p : s) {
        if (p.censored) ++e.censored_count;
        if (p.flagged) ++e.flagged_count;
        if (!p.finite) {
            ++e.nonfinite_count;
            continue;
        }
        v.push_back(p.value);
        bias += p.bias;
    }
    if (v.size() < 2) {
        e.usable = false;
        e.mean = v.empty() ? std::numeric_limits<double>::quiet_NaN() : v[0];
        e.std_error = std::numeric_limits<double>::quiet_NaN();
        return;
    }
    const double n = static_cast<double>(v.size());
    const double shift = v[0];
    double acc = 0.0;
    for (double x : v) acc += x - shift;
    e.mean = shift + acc / n;
    double ss = 0.0;
    for (double x : v) ss += (x - e.mean) * (x - e.mean);
    e.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    e.bias_bound = bias / n;
    e.usable = e.censored_count < e.n_paths;
}

}  // namespace detail

/// Runs `per_path(i)` for i in [0, n) on `threads` workers. Results are stored by
/// index and reduced in index order, so the estimate does not depend on scheduling.
inline McEstimate monte_carlo(std::int64_t n, int threads, const std::function<PathStat(std::int64_t)>& per_path) {
    std::vector<PathStat> out(static_cast<std::size_t>(n));
    const int T = std::max(1, std::min<int>(threads, static_cast<int>(std::min<std::int64_t>(n, 1 << 20))));
    if (T == 1) {
        for (std::int64_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = per_path(i);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> err(static_cast<std::size_t>(T));
        for (int t = 0; t < T; ++t)
            pool.emplace_back([&, t] {
                try {
                    for (std::int64_t i = t; i < n; i += T) out[static_cast<std::size_t>(i)] = per_path(i);
                } catch (...) {
                    err[static_cast<std::size_t>(t)] = std::current_exception();
                }
            });
        for (auto& th : pool) th.join();
        for (auto& e : err)
            if (e) std::rethrow_exception(e);
    }
    McEstimate e;
    detail::summarize(out, e);
    return e;
}

/// Euler-Maruyama state of one path.
struct PathState {
    Point x;
    double t = 0.0;
    double phi = 0.0;
    std::int64_t step = 0;
};

/// Coefficients in force during the last step (evaluated at its left end point).
struct StepInfo {
    int alpha = 0, beta = 0;
    double c = 0.0, f = 0.0;
    double phi_before = 0.0;
};

/// Simulator for dx = b dt + sigma dw + eps dw_bar under Markov feedback.
///
/// With a barrier, paths stop at the first step with Psi(x) <= 0; without one
/// (whole-space mode) they stop once the discount factor is negligible.
class Simulator {
public:
    Simulator(GameCoefficients game, std::optional<Barrier> barrier, std::optional<Point> sample_half_widths = {})
        : game_(std::move(game)), barrier_(std::move(barrier)) {
        const int d = game_.dim();
        if (barrier_ && barrier_->dim() != d) throw ConfigError("barrier and problem dimensions differ");
        if (!barrier_ && !game_.constants().delta1)
            throw ConfigError("whole-space simulation needs a discount floor delta1");
        const Point hw = barrier_ ? barrier_->axes() : sample_half_widths.value_or(Point::Constant(d, 4.0));
        const auto pts = lattice_points(hw, hw.maxCoeff() / 20.0);
        for (int ia = 0; ia < game_.alphas().size(); ++ia)
            for (int ib = 0; ib < game_.betas().size(); ++ib)
                for (const auto& x : pts) sup_f_ = std::max(sup_f_, std::abs(game_.running_cost(ia, ib, x)));
        for (const auto& x : pts) sup_g_ = std::max(sup_g_, std::abs(game_.terminal(x)));
    }

    const GameCoefficients& game() const { return game_; }
    const std::optional<Barrier>& barrier() const { return barrier_; }
    bool whole_space() const { return !barrier_; }
    double sup_f() const { return sup_f_; }
    double sup_g() const { return sup_g_; }

    /// One Euler-Maruyama step. Noise is keyed by (seed, path, step).
    StepInfo advance(PathState& s, const MarkovPolicy& pol, double dt, double eps, std::uint64_t seed,
                     std::uint64_t path) const {
        const int d = game_.dim(), d1 = game_.noise_dim();
        StepInfo info;
        info.alpha = pol.alpha(s.x);
        info.beta = pol.beta(s.x, info.alpha);
        check_controls(info.alpha, info.beta);
        const auto& e = game_.entry(info.alpha, info.beta);
        info.c = e.c(s.x);
        info.f = e.f(s.x);
        info.phi_before = s.phi;
        const SigmaMat sg = game_.sigma(info.alpha, info.beta, s.x);
        const Point b = game_.drift(info.alpha, info.beta, s.x);
        NormalStream ns(seed, path, static_cast<std::uint64_t>(s.step));
        const double sq = std::sqrt(dt);
        NoiseVec dw(d1);
        for (int j = 0; j < d1; ++j) dw(j) = sq * ns.next();
        Point nx = s.x + b * dt + sg * dw;
        if (eps > 0.0)
            for (int i = 0; i < d; ++i) nx(i) += eps * sq * ns.next();
        s.x = nx;
        s.phi += info.c * dt;
        s.t += dt;
        ++s.step;
        return info;
    }

    /// Step budget for a path from x0.
    std::int64_t max_steps(const Point& x0, const SimConfig& cfg) const {
        if (barrier_) return static_cast<std::int64_t>(std::ceil(cfg.censor_factor * barrier_->psi(x0) / cfg.dt));
        // c >= delta1 drives e^{-phi} below the floor by this horizon; twice it is a hard cap.
        const double T = -std::log(cfg.discount_floor) / *game_.constants().delta1;
        return static_cast<std::int64_t>(std::ceil(2.0 * T / cfg.dt));
    }

    PathOutcome simulate_path(const MarkovPolicy& pol, const Point& x0, const SimConfig& cfg, std::uint64_t path) const {
        require_start(x0);
        PathOutcome o;
        PathState s{x0};
        const std::int64_t budget = max_steps(x0, cfg);
        while (true) {
            if (barrier_) {
                if (s.step > 0 && barrier_->psi(s.x) <= 0.0) {
                    o.exited = true;
                    o.exit_state = s.x;
                    break;
                }
            } else if (std::exp(-s.phi) < cfg.discount_floor) {
                break;
            }
            if (s.step >= budget) {
                o.censored = true;
                break;
            }
            const auto info = advance(s, pol, cfg.dt, cfg.epsilon, cfg.seed, path);
            o.integral += info.f * std::exp(-info.phi_before) * cfg.dt;
            if (!std::isfinite(s.x.sum()) || !std::isfinite(o.integral)) {
                o.finite = false;
                break;
            }
        }
        o.phi = s.phi;
        o.tau = s.t;
        const double disc = std::exp(-s.phi);
        o.payoff = o.integral + (o.exited ? game_.terminal(o.exit_state) * disc : 0.0);
        if (o.censored && barrier_)
            o.bias_bound = sup_g_ * disc + sup_f_ * disc * std::max(0.0, barrier_->psi(s.x));
        else if (!barrier_)
            o.bias_bound = sup_f_ * disc / *game_.constants().delta1;
        return o;
    }

    McEstimate estimate_payoff(const MarkovPolicy& pol, const Point& x0, const SimConfig& cfg) const {
        cfg.check();
        require_start(x0);
        auto e = monte_carlo(cfg.n_paths, cfg.threads, [&](std::int64_t i) {
            const auto o = simulate_path(pol, x0, cfg, static_cast<std::uint64_t>(i));
            return PathStat{o.payoff, o.censored, o.finite, o.bias_bound};
        });
        stamp(e, cfg);
        return e;
    }

    /// Mean exit time. Censored paths count at the censoring time.
    McEstimate estimate_exit_time(const MarkovPolicy& pol, const Point& x0, const SimConfig& cfg) const {
        cfg.check();
        if (!barrier_) throw ConfigError("exit times need a bounded domain");
        require_start(x0);
        auto e = monte_carlo(cfg.n_paths, cfg.threads, [&](std::int64_t i) {
            const auto o = simulate_path(pol, x0, cfg, static_cast<std::uint64_t>(i));
            return PathStat{o.tau, o.censored, o.finite, 0.0};
        });
        stamp(e, cfg);
        return e;
    }

    /// Paired estimate of payoff(p) - payoff(q) under common random numbers.
    McEstimate paired_difference(const MarkovPolicy& p, const MarkovPolicy& q, const Point& x0,
                                 const SimConfig& cfg) const {
        cfg.check();
        require_start(x0);
        auto e = monte_carlo(cfg.n_paths, cfg.threads, [&](std::int64_t i) {
            const auto a = simulate_path(p, x0, cfg, static_cast<std::uint64_t>(i));
            const auto b = simulate_path(q, x0, cfg, static_cast<std::uint64_t>(i));
            return PathStat{a.payoff - b.payoff, a.censored || b.censored, a.finite && b.finite,
                            a.bias_bound + b.bias_bound};
        });
        stamp(e, cfg);
        return e;
    }

    /// Mean of sup_{t <= horizon} |x_t - x'_t| over paths from x and x + y with shared noise.
    McEstimate coupling_spread(const MarkovPolicy& pol, const Point& x, const Point& y, double horizon,
                               const SimConfig& cfg) const {
        cfg.check();
        require_start(x);
        require_start(x + y);
        const auto steps = static_cast<std::int64_t>(std::llround(horizon / cfg.dt));
        auto e = monte_carlo(cfg.n_paths, cfg.threads, [&](std::int64_t i) {
            PathState a{x}, b{x + y};
            double sup = y.norm();
            for (std::int64_t k = 0; k < steps; ++k) {
                if (barrier_ && (barrier_->psi(a.x) <= 0.0 || barrier_->psi(b.x) <= 0.0)) break;
                advance(a, pol, cfg.dt, cfg.epsilon, cfg.seed, static_cast<std::uint64_t>(i));
                advance(b, pol, cfg.dt, cfg.epsilon, cfg.seed, static_cast<std::uint64_t>(i));
                sup = std::max(sup, (a.x - b.x).norm());
            }
            return PathStat{sup, false, std::isfinite(sup), 0.0};
        });
        stamp(e, cfg);
        return e;
    }

private:
    void check_controls(int a, int b) const {
        if (a < 0 || a >= game_.alphas().size() || b < 0 || b >= game_.betas().size())
            throw ConfigError("policy returned a control outside the problem's control sets");
    }
    void require_start(const Point& x0) const {
        if (x0.size() != game_.dim()) throw ConfigError("start point has the wrong dimension");
        if (barrier_ && !(barrier_->psi(x0) > 0.0)) throw OutsideDomainError("start point is not inside the domain");
    }
    static void stamp(McEstimate& e, const SimConfig& cfg) {
        e.seed = cfg.seed;
        e.dt = cfg.dt;
        e.epsilon = cfg.epsilon;
    }

    GameCoefficients game_;
    std::optional<Barrier> barrier_;
    double sup_f_ = 0.0, sup_g_ = 0.0;
};

struct DppReport {
    double lhs = 0.0;  ///< v(x0)
    McEstimate rhs;
    double discrepancy = 0.0;
    double tolerance = 0.0;
    bool pass = true;
};

/// E[v(x_g) e^{-phi_g - lambda0 g} + int_0^g (f + lambda0 v)(x_t) e^{-phi_t - lambda0 t} dt] against v(x0).
///
/// v is read from a grid field by multilinear interpolation; leaving the grid raises
/// ExtrapolationError. The tolerance is 3 stderr + allowance.
inline DppReport check_dpp(const Simulator& sim, const Grid& grid, const ScalarField& v, double gamma, double lambda0,
                           const Point& x0, const MarkovPolicy& pol, const SimConfig& cfg, double allowance) {
    cfg.check();
    if (!sim.whole_space()) throw ConfigError("the DPP check runs in whole-space mode");
    if (!(gamma >= 0.0) || !(lambda0 >= 0.0)) throw ConfigError("gamma and lambda0 must be nonnegative");
    const auto steps = static_cast<std::int64_t>(std::llround(gamma / cfg.dt));
    DppReport r;
    r.lhs = interpolate(grid, v, x0);
    r.rhs = monte_carlo(cfg.n_paths, cfg.threads, [&](std::int64_t i) {
        PathState s{x0};
        double acc = 0.0;
        for (std::int64_t k = 0; k < steps; ++k) {
            const double vx = interpolate(grid, v, s.x);
            const double t0 = s.t;
            const auto info = sim.advance(s, pol, cfg.dt, cfg.epsilon, cfg.seed, static_cast<std::uint64_t>(i));
            acc += (info.f + lambda0 * vx) * std::exp(-info.phi_before - lambda0 * t0) * cfg.dt;
        }
        const double val = steps == 0 ? r.lhs : acc + interpolate(grid, v, s.x) * std::exp(-s.phi - lambda0 * s.t);
        return PathStat{val, false, std::isfinite(val), 0.0};
    });
    r.rhs.seed = cfg.seed;
    r.rhs.dt = cfg.dt;
    r.rhs.epsilon = cfg.epsilon;
    r.discrepancy = std::abs(r.rhs.mean - r.lhs);
    r.tolerance = 3.0 * r.rhs.std_error + allowance;
    r.pass = r.discrepancy <= r.tolerance;
    return r;
}

struct Perturbation {
    std::string name;
    bool alpha = true;  ///< perturbs the maximizer (payoff must not rise) or the minimizer (must not fall)
    MarkovPolicy policy;
};

struct SaddleEntry {
    std::string name;
    bool alpha = true;
    McEstimate difference;  ///< payoff(perturbed) - payoff(saddle), paired
    bool pass = true;
};

struct SaddleReport {
    McEstimate base;
    std::vector<SaddleEntry> entries;
    bool pass = true;
};

inline SaddleReport saddle_check(const Simulator& sim, const MarkovPolicy& saddle,
                                 const std::vector<Perturbation>& perturbations, const Point& x0,
                                 const SimConfig& cfg) {
    SaddleReport r;
    r.base = sim.estimate_payoff(saddle, x0, cfg);
    for (const auto& p : perturbations) {
        SaddleEntry e{p.name, p.alpha, sim.paired_difference(p.policy, saddle, x0, cfg), true};
        const double slack = 3.0 * e.difference.std_error;
        e.pass = p.alpha ? e.difference.mean <= slack : e.difference.mean >= -slack;
        r.pass = r.pass && e.pass;
        r.entries.push_back(std::move(e));
    }
    return r;
}

}  // namespace isaacs
