#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "isaacs/errors.hpp"
#include "isaacs/extended.hpp"
#include "isaacs/operators.hpp"

namespace isaacs {

struct SolveConfig {
    double tolerance = 1e-8;  ///< max-norm residual certified on return
    int max_outer = 200;      ///< policy improvements of the maximizing player
    int max_inner = 200;      ///< policy improvements of the minimizing player per outer step
    double relaxation = 1.0;  ///< damping of the Gauss-Seidel fallback, in (0, 1]
    int max_sweeps = 200000;  ///< fallback sweep budget
    bool allow_nonmonotone = false;
    bool force_gauss_seidel = false;  ///< skip policy iteration (testing and cross-checks)

    void check() const {
        if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
        if (max_outer < 1 || max_inner < 1 || max_sweeps < 1) throw ConfigError("iteration budgets must be positive");
        if (!(relaxation > 0.0 && relaxation <= 1.0)) throw ConfigError("relaxation must lie in (0, 1]");
    }
};

enum class RegMode { ObstacleResidual, ExtendedGame };

/// alpha marker for nodes that use the exact Pucci maximizer.
inline constexpr int kExactPucci = -2;

struct SolveResult {
    ScalarField v;
    int n_alpha_total = 0;          ///< |A1| (+ |A2| for the extended game)
    std::vector<int> alpha;         ///< per node; -1 off the interior
    std::vector<int> beta;          ///< per node, for the chosen alpha
    std::vector<int> beta_table;    ///< node * n_alpha_total + alpha -> argmin beta at v
    std::vector<double> residual_history;
    double residual = 0.0;          ///< independently re-evaluated max-norm residual
    int outer_iterations = 0;
    int linear_solves = 0;
    bool used_fallback = false;
    std::vector<std::string> warnings;
};

/// Optional inputs shared by all solves.
struct SolveOptions {
    const ScalarField* boundary = nullptr;  ///< values on non-interior nodes (default g)
    const ScalarField* source = nullptr;    ///< solve F(u) = source instead of F(u) = 0
    const SolveResult* warm = nullptr;      ///< initial field and policy
};

namespace detail {

/// Howard iteration over a candidate set: A1 x B from the discrete game, constant
/// A2 controls, and optionally the exact Pucci maximizer.
class HowardEngine {
public:
    HowardEngine(const DiscreteGame& dg, std::vector<LocalCoeffs> a2, bool exact, double K, double dh,
                 const SolveConfig& cfg, const SolveOptions& opt)
        : dg_(dg), g_(dg.grid()), a2_(std::move(a2)), exact_(exact), K_(K), dh_(dh), cfg_(cfg), opt_(opt) {
        nA_ = dg.n_alpha();
        nS_ = static_cast<int>(g_.interior_nodes().size());
        switch_tol_ = 0.1 * cfg.tolerance;
        u_ = opt.boundary ? *opt.boundary : dg.boundary_field();
        if (static_cast<int>(u_.size()) != g_.size()) throw ConfigError("boundary field has the wrong shape");
        if (opt.source && static_cast<int>(opt.source->size()) != g_.size())
            throw ConfigError("source field has the wrong shape");
        alpha_.assign(static_cast<std::size_t>(nS_), 0);
        beta_.assign(static_cast<std::size_t>(nS_), 0);
        exact_k_.resize(static_cast<std::size_t>(nS_));
    }

    SolveResult run() {
        init();
        if (cfg_.force_gauss_seidel) {
            gauss_seidel();
        } else {
            std::set<std::uint64_t> seen;
            bool converged = false;
            for (int outer = 0; outer < cfg_.max_outer; ++outer) {
                inner_loop();
                ++outer_;
                const auto [changed, res] = improve_alpha();
                history_.push_back(res);
                if (!changed) {
                    converged = true;
                    break;
                }
                if (!seen.insert(policy_hash()).second) {
                    warnings_.push_back("policy cycle detected; switched to damped Gauss-Seidel");
                    gauss_seidel();
                    converged = true;
                    break;
                }
            }
            if (!converged) throw NonConvergenceError("policy iteration exhausted its outer budget", history_);
        }
        SolveResult r;
        r.v = u_;
        r.n_alpha_total = nA_ + static_cast<int>(a2_.size());
        r.alpha.assign(static_cast<std::size_t>(g_.size()), -1);
        r.beta.assign(static_cast<std::size_t>(g_.size()), -1);
        for (int s = 0; s < nS_; ++s) {
            const int n = g_.interior_nodes()[static_cast<std::size_t>(s)];
            r.alpha[static_cast<std::size_t>(n)] = alpha_[static_cast<std::size_t>(s)];
            r.beta[static_cast<std::size_t>(n)] = beta_[static_cast<std::size_t>(s)];
        }
        r.residual_history = history_;
        r.outer_iterations = outer_;
        r.linear_solves = solves_;
        r.used_fallback = fallback_;
        r.warnings = warnings_;
        return r;
    }

private:
    double src(int s) const {
        return opt_.source ? (*opt_.source)[static_cast<std::size_t>(g_.interior_nodes()[static_cast<std::size_t>(s)])]
                           : 0.0;
    }
    int node(int s) const { return g_.interior_nodes()[static_cast<std::size_t>(s)]; }

    /// Coefficients of the row currently selected at a slot.
    const LocalCoeffs& row(int s) const {
        const int a = alpha_[static_cast<std::size_t>(s)];
        if (a == kExactPucci) return exact_k_[static_cast<std::size_t>(s)];
        if (a >= nA_) return a2_[static_cast<std::size_t>(a - nA_)];
        return dg_.coeffs(s, a, beta_[static_cast<std::size_t>(s)]);
    }

    double value(const NodeDerivs& D, const LocalCoeffs& k, int s) const { return apply_L(D, k) + k.f - src(s); }

    struct Best {
        double value;
        int alpha;
        int beta;
    };

    /// Best candidate at a slot (max over alpha of min over beta).
    Best best_candidate(const NodeDerivs& D, int s, LocalCoeffs* exact_out) const {
        Best b{-std::numeric_limits<double>::infinity(), 0, 0};
        for (int ia = 0; ia < nA_; ++ia) {
            double m = std::numeric_limits<double>::infinity();
            int mb = 0;
            for (int ib = 0; ib < dg_.n_beta(); ++ib) {
                const double v = value(D, dg_.coeffs(s, ia, ib), s);
                if (v < m) m = v, mb = ib;
            }
            if (m > b.value) b = {m, ia, mb};
        }
        for (std::size_t k = 0; k < a2_.size(); ++k) {
            const double v = value(D, a2_[k], s);
            if (v > b.value) b = {v, nA_ + static_cast<int>(k), 0};
        }
        if (exact_) {
            const auto p = pucci_P(D, dh_);
            const double v = p.value - K_ - src(s);
            if (v > b.value) {
                b = {v, kExactPucci, 0};
                if (exact_out) {
                    *exact_out = p.maximizer;
                    exact_out->f = -K_;
                }
            }
        }
        return b;
    }

    void init() {
        if (opt_.warm) {
            const auto& w = *opt_.warm;
            if (static_cast<int>(w.v.size()) != g_.size()) throw ConfigError("warm start has the wrong shape");
            for (int s = 0; s < nS_; ++s) u_[static_cast<std::size_t>(node(s))] = w.v[static_cast<std::size_t>(node(s))];
            const int total = nA_ + static_cast<int>(a2_.size());
            for (int s = 0; s < nS_; ++s) {
                const int a = w.alpha[static_cast<std::size_t>(node(s))];
                const bool ok = (a >= 0 && a < total) || (a == kExactPucci && exact_);
                if (ok) {
                    alpha_[static_cast<std::size_t>(s)] = a;
                    beta_[static_cast<std::size_t>(s)] = std::max(0, w.beta[static_cast<std::size_t>(node(s))]);
                    if (a == kExactPucci) refresh_exact(s);
                } else {
                    greedy(s);
                }
            }
        } else {
            for (int s = 0; s < nS_; ++s) greedy(s);
        }
    }

    void refresh_exact(int s) {
        const auto D = node_derivatives(g_, u_, node(s));
        exact_k_[static_cast<std::size_t>(s)] = pucci_P(D, dh_).maximizer;
        exact_k_[static_cast<std::size_t>(s)].f = -K_;
    }

    void greedy(int s) {
        const auto D = node_derivatives(g_, u_, node(s));
        const auto b = best_candidate(D, s, &exact_k_[static_cast<std::size_t>(s)]);
        alpha_[static_cast<std::size_t>(s)] = b.alpha;
        beta_[static_cast<std::size_t>(s)] = b.beta;
    }

    void solve_linear() {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(nS_) * 9);
        Eigen::VectorXd rhs(nS_);
        for (int s = 0; s < nS_; ++s) {
            const auto& k = row(s);
            const Stencil st = make_stencil(g_.dim(), g_.h(), k);
            if (!(st.center < 0.0)) throw DiscretizationError("degenerate stencil at " + g_.describe(node(s)));
            double r = -(k.f - src(s));
            trip.emplace_back(s, s, st.center);
            for (int i = 0; i < st.n; ++i) {
                const auto& [shift, w] = st.nb[static_cast<std::size_t>(i)];
                if (w == 0.0) continue;
                const int nb = g_.neighbor(node(s), shift);
                const int ns = g_.slot(nb);
                if (ns >= 0) trip.emplace_back(s, ns, w);
                else r -= w * u_[static_cast<std::size_t>(nb)];
            }
            rhs(s) = r;
        }
        Eigen::SparseMatrix<double> A(nS_, nS_);
        A.setFromTriplets(trip.begin(), trip.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
        lu.compute(A);
        if (lu.info() != Eigen::Success) throw InternalError("sparse LU factorization failed");
        const Eigen::VectorXd x = lu.solve(rhs);
        for (int s = 0; s < nS_; ++s) u_[static_cast<std::size_t>(node(s))] = x(s);
        ++solves_;
    }

    /// Policy iteration of the minimizing player for the current alpha policy.
    void inner_loop() {
        for (int it = 0; it < cfg_.max_inner; ++it) {
            solve_linear();
            bool changed = false;
            for (int s = 0; s < nS_; ++s) {
                const int a = alpha_[static_cast<std::size_t>(s)];
                if (a < 0 || a >= nA_) continue;
                const auto D = node_derivatives(g_, u_, node(s));
                const double cur = value(D, dg_.coeffs(s, a, beta_[static_cast<std::size_t>(s)]), s);
                double m = std::numeric_limits<double>::infinity();
                int mb = 0;
                for (int ib = 0; ib < dg_.n_beta(); ++ib) {
                    const double v = value(D, dg_.coeffs(s, a, ib), s);
                    if (v < m) m = v, mb = ib;
                }
                if (m < cur - switch_tol_) {
                    beta_[static_cast<std::size_t>(s)] = mb;
                    changed = true;
                }
            }
            if (!changed) return;
        }
        throw NonConvergenceError("inner policy iteration exhausted its budget", history_);
    }

    /// Switch alpha where a candidate improves by more than the switching threshold.
    std::pair<bool, double> improve_alpha() {
        bool changed = false;
        double res = 0.0;
        for (int s = 0; s < nS_; ++s) {
            const auto D = node_derivatives(g_, u_, node(s));
            LocalCoeffs ek;
            const Best b = best_candidate(D, s, &ek);
            res = std::max(res, std::abs(b.value));
            const int a = alpha_[static_cast<std::size_t>(s)];
            double cur;
            if (a >= 0 && a < nA_) {
                cur = std::numeric_limits<double>::infinity();
                for (int ib = 0; ib < dg_.n_beta(); ++ib) cur = std::min(cur, value(D, dg_.coeffs(s, a, ib), s));
            } else {
                cur = value(D, row(s), s);
            }
            if (b.value > cur + switch_tol_) {
                alpha_[static_cast<std::size_t>(s)] = b.alpha;
                beta_[static_cast<std::size_t>(s)] = b.beta;
                if (b.alpha == kExactPucci) exact_k_[static_cast<std::size_t>(s)] = ek;
                changed = true;
            }
        }
        return {changed, res};
    }

    std::uint64_t policy_hash() const {
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&](std::uint64_t v) {
            h ^= v;
            h *= 1099511628211ull;
        };
        for (int s = 0; s < nS_; ++s) {
            mix(static_cast<std::uint64_t>(alpha_[static_cast<std::size_t>(s)] + 7));
            mix(static_cast<std::uint64_t>(beta_[static_cast<std::size_t>(s)] + 7));
            if (alpha_[static_cast<std::size_t>(s)] == kExactPucci) {
                const auto& k = exact_k_[static_cast<std::size_t>(s)];
                for (int i = 0; i < k.a.size(); ++i) {
                    const double v = k.a.data()[i];
                    std::uint64_t bits;
                    std::memcpy(&bits, &v, sizeof bits);
                    mix(bits);
                }
            }
        }
        return h;
    }

    /// Root in t of the candidate value when the centre value is replaced by t.
    double affine_root(const NodeDerivs& D, const LocalCoeffs& k, int s) const {
        const double w0 = make_stencil(g_.dim(), g_.h(), k).center;
        return D.u0 - value(D, k, s) / w0;
    }

    /// Exact nodal solve of the max-min equation with neighbours frozen.
    double nodal_root(int s) {
        const int n = node(s);
        const auto D = node_derivatives(g_, u_, n);
        double root = -std::numeric_limits<double>::infinity();
        for (int ia = 0; ia < nA_; ++ia) {
            double m = std::numeric_limits<double>::infinity();
            for (int ib = 0; ib < dg_.n_beta(); ++ib) m = std::min(m, affine_root(D, dg_.coeffs(s, ia, ib), s));
            root = std::max(root, m);
        }
        for (const auto& k : a2_) root = std::max(root, affine_root(D, k, s));
        if (exact_) {
            // P(t) - K - s is convex and decreasing in t: iterate on its supporting lines.
            const double saved = u_[static_cast<std::size_t>(n)];
            double t = root;
            for (int it = 0; it < 100; ++it) {
                u_[static_cast<std::size_t>(n)] = std::isfinite(t) ? t : saved;
                const auto Dt = node_derivatives(g_, u_, n);
                auto p = pucci_P(Dt, dh_);
                p.maximizer.f = -K_;
                const double v = value(Dt, p.maximizer, s);
                if (std::isfinite(t) && v <= 1e-14 * (1.0 + std::abs(t))) break;
                t = affine_root(Dt, p.maximizer, s);
            }
            u_[static_cast<std::size_t>(n)] = saved;
            root = std::max(root, t);
        }
        return root;
    }

    double residual_now() {
        double res = 0.0;
        for (int s = 0; s < nS_; ++s) {
            const auto D = node_derivatives(g_, u_, node(s));
            res = std::max(res, std::abs(best_candidate(D, s, nullptr).value));
        }
        return res;
    }

    void gauss_seidel() {
        fallback_ = true;
        const double w = cfg_.relaxation;
        for (int sweep = 0; sweep < cfg_.max_sweeps; ++sweep) {
            for (int s = 0; s < nS_; ++s) {
                const double t = nodal_root(s);
                auto& u0 = u_[static_cast<std::size_t>(node(s))];
                u0 += w * (t - u0);
            }
            if (sweep % 16 == 15 || sweep + 1 == cfg_.max_sweeps) {
                const double res = residual_now();
                history_.push_back(res);
                if (res <= 0.5 * cfg_.tolerance) {
                    for (int s = 0; s < nS_; ++s) greedy(s);
                    return;
                }
            }
        }
        throw NonConvergenceError("Gauss-Seidel fallback exhausted its sweep budget", history_);
    }

    const DiscreteGame& dg_;
    const Grid& g_;
    std::vector<LocalCoeffs> a2_;
    bool exact_;
    double K_, dh_;
    SolveConfig cfg_;
    SolveOptions opt_;
    int nA_ = 1, nS_ = 0;
    double switch_tol_ = 0.0;
    ScalarField u_;
    std::vector<int> alpha_, beta_;
    std::vector<LocalCoeffs> exact_k_;
    std::vector<double> history_;
    std::vector<std::string> warnings_;
    int outer_ = 0, solves_ = 0;
    bool fallback_ = false;
};

inline void fill_beta_table(const DiscreteGame& dg, const std::vector<LocalCoeffs>& a2, SolveResult& r) {
    const auto& g = dg.grid();
    r.beta_table.assign(static_cast<std::size_t>(g.size()) * static_cast<std::size_t>(r.n_alpha_total), 0);
    (void)a2;
    for (int n : g.interior_nodes()) {
        const auto D = node_derivatives(g, r.v, n);
        const int s = g.slot(n);
        for (int ia = 0; ia < dg.n_alpha(); ++ia) {
            double m = std::numeric_limits<double>::infinity();
            int mb = 0;
            for (int ib = 0; ib < dg.n_beta(); ++ib) {
                const auto& k = dg.coeffs(s, ia, ib);
                const double v = apply_L(D, k) + k.f;
                if (v < m) m = v, mb = ib;
            }
            r.beta_table[static_cast<std::size_t>(n) * static_cast<std::size_t>(r.n_alpha_total) +
                         static_cast<std::size_t>(ia)] = mb;
        }
    }
}

inline void require_monotone(const DiscreteGame& dg, std::optional<PucciSpec> spec, const SolveConfig& cfg,
                             SolveResult* r) {
    const auto rep = monotonicity_report(dg, spec);
    if (rep.monotone) return;
    if (!cfg.allow_nonmonotone)
        throw ConfigError("scheme is not monotone (" + std::to_string(rep.violations) +
                          " violations, first: " + rep.first_offender + ")");
    if (r) r->warnings.push_back("solving on a non-monotone grid: " + rep.first_offender);
}

inline double source_at(const SolveOptions& opt, int node) {
    return opt.source ? (*opt.source)[static_cast<std::size_t>(node)] : 0.0;
}

inline void require_finite(const ScalarField& v) {
    for (double x : v)
        if (!std::isfinite(x)) throw InternalError("solver produced a non-finite value");
}

}  // namespace detail

/// Discrete Isaacs equation H_h[v] = 0 in the interior, v = g on the boundary band.
inline SolveResult solve_isaacs(const DiscreteGame& dg, const SolveConfig& cfg = {}, const SolveOptions& opt = {}) {
    cfg.check();
    std::vector<std::string> pre;
    {
        SolveResult tmp;
        detail::require_monotone(dg, std::nullopt, cfg, &tmp);
        pre = tmp.warnings;
    }
    detail::HowardEngine eng(dg, {}, false, 0.0, 0.5, cfg, opt);
    SolveResult r = eng.run();
    r.warnings.insert(r.warnings.begin(), pre.begin(), pre.end());
    detail::require_finite(r.v);
    double res = 0.0;
    for (int n : dg.grid().interior_nodes())
        res = std::max(res, std::abs(isaacs_H(dg, r.v, n).value - detail::source_at(opt, n)));
    r.residual = res;
    if (res > cfg.tolerance)
        throw NonConvergenceError("residual certificate failed: " + std::to_string(res), r.residual_history);
    detail::fill_beta_table(dg, {}, r);
    return r;
}

/// max(H_h[v], P_h[v] - K) = 0 (obstacle-residual) or the Isaacs equation over
/// A1 u A2 with running cost -K on A2 (extended-game).
///
/// Obstacle-residual mode iterates over A1 and the sampled vertices in d = 1
/// (where the sample is exact) and over A1 and the exact Pucci maximizer in d = 2.
inline SolveResult solve_regularized(const DiscreteGame& dg, double K, const PucciSpec& spec, const SolveConfig& cfg,
                                     RegMode mode, const SolveOptions& opt = {}) {
    cfg.check();
    if (!(K >= 0.0)) throw ConfigError("K must be nonnegative");
    const int d = dg.grid().dim();
    const auto family = a2_vertex_family(d, spec);
    const auto a2 = a2_local(family, K);
    SolveResult pre;
    detail::require_monotone(dg, spec, cfg, &pre);
    const bool exact = mode == RegMode::ObstacleResidual && d == 2;
    detail::HowardEngine eng(dg, exact ? std::vector<LocalCoeffs>{} : a2, exact, K, spec.delta_hat, cfg, opt);
    SolveResult r = eng.run();
    r.warnings.insert(r.warnings.begin(), pre.warnings.begin(), pre.warnings.end());
    detail::require_finite(r.v);
    if (exact) r.n_alpha_total = dg.n_alpha() + static_cast<int>(a2.size());
    double res = 0.0;
    for (int n : dg.grid().interior_nodes()) {
        double F;
        if (mode == RegMode::ObstacleResidual) {
            F = regularized_residual(dg, r.v, n, K, spec.delta_hat);
        } else {
            const auto D = node_derivatives(dg.grid(), r.v, n);
            F = extended_hamiltonian(dg, a2, D, dg.grid().slot(n)).value;
        }
        res = std::max(res, std::abs(F - detail::source_at(opt, n)));
    }
    r.residual = res;
    if (res > cfg.tolerance)
        throw NonConvergenceError("residual certificate failed: " + std::to_string(res), r.residual_history);
    detail::fill_beta_table(dg, a2, r);
    return r;
}

struct ModeCrossCheck {
    double max_difference = 0.0;
    double bound = 0.0;
    bool pass = true;
};

/// Solve in both modes and compare. The bound is the rotation-sampling gap of P
/// (largest Hessian spread at the exact solution) times max Psi, plus 2 tol.
inline ModeCrossCheck cross_check_modes(const DiscreteGame& dg, double K, const PucciSpec& spec,
                                        const SolveConfig& cfg, const SolveOptions& opt = {}) {
    const auto a = solve_regularized(dg, K, spec, cfg, RegMode::ObstacleResidual, opt);
    const auto b = solve_regularized(dg, K, spec, cfg, RegMode::ExtendedGame, opt);
    ModeCrossCheck c;
    double spread = 0.0, psi_max = 0.0;
    for (int n : dg.grid().interior_nodes()) {
        c.max_difference = std::max(c.max_difference,
                                    std::abs(a.v[static_cast<std::size_t>(n)] - b.v[static_cast<std::size_t>(n)]));
        spread = std::max(spread, pucci_P(node_derivatives(dg.grid(), a.v, n), spec.delta_hat).spread);
        psi_max = std::max(psi_max, dg.grid().level(n));
    }
    c.bound = rotation_sampling_factor(spec, dg.grid().dim()) * spread * psi_max + 2.0 * cfg.tolerance;
    c.pass = c.max_difference <= c.bound;
    if (!c.pass)
        throw CrossCheckError("obstacle-residual and extended-game solutions differ by " +
                              std::to_string(c.max_difference) + " > " + std::to_string(c.bound));
    return c;
}

struct RateRow {
    double K = 0.0;
    double e_K = 0.0;
    double weighted = 0.0;              ///< sup |v_K - v| K / Psi
    std::optional<double> ratio;        ///< e_K over the next row's e_K
    int iterations = 0;
    double wall_time_ms = 0.0;
};

struct RateStudyResult {
    std::vector<RateRow> rows;
    double obstacle_threshold = 0.0;    ///< max over the grid of P_h[v]
    std::optional<double> slope;        ///< log-log fit over obstacle-active rows
    double empirical_N = 0.0;           ///< max weighted error
    bool complete = true;
    std::string error;
};

/// Tabulate |v_K - v| for each K against a reference solve on the same grid.
///
/// Each regularized solve is warm-started from the reference. Rows with K at or
/// above the obstacle threshold are reported but excluded from the slope fit.
inline RateStudyResult rate_study(const DiscreteGame& dg, const SolveResult& ref, const std::vector<double>& Ks,
                                  const PucciSpec& spec, const SolveConfig& cfg, RegMode mode = RegMode::ExtendedGame,
                                  bool timing = false) {
    for (std::size_t i = 0; i < Ks.size(); ++i) {
        if (!(Ks[i] >= 1.0)) throw ConfigError("K values must be >= 1");
        if (i && !(Ks[i] > Ks[i - 1])) throw ConfigError("K values must increase strictly");
    }
    const auto& g = dg.grid();
    RateStudyResult out;
    for (int n : g.interior_nodes())
        out.obstacle_threshold = std::max(out.obstacle_threshold, pucci_P(g, ref.v, n, spec.delta_hat));
    SolveOptions opt;
    opt.warm = &ref;
    for (double K : Ks) {
        const auto t0 = std::chrono::steady_clock::now();
        SolveResult r;
        try {
            r = solve_regularized(dg, K, spec, cfg, mode, opt);
        } catch (const std::exception& e) {
            out.complete = false;
            out.error = "K=" + std::to_string(K) + ": " + e.what();
            break;
        }
        const auto t1 = std::chrono::steady_clock::now();
        RateRow row;
        row.K = K;
        for (int n : g.interior_nodes()) {
            const double diff = std::abs(r.v[static_cast<std::size_t>(n)] - ref.v[static_cast<std::size_t>(n)]);
            row.e_K = std::max(row.e_K, diff);
            row.weighted = std::max(row.weighted, diff * K / g.level(n));
        }
        row.iterations = r.outer_iterations;
        if (timing) row.wall_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        out.rows.push_back(row);
    }
    for (std::size_t i = 0; i + 1 < out.rows.size(); ++i)
        if (out.rows[i + 1].e_K > 0.0) out.rows[i].ratio = out.rows[i].e_K / out.rows[i + 1].e_K;
    std::vector<double> xs, ys;
    for (const auto& r : out.rows) {
        out.empirical_N = std::max(out.empirical_N, r.weighted);
        if (r.K < out.obstacle_threshold && r.e_K > 0.0) {
            xs.push_back(std::log(r.K));
            ys.push_back(std::log(r.e_K));
        }
    }
    if (xs.size() >= 2) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
        mx /= static_cast<double>(xs.size());
        my /= static_cast<double>(xs.size());
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) sxy += (xs[i] - mx) * (ys[i] - my), sxx += (xs[i] - mx) * (xs[i] - mx);
        out.slope = sxy / sxx;
    }
    return out;
}

}  // namespace isaacs
