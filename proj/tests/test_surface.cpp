#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"

using namespace isaacs;
using testutil::preset;
using testutil::setup;

namespace {

LiftedGame lifted(const std::string& name) {
    const auto def = preset(name);
    return LiftedGame(def.game, *build_barrier(def));
}

}  // namespace

TEST(LiftPoint, UnitLevelAndSurfaceMembership) {
    const auto def = preset("linear1d");
    const auto bar = *build_barrier(def);
    const Point x = Point::Constant(1, std::sqrt(std::log(std::exp(1.0) - 1.0)));
    const auto z = lift_point(x, bar);
    EXPECT_NEAR(z.y(0), 1.0, 1e-12);
    EXPECT_EQ(z.y.tail(3).norm(), 0.0);
    for (double t : {-0.9, -0.2, 0.0, 0.4}) {
        const auto w = lift_point(Point::Constant(1, t), bar, 2);
        EXPECT_NEAR(bar.psi(w.x) - w.y.squaredNorm(), 0.0, 1e-15 * (1.0 + bar.psi(w.x)) * 4);
    }
    EXPECT_THROW(lift_point(Point::Constant(1, 1.0), bar), OutsideDomainError);
    EXPECT_THROW(lift_point(Point::Constant(1, 0.0), bar, 4), ConfigError);
}

TEST(LiftedGame, DiscountConsistency) {
    for (const char* name : {"trig1d", "ball2d", "ellipse2d"}) {
        const auto lg = lifted(name);
        const auto& bar = lg.barrier();
        for (const auto& x : barrier_verification_points(bar, bar.axes().minCoeff() / 8.0))
            for (int ia = 0; ia < lg.game().alphas().size(); ++ia)
                for (int ib = 0; ib < lg.game().betas().size(); ++ib) {
                    const double cb = lg.c_bar(ia, ib, x), ch = lg.c_hat(ia, ib, x);
                    // The barrier inequality gives -L Psi >= 1 + c Psi inside G, so no clamping there.
                    EXPECT_GE(cb, 1.0 - 1e-12) << name;
                    EXPECT_NEAR(cb - ch, lg.game().discount(ia, ib, x) * bar.psi(x), 1e-12 * (1.0 + std::abs(cb)));
                }
    }
}

TEST(SurfaceSimulator, FrozenCentreDecaysFiber) {
    auto def = preset("linear1d");
    auto table = def.game.table();
    table[0].sigma = {CoefFn(0.0)};
    const auto bar = *build_barrier(def);
    const LiftedGame lg(def.game.with_table(table, CoefFn(0.0)), bar);
    const SurfaceSimulator sim(lg);
    const double dt = 1e-4, T = 0.5;
    const LiftedState z0{Point::Zero(1), Fiber(0.3, -0.2, 0.1, 0.5)};
    const auto p = sim.simulate(z0, MarkovPolicy::constant(0, 0), dt, T, false, 1, 0);
    EXPECT_EQ(p.z.x(0), 0.0);
    const double ch = lg.c_hat(0, 0, Point::Zero(1));
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(p.z.y(i), z0.y(i) * std::exp(-0.5 * ch * T), 1e-3 * std::abs(z0.y(i)));
}

TEST(SurfaceSimulator, DiscountDominatedByUnitRate) {
    const auto lg = lifted("game1d");
    const SurfaceSimulator sim(lg);
    const auto z0 = lift_point(Point::Constant(1, 0.3), lg.barrier());
    for (std::uint64_t i = 0; i < 20; ++i) {
        const auto p = sim.simulate(z0, MarkovPolicy::constant(1, 1), 1e-3, 1.0, true, 9, i);
        EXPECT_LE(std::exp(-p.phi_bar), std::exp(-p.t) + 1e-12);
    }
}

TEST(SurfaceSimulator, ProjectionKeepsPathsOnSurface) {
    const auto lg = lifted("ball2d");
    const SurfaceSimulator sim(lg);
    Point x(2);
    x << 0.2, -0.1;
    const auto z0 = lift_point(x, lg.barrier());
    for (std::uint64_t i = 0; i < 10; ++i) {
        const auto p = sim.simulate(z0, MarkovPolicy::constant(0, 1), 1e-3, 1.0, true, 4, i);
        EXPECT_NEAR(lg.barrier().psi(p.z.x), p.z.y.squaredNorm(), 1e-12 * (1.0 + p.z.y.squaredNorm()));
    }
}

TEST(SurfaceSimulator, PlainEulerBreachesAtCoarseSteps) {
    const auto lg = lifted("linear1d");
    const SurfaceSimulator sim(lg, 0);
    const auto z0 = lift_point(Point::Constant(1, 0.95), lg.barrier());
    bool thrown = false;
    for (std::uint64_t i = 0; i < 50 && !thrown; ++i) {
        try {
            sim.simulate(z0, MarkovPolicy::constant(0, 0), 0.2, 5.0, true, 1, i);
        } catch (const SurfaceBreachError&) {
            thrown = true;
        }
    }
    EXPECT_TRUE(thrown);
    EXPECT_THROW(SurfaceSimulator(lg, -1), ConfigError);
}

TEST(SurfaceSimulator, BridgeRefinementKeepsPsiNonnegative) {
    const auto lg = lifted("linear1d");
    const SurfaceSimulator sim(lg);
    const auto z0 = lift_point(Point::Constant(1, 0.95), lg.barrier());
    int refined = 0;
    for (std::uint64_t i = 0; i < 50; ++i) {
        SurfacePath p{z0};
        while (p.t < 5.0) {
            sim.advance(p, MarkovPolicy::constant(0, 0), 0.05, true, 1, i);
            ASSERT_FALSE(p.breached);
            ASSERT_GE(lg.barrier().psi(p.z.x), 0.0);
        }
        refined += p.refined;
    }
    EXPECT_GT(refined, 0);
    // Same seed and path reproduce the refined trajectory.
    const auto a = sim.simulate(z0, MarkovPolicy::constant(0, 0), 0.05, 5.0, true, 1, 3);
    const auto b = sim.simulate(z0, MarkovPolicy::constant(0, 0), 0.05, 5.0, true, 1, 3);
    EXPECT_EQ(a.z.x(0), b.z.x(0));
    EXPECT_EQ(a.integral, b.integral);
}

TEST(SurfaceSimulator, ProjectionOffDriftShrinksUnderRefinement) {
    const auto lg = lifted("linear1d");
    const SurfaceSimulator sim(lg);
    SurfaceConfig cfg;
    cfg.n_paths = 400;
    const auto z0 = lift_point(Point::Constant(1, 0.2), lg.barrier());
    const auto st = gamma_invariance_study(sim, z0, MarkovPolicy::constant(0, 0), {4e-3, 2e-3, 1e-3, 5e-4}, cfg);
    ASSERT_EQ(st.rows.size(), 4u);
    for (std::size_t i = 1; i < st.rows.size(); ++i) {
        EXPECT_LT(st.rows[i].drift.mean, st.rows[i - 1].drift.mean);
        EXPECT_DOUBLE_EQ(*st.rows[i].ratio, st.rows[i].drift.mean / st.rows[i - 1].drift.mean);
    }
}

TEST(EstimateVbar, ZeroRunningCostGivesZero) {
    auto def = preset("linear1d");
    auto table = def.game.table();
    table[0].f = CoefFn(0.0);
    const SurfaceSimulator sim(LiftedGame(def.game.with_table(table, CoefFn(0.0)), *build_barrier(def)));
    SurfaceConfig cfg;
    cfg.n_paths = 20;
    const auto e = sim.estimate_vbar(lift_point(Point::Zero(1), sim.lifted().barrier()), MarkovPolicy::constant(0, 0), cfg);
    EXPECT_EQ(e.mean, 0.0);
    EXPECT_EQ(e.std_error, 0.0);
}

TEST(EstimateVbar, MatchesValueOverBarrierAndScalesWithPaths) {
    const auto lg = lifted("linear1d");
    const SurfaceSimulator sim(lg);
    const auto z0 = lift_point(Point::Zero(1), lg.barrier());
    SurfaceConfig cfg;
    cfg.dt = 4e-3;
    cfg.n_paths = 1000;
    const auto a = sim.estimate_vbar(z0, MarkovPolicy::constant(0, 0), cfg);
    cfg.n_paths = 4000;
    const auto b = sim.estimate_vbar(z0, MarkovPolicy::constant(0, 0), cfg);
    const double psi = lg.barrier().psi(Point::Zero(1));
    EXPECT_LE(std::abs(b.mean * psi - 1.0), 3.0 * b.std_error * psi + 2.0 * std::sqrt(cfg.dt));
    EXPECT_NEAR(a.std_error / b.std_error, 2.0, 0.4);
    EXPECT_EQ(b.censored_count, 0);
}

TEST(EstimateVbar, FiberDirectionDoesNotMatter) {
    const auto lg = lifted("game1d");
    const SurfaceSimulator sim(lg);
    const Point x = Point::Constant(1, 0.3);
    SurfaceConfig cfg;
    cfg.dt = 4e-3;
    cfg.n_paths = 2000;
    const auto a = sim.estimate_vbar(lift_point(x, lg.barrier(), 0), MarkovPolicy::constant(0, 1), cfg);
    cfg.seed = 2;
    const auto b = sim.estimate_vbar(lift_point(x, lg.barrier(), 1), MarkovPolicy::constant(0, 1), cfg);
    EXPECT_LE(std::abs(a.mean - b.mean), 3.0 * std::hypot(a.std_error, b.std_error));
}

TEST(CheckReduction, SkipsNearBoundaryAndRejectsTerminalCost) {
    const auto s = setup("linear1d", 1.0 / 32);
    const auto r = solve_isaacs(*s.dg);
    const SurfaceSimulator sim(LiftedGame(s.def.game, *s.barrier));
    SurfaceConfig cfg;
    cfg.dt = 4e-3;
    cfg.n_paths = 2000;
    const std::vector<Point> xs{Point::Zero(1), Point::Constant(1, 0.99)};
    const auto rows = check_reduction(sim, xs, *s.grid, r.v, MarkovPolicy::constant(0, 0), cfg,
                                      5.0 * s.grid->h() * s.grid->h() + 2.0 * std::sqrt(cfg.dt));
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_FALSE(rows[0].skipped);
    EXPECT_TRUE(rows[0].pass) << rows[0].difference << " > " << rows[0].tolerance;
    EXPECT_TRUE(rows[1].skipped);
    const auto g = preset("affine_g1d");
    const SurfaceSimulator gs(LiftedGame(g.game, *build_barrier(g)));
    EXPECT_THROW(check_reduction(gs, xs, *s.grid, r.v, MarkovPolicy::constant(0, 0), cfg, 0.1), ConfigError);
}

TEST(EquatorBand, CalibrationConditionsHoldAndPersistUnderHalving) {
    for (const char* name : {"linear1d", "ball2d"}) {
        const auto lg = lifted(name);
        const auto band = calibrate_equator_band(lg);
        const double c1 = std::cos(1.0), delta = lg.game().constants().delta;
        EXPECT_GT(band.eps, 0.0);
        EXPECT_NEAR(band.lambda, 1.0 / std::sqrt(2.0 * band.eps), 1e-12);
        EXPECT_GE(band.lambda * band.lambda / 16.0 * delta * c1 - 2.0 * band.N0 * c1, band.N1);
        EXPECT_NEAR(band.N0, band.L_b + 0.5 * band.L_sigma * band.L_sigma + 0.5, 1e-12);
        for (double e : {band.eps, band.eps / 2.0}) {
            // Dense scan of the band on a fine lattice.
            const auto& bar = lg.barrier();
            for (const auto& x : lattice_points(bar.axes(), bar.axes().minCoeff() / 400.0)) {
                const double p = bar.psi(x);
                if (p >= 0.0 && p <= 2.0 * e) EXPECT_GE(bar.grad_psi(x).norm(), 0.5) << name;
            }
            const double l2 = 1.0 / (2.0 * e);
            EXPECT_GE(l2 / 16.0 * delta * c1 - 2.0 * band.N0 * c1, band.N1);
        }
    }
}

TEST(EquatorBand, MomentAtBandEdgeIsOneAndBoundHoldsInside) {
    const auto s = setup("ball2d", 1.0 / 16);
    const auto r = solve_isaacs(*s.dg);
    const auto pol = MarkovPolicy::from_solve(*s.dg, r);
    const LiftedGame lg(s.def.game, *s.barrier);
    const SurfaceSimulator sim(lg);
    const auto band = calibrate_equator_band(lg);
    EXPECT_NEAR(1.0 / std::cos(1.0), 1.8508, 1e-4);
    Point dir(2);
    dir << 1.0, 0.5;
    SurfaceConfig cfg;
    cfg.n_paths = 200;
    cfg.dt = std::min(1e-3, band.eps / 50.0);
    const auto edge = surface_point_at_level(lg.barrier(), dir, 2.0 * band.eps);
    const auto m0 = equator_exit_moment(sim, band, edge, pol, cfg);
    EXPECT_EQ(m0.estimate.mean, 1.0);
    const auto inner = surface_point_at_level(lg.barrier(), dir, 0.5 * band.eps);
    const auto m = equator_exit_moment(sim, band, inner, pol, cfg);
    EXPECT_TRUE(m.pass) << m.estimate.mean;
}

TEST(Supermartingale, IdenticalStartsAndNearbyStarts) {
    const auto lg = lifted("linear1d");
    const SurfaceSimulator sim(lg);
    const auto band = calibrate_equator_band(lg);
    SurfaceConfig cfg;
    cfg.n_paths = 300;
    const auto z = lift_point(Point::Constant(1, 0.1), lg.barrier());
    const auto same = coupled_supermartingale_check(sim, z, z, MarkovPolicy::constant(0, 0), band.N0, cfg);
    EXPECT_TRUE(same.pass);
    for (const auto& l : same.levels) EXPECT_EQ(l.mean, 0.0);
    const auto w = lift_point(Point::Constant(1, 0.12), lg.barrier());
    const auto near = coupled_supermartingale_check(sim, z, w, MarkovPolicy::constant(0, 0), band.N0, cfg);
    EXPECT_TRUE(near.pass);
    EXPECT_LT(near.levels.back().mean, near.levels.front().mean);
}
