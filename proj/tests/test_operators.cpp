#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"

using namespace isaacs;
using testutil::field_from;
using testutil::random_field;
using testutil::setup;

namespace {

std::shared_ptr<const Grid> box_grid(int d, double L, double h) { return std::make_shared<const Grid>(Grid::box(d, L, h)); }

LocalCoeffs coeffs(const SqMat& a, const Point& b, double c, double f = 0.0) { return {a, b, c, f}; }

}  // namespace

TEST(Grid, ClassifiesBallAndRejectsBadSpacing) {
    const auto s = setup("ball2d", 1.0 / 16);
    const auto& g = *s.grid;
    EXPECT_FALSE(g.interior_nodes().empty());
    for (int n : g.interior_nodes()) {
        EXPECT_GT(g.level(n), 0.0);
        for (int s0 = -1; s0 <= 1; ++s0)
            for (int s1 = -1; s1 <= 1; ++s1) EXPECT_NE(g.kind(g.neighbor(n, {s0, s1, 0})), NodeKind::Exterior);
    }
    for (int n : g.boundary_nodes()) EXPECT_LE(g.level(n), 0.0);
    EXPECT_THROW(Grid::box(2, 1.0, 0.0), ConfigError);
    EXPECT_THROW(Grid::box(3, 1.0, 0.5), ConfigError);
}

TEST(Grid, InterpolationIsExactOnBilinearAndRefusesExtrapolation) {
    const auto g = box_grid(2, 1.0, 0.125);
    const auto u = field_from(*g, [](const Point& x) { return 1.0 + 2.0 * x(0) - x(1) + 0.5 * x(0) * x(1); });
    Point x(2);
    x << 0.31, -0.77;
    EXPECT_NEAR(interpolate(*g, u, x), 1.0 + 0.62 + 0.77 - 0.5 * 0.31 * 0.77, 1e-13);
    x << 3.0, 0.0;
    EXPECT_THROW(interpolate(*g, u, x), ExtrapolationError);
}

TEST(ApplyL, ConstantField) {
    const auto g = box_grid(2, 1.0, 0.25);
    const ScalarField u(static_cast<std::size_t>(g->size()), 3.0);
    SqMat a(2, 2);
    a << 1.0, 0.3, 0.3, 0.8;
    Point b(2);
    b << -2.0, 5.0;
    const auto D = node_derivatives(*g, u, g->interior_nodes()[3]);
    EXPECT_EQ(apply_L(D, coeffs(a, b, 0.7)), -(0.7 * 3.0));
}

TEST(ApplyL, QuadraticExactness1D) {
    const auto g = box_grid(1, 1.0, 1.0 / 32);
    const auto u = field_from(*g, [](const Point& x) { return x(0) * x(0); });
    for (int n : g->interior_nodes())
        EXPECT_NEAR(apply_L(node_derivatives(*g, u, n), coeffs(SqMat::Constant(1, 1, 1.0), Point::Zero(1), 0.0)), 2.0,
                    1e-10);
}

TEST(ApplyL, CrossTermOnBilinear) {
    const auto g = box_grid(2, 1.0, 1.0 / 16);
    const auto u = field_from(*g, [](const Point& x) { return x(0) * x(1); });
    for (double a12 : {0.3, -0.3}) {
        SqMat a(2, 2);
        a << 1.0, a12, a12, 1.0;
        for (int n : g->interior_nodes())
            EXPECT_NEAR(apply_L(node_derivatives(*g, u, n), coeffs(a, Point::Zero(2), 0.0)), 2.0 * a12, 1e-10);
    }
}

TEST(ApplyL, QuadraticExactness2DWithCrossTerm) {
    const auto g = box_grid(2, 1.0, 1.0 / 8);
    const auto u = field_from(*g, [](const Point& x) { return 0.7 * x(0) * x(0) - 0.4 * x(0) * x(1) + 1.3 * x(1) * x(1); });
    SqMat a(2, 2);
    a << 0.9, -0.2, -0.2, 0.6;
    // a : D^2 u = 0.9*1.4 + 0.6*2.6 + 2*(-0.2)*(-0.4)
    for (int n : g->interior_nodes())
        EXPECT_NEAR(apply_L(node_derivatives(*g, u, n), coeffs(a, Point::Zero(2), 0.0)), 1.26 + 1.56 + 0.16, 1e-11);
}

TEST(ApplyL, StencilOutOfRangeNamesTheNode) {
    const auto g = box_grid(1, 1.0, 0.25);
    const ScalarField u(static_cast<std::size_t>(g->size()), 0.0);
    try {
        node_derivatives(*g, u, 0);
        FAIL();
    } catch (const DiscretizationError& e) {
        EXPECT_NE(std::string(e.what()).find("node"), std::string::npos);
    }
}

TEST(ApplyL, StencilMatchesOperatorAndIsMonotone) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const auto g = box_grid(2, 1.0, 0.125);
    for (int t = 0; t < 200; ++t) {
        SqMat a(2, 2);
        a(0, 0) = 1.0 + 0.3 * U(rng);
        a(1, 1) = 1.0 + 0.3 * U(rng);
        a(0, 1) = a(1, 0) = 0.6 * U(rng);
        Point b(2);
        b << 3.0 * U(rng), 3.0 * U(rng);
        const LocalCoeffs k = coeffs(a, b, 0.5 + 0.5 * U(rng));
        const auto st = make_stencil(2, g->h(), k);
        const auto u = random_field(*g, rng);
        const int n = g->interior_nodes()[static_cast<std::size_t>(t) % g->interior_nodes().size()];
        double lin = st.center * u[static_cast<std::size_t>(n)];
        for (int i = 0; i < st.n; ++i) {
            lin += st.nb[static_cast<std::size_t>(i)].second *
                   u[static_cast<std::size_t>(g->neighbor(n, st.nb[static_cast<std::size_t>(i)].first))];
            EXPECT_GE(st.nb[static_cast<std::size_t>(i)].second, -1e-12);
        }
        EXPECT_NEAR(lin, apply_L(node_derivatives(*g, u, n), k), 1e-9);
        // Raising a neighbour cannot lower L u.
        auto w = u;
        w[static_cast<std::size_t>(g->neighbor(n, {1, 1, 0}))] += 0.5;
        w[static_cast<std::size_t>(g->neighbor(n, {-1, 0, 0}))] += 0.25;
        EXPECT_GE(apply_L(node_derivatives(*g, w, n), k), apply_L(node_derivatives(*g, u, n), k) - 1e-12);
    }
}

TEST(IsaacsH, SingletonEqualsApplyLPlusF) {
    const auto s = setup("linear1d", 1.0 / 16);
    std::mt19937_64 rng(1);
    const auto u = random_field(*s.grid, rng);
    for (int n : s.grid->interior_nodes()) {
        const auto k = s.dg->coeffs(s.grid->slot(n), 0, 0);
        EXPECT_EQ(isaacs_H(*s.dg, u, n).value, apply_L(node_derivatives(*s.grid, u, n), k) + k.f);
    }
}

TEST(IsaacsH, ZeroFieldGivesMaxMinOfF) {
    std::mt19937_64 rng(5);
    const auto game = testutil::constant_game(2, 3, 3, rng);
    const auto g = box_grid(2, 1.0, 0.25);
    DiscreteGame dg(game, g);
    const ScalarField u(static_cast<std::size_t>(g->size()), 0.0);
    double mm = -1e300;
    for (int ia = 0; ia < 3; ++ia) {
        double m = 1e300;
        for (int ib = 0; ib < 3; ++ib) m = std::min(m, game.running_cost(ia, ib, Point::Zero(2)));
        mm = std::max(mm, m);
    }
    EXPECT_EQ(isaacs_H(dg, u, g->interior_nodes()[0]).value, mm);
}

TEST(IsaacsH, MatchesBruteForceEnumeration) {
    std::mt19937_64 rng(7);
    for (int nA = 1; nA <= 5; ++nA)
        for (int nB = 1; nB <= 5; ++nB) {
            const auto game = testutil::constant_game(2, nA, nB, rng);
            const auto g = box_grid(2, 1.0, 0.25);
            DiscreteGame dg(game, g);
            const auto u = random_field(*g, rng);
            for (int n : g->interior_nodes()) {
                const auto D = node_derivatives(*g, u, n);
                double best = -1e300;
                int ba = -1, bb = -1;
                for (int ia = 0; ia < nA; ++ia) {
                    double m = 1e300;
                    int mb = -1;
                    for (int ib = 0; ib < nB; ++ib) {
                        const auto k = game.local(ia, ib, g->position(n));
                        const double v = apply_L(D, k) + k.f;
                        if (v < m) m = v, mb = ib;
                    }
                    if (m > best) best = m, ba = ia, bb = mb;
                }
                const auto H = isaacs_H(dg, u, n);
                EXPECT_EQ(H.value, best);
                EXPECT_EQ(H.alpha, ba);
                EXPECT_EQ(H.beta, bb);
            }
        }
}

TEST(IsaacsH, TiesGoToLowestIndex) {
    std::vector<ControlEntry> table(4);
    for (auto& e : table) {
        e.sigma = {CoefFn(1.0)};
        e.b = {CoefFn(0.0)};
        e.f = CoefFn(1.0);
    }
    GameCoefficients game(1, 1, ControlSet({"p", "q"}), ControlSet({"r", "s"}), table, CoefFn(0.0), {1.0, 0.5, {}});
    const auto g = box_grid(1, 1.0, 0.25);
    DiscreteGame dg(game, g);
    const ScalarField u(static_cast<std::size_t>(g->size()), 0.0);
    const auto H = isaacs_H(dg, u, g->interior_nodes()[1]);
    EXPECT_EQ(H.alpha, 0);
    EXPECT_EQ(H.beta, 0);
}

TEST(PucciP, ZeroAndHomogeneity) {
    // Scaling by a power of two commutes with rounding, so those are bit-exact.
    std::mt19937_64 rng(9);
    for (int d : {1, 2}) {
        const auto g = box_grid(d, 1.0, 0.125);
        const ScalarField z(static_cast<std::size_t>(g->size()), 0.0);
        const auto u = random_field(*g, rng);
        for (double s : {2.0, 3.0, 0.25}) {
            ScalarField us = u;
            for (auto& x : us) x *= s;
            for (int n : g->interior_nodes()) {
                EXPECT_EQ(pucci_P(*g, z, n, 0.5), 0.0);
                const double p = pucci_P(*g, u, n, 0.5), ps = pucci_P(*g, us, n, 0.5);
                if (s != 3.0 && d == 1)
                    EXPECT_EQ(ps, s * p);
                else
                    EXPECT_NEAR(ps, s * p, 1e-12 * std::max(1.0, std::abs(ps)));
            }
        }
    }
}

TEST(PucciP, SquareAtOrigin) {
    // Second difference 2 gives 2/dh = 4; the one-sided slopes are both h, adding h/dh.
    const double h = 1.0 / 16;
    const auto g = box_grid(1, 1.0, h);
    const auto u = field_from(*g, [](const Point& x) { return x(0) * x(0); });
    const int n = g->nearest(Point::Zero(1));
    EXPECT_NEAR(pucci_P(*g, u, n, 0.5), 4.0 + 2.0 * h, 1e-12);
}

TEST(PucciP, ConvexInTheField) {
    std::mt19937_64 rng(13);
    for (int d : {1, 2}) {
        const auto g = box_grid(d, 1.0, 0.125);
        for (int t = 0; t < 20; ++t) {
            const auto u = random_field(*g, rng), w = random_field(*g, rng);
            ScalarField m(u.size());
            for (std::size_t i = 0; i < u.size(); ++i) m[i] = 0.5 * (u[i] + w[i]);
            for (int n : g->interior_nodes())
                EXPECT_LE(pucci_P(*g, m, n, 0.5), 0.5 * (pucci_P(*g, u, n, 0.5) + pucci_P(*g, w, n, 0.5)) + 1e-10);
        }
    }
}

TEST(PucciP, NonincreasingInCentreValueAndMonotoneInNeighbours) {
    std::mt19937_64 rng(17);
    const auto g = box_grid(2, 1.0, 0.125);
    for (int t = 0; t < 50; ++t) {
        const auto u = random_field(*g, rng);
        const int n = g->interior_nodes()[static_cast<std::size_t>(t) % g->interior_nodes().size()];
        auto w = u;
        w[static_cast<std::size_t>(n)] += 0.3;
        EXPECT_LE(pucci_P(*g, w, n, 0.5), pucci_P(*g, u, n, 0.5) + 1e-12);
        auto v = u;
        v[static_cast<std::size_t>(g->neighbor(n, {0, 1, 0}))] += 0.3;
        EXPECT_GE(pucci_P(*g, v, n, 0.5), pucci_P(*g, u, n, 0.5) - 1e-12);
    }
}

TEST(PucciP, DominatesEveryPucciMatrix) {
    // Sup over random a with spectrum in [dh, 1/dh], b in the 1/dh l1-ball corners, c = dh.
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double dh = 0.5;
    const auto g = box_grid(2, 1.0, 0.125);
    for (int t = 0; t < 20; ++t) {
        const auto u = random_field(*g, rng);
        for (int n : g->interior_nodes()) {
            const auto D = node_derivatives(*g, u, n);
            const double p = pucci_P(D, dh).value;
            for (int s = 0; s < 5; ++s) {
                const double th = M_PI * U(rng);
                const double l0 = dh + (1.0 / dh - dh) * U(rng), l1 = dh + (1.0 / dh - dh) * U(rng);
                const double cs = std::cos(th), sn = std::sin(th);
                SqMat a(2, 2);
                a(0, 0) = l0 * cs * cs + l1 * sn * sn;
                a(1, 1) = l0 * sn * sn + l1 * cs * cs;
                a(0, 1) = a(1, 0) = (l0 - l1) * cs * sn;
                Point b = Point::Zero(2);
                b(s % 2) = (s % 3 == 0 ? 1.0 : -1.0) / dh;
                EXPECT_LE(apply_L(D, coeffs(a, b, dh)), p + 1e-10);
            }
        }
    }
}

TEST(PucciP, ExtendedSupMatchesIn1DAndIsWithinRotationBoundIn2D) {
    std::mt19937_64 rng(23);
    const double K = 0.75;
    for (int d : {1, 2}) {
        const auto g = box_grid(d, 1.0, 0.125);
        std::mt19937_64 grng(29);
        const auto game = testutil::constant_game(d, 2, 2, grng, false);
        DiscreteGame dg(game, g);
        for (int rot : {4, 8, 16}) {
            const PucciSpec spec{0.5, rot};
            const auto ep = extend_problem(game, spec, K);
            const auto a2 = a2_local(ep.a2, K);
            double worst = 0.0;
            for (int t = 0; t < 10; ++t) {
                const auto u = random_field(*g, rng);
                for (int n : g->interior_nodes()) {
                    const auto D = node_derivatives(*g, u, n);
                    const double H = isaacs_H(dg, D, 0).value;
                    const auto P = pucci_P(D, spec.delta_hat);
                    const double exact = std::max(H, P.value - K);
                    const double sampled = extended_hamiltonian(dg, a2, D, 0).value;
                    if (d == 1) {
                        EXPECT_EQ(sampled, exact);
                    } else {
                        EXPECT_LE(sampled, exact + 1e-10);
                        const double bound = rotation_sampling_factor(spec, 2) * P.spread;
                        EXPECT_LE(exact - sampled, bound + 1e-10);
                        worst = std::max(worst, (exact - sampled) / std::max(P.spread, 1e-300));
                    }
                }
            }
            if (d == 2) EXPECT_LE(worst, rotation_sampling_factor(spec, 2) + 1e-12);
        }
    }
}

TEST(RegularizedResidual, ZeroObstacleAndInactiveObstacle) {
    std::mt19937_64 rng(31);
    const auto game = testutil::constant_game(1, 2, 3, rng);
    const auto g = box_grid(1, 1.0, 0.125);
    DiscreteGame dg(game, g);
    const ScalarField z(static_cast<std::size_t>(g->size()), 0.0);
    const int n = g->interior_nodes()[2];
    EXPECT_EQ(regularized_residual(dg, z, n, 0.0, 0.5), std::max(isaacs_H(dg, z, n).value, 0.0));
    const auto u = random_field(*g, rng);
    const double H = isaacs_H(dg, u, n).value, P = pucci_P(*g, u, n, 0.5);
    EXPECT_EQ(regularized_residual(dg, u, n, P - H + std::abs(H), 0.5), H);
}

TEST(Monotonicity, ReportsCrossTermViolationsAndPucciThreshold) {
    std::vector<ControlEntry> table(1);
    // Positive definite but not diagonally dominant in the first row.
    const SqMat a = (SqMat(2, 2) << 0.5, 0.6, 0.6, 1.0).finished();
    const SigmaMat sg = sigma_from_diffusion(a, 2);
    table[0].sigma = {CoefFn(sg(0, 0)), CoefFn(sg(0, 1)), CoefFn(sg(1, 0)), CoefFn(sg(1, 1))};
    table[0].b = {CoefFn(0.0), CoefFn(0.0)};
    GameCoefficients game(2, 2, ControlSet({"x"}), ControlSet({"y"}), table, CoefFn(0.0), {1.0, 0.05, {}});
    DiscreteGame dg(game, box_grid(2, 1.0, 0.25));
    const auto r = monotonicity_report(dg);
    EXPECT_FALSE(r.monotone);
    EXPECT_NE(r.first_offender.find("x/y"), std::string::npos);
    const auto ok = setup("ball2d", 0.125);
    EXPECT_TRUE(monotonicity_report(*ok.dg, PucciSpec{0.5, 8}).monotone);
    EXPECT_FALSE(monotonicity_report(*ok.dg, PucciSpec{0.4, 8}).monotone);
}
