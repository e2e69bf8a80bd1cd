#pragma once

#include <memory>
#include <random>
#include <string>

#include "isaacs/isaacs.hpp"

namespace testutil {

using namespace isaacs;

inline ProblemDefinition preset(const std::string& name) {
    return load_problem(std::string(ISAACS_PRESET_DIR) + "/" + name + ".json");
}

/// Problem, barrier, grid and precomputed discrete game in one bundle.
struct Setup {
    ProblemDefinition def;
    std::optional<Barrier> barrier;
    std::shared_ptr<const Grid> grid;
    std::shared_ptr<DiscreteGame> dg;
};

inline Setup setup(const std::string& name, double h) {
    Setup s;
    s.def = preset(name);
    s.barrier = build_barrier(s.def);
    s.grid = build_grid(s.def, s.barrier ? &*s.barrier : nullptr, h);
    s.dg = std::make_shared<DiscreteGame>(s.def.game, s.grid);
    return s;
}

/// Constant-coefficient game with the given table of (a, b, c, f), sigma = sqrt(2a).
inline GameCoefficients constant_game(int d, int nA, int nB, std::mt19937_64& rng, bool with_cross = true) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::vector<ControlEntry> table;
    for (int k = 0; k < nA * nB; ++k) {
        SqMat a = SqMat::Zero(d, d);
        for (int i = 0; i < d; ++i) a(i, i) = 0.8 + 0.4 * U(rng);
        if (d == 2 && with_cross) a(0, 1) = a(1, 0) = 0.3 * U(rng);
        const SigmaMat s = sigma_from_diffusion(a, d);
        ControlEntry e;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) e.sigma.emplace_back(s(i, j));
        for (int i = 0; i < d; ++i) e.b.emplace_back(U(rng));
        e.c = CoefFn(0.5 + 0.5 * U(rng));
        e.f = CoefFn(U(rng));
        table.push_back(std::move(e));
    }
    std::vector<std::string> A, B;
    for (int i = 0; i < nA; ++i) A.push_back("a" + std::to_string(i));
    for (int i = 0; i < nB; ++i) B.push_back("b" + std::to_string(i));
    return GameCoefficients(d, d, ControlSet(A), ControlSet(B), std::move(table), CoefFn(0.0), {4.0, 0.25, {}});
}

inline ScalarField random_field(const Grid& g, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> U(-scale, scale);
    ScalarField u(static_cast<std::size_t>(g.size()));
    for (auto& x : u) x = U(rng);
    return u;
}

template <class F>
ScalarField field_from(const Grid& g, F f) {
    ScalarField u(static_cast<std::size_t>(g.size()));
    for (int n = 0; n < g.size(); ++n) u[static_cast<std::size_t>(n)] = f(g.position(n));
    return u;
}

}  // namespace testutil
