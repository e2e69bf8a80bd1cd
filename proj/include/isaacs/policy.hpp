#pragma once

#include <memory>
#include <queue>
#include <vector>

#include "isaacs/errors.hpp"
#include "isaacs/grid.hpp"
#include "isaacs/operators.hpp"
#include "isaacs/solver.hpp"

namespace isaacs {

/// Markov feedback pair: alpha(x) and beta(x, alpha), read off a grid by nearest-node lookup.
///
/// Grid-free policies are constants. Box overrides replace the control inside an
/// axis-aligned box (used to perturb a saddle pair on a subregion).
class MarkovPolicy {
public:
    struct Override {
        Point lo, hi;
        int control;
    };

    static MarkovPolicy constant(int alpha, int beta) {
        MarkovPolicy p;
        p.const_alpha_ = alpha;
        p.const_beta_ = beta;
        p.n_alpha_ = alpha + 1;
        return p;
    }

    /// Saddle pair of a solve. Non-interior nodes copy the nearest interior node.
    static MarkovPolicy from_solve(const DiscreteGame& dg, const SolveResult& r) {
        const auto& g = dg.grid();
        MarkovPolicy p;
        p.grid_ = dg.grid_ptr();
        p.n_alpha_ = r.n_alpha_total;
        const auto N = static_cast<std::size_t>(g.size());
        if (r.alpha.size() != N || r.beta_table.size() != N * static_cast<std::size_t>(r.n_alpha_total))
            throw ConfigError("solve result does not match the grid");
        for (int n : g.interior_nodes())
            if (r.alpha[static_cast<std::size_t>(n)] == kExactPucci)
                throw ConfigError("policies with the exact Pucci maximizer cannot be simulated; use the extended game");
        p.alpha_ = r.alpha;
        p.beta_ = r.beta_table;
        // Breadth-first fill from the interior so lookups are total on the box.
        std::vector<int> src(N, -1);
        std::queue<int> q;
        for (int n : g.interior_nodes()) src[static_cast<std::size_t>(n)] = n, q.push(n);
        while (!q.empty()) {
            const int n = q.front();
            q.pop();
            for (int k = 0; k < 2 * g.dim(); ++k) {
                std::array<int, kMaxDim> s{};
                s[static_cast<std::size_t>(k / 2)] = k % 2 ? -1 : 1;
                const int nb = g.neighbor(n, s);
                if (nb < 0 || src[static_cast<std::size_t>(nb)] >= 0) continue;
                src[static_cast<std::size_t>(nb)] = src[static_cast<std::size_t>(n)];
                q.push(nb);
            }
        }
        const auto nA = static_cast<std::size_t>(r.n_alpha_total);
        for (std::size_t n = 0; n < N; ++n) {
            const auto s = static_cast<std::size_t>(src[n]);
            if (g.kind(static_cast<int>(n)) == NodeKind::Interior) continue;
            p.alpha_[n] = p.alpha_[s];
            for (std::size_t a = 0; a < nA; ++a) p.beta_[n * nA + a] = p.beta_[s * nA + a];
        }
        return p;
    }

    MarkovPolicy with_alpha_override(Point lo, Point hi, int alpha) const {
        MarkovPolicy p = *this;
        p.alpha_over_.push_back({std::move(lo), std::move(hi), alpha});
        p.n_alpha_ = std::max(p.n_alpha_, alpha + 1);
        return p;
    }
    MarkovPolicy with_beta_override(Point lo, Point hi, int beta) const {
        MarkovPolicy p = *this;
        p.beta_over_.push_back({std::move(lo), std::move(hi), beta});
        return p;
    }

    int alpha(const Point& x) const {
        for (auto it = alpha_over_.rbegin(); it != alpha_over_.rend(); ++it)
            if (inside(*it, x)) return it->control;
        if (!grid_) return const_alpha_;
        return alpha_[static_cast<std::size_t>(grid_->nearest(x))];
    }

    int beta(const Point& x, int alpha) const {
        for (auto it = beta_over_.rbegin(); it != beta_over_.rend(); ++it)
            if (inside(*it, x)) return it->control;
        if (!grid_) return const_beta_;
        if (alpha < 0 || alpha >= n_alpha_) throw ConfigError("alpha index outside the policy table");
        return beta_[static_cast<std::size_t>(grid_->nearest(x)) * static_cast<std::size_t>(n_alpha_) +
                     static_cast<std::size_t>(alpha)];
    }

    /// Largest alpha index the policy can return, plus one.
    int alpha_range() const { return n_alpha_; }

private:
    static bool inside(const Override& o, const Point& x) {
        for (int i = 0; i < x.size(); ++i)
            if (x(i) < o.lo(i) || x(i) > o.hi(i)) return false;
        return true;
    }

    std::shared_ptr<const Grid> grid_;
    std::vector<int> alpha_, beta_;
    int n_alpha_ = 1;
    int const_alpha_ = 0, const_beta_ = 0;
    std::vector<Override> alpha_over_, beta_over_;
};

}  // namespace isaacs
