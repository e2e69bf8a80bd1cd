#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "isaacs/barrier.hpp"
#include "isaacs/errors.hpp"
#include "isaacs/types.hpp"

namespace isaacs {

enum class NodeKind : std::uint8_t { Interior, Boundary, Exterior };

/// One scalar per grid node.
using ScalarField = std::vector<double>;

/// Uniform lattice x = (i - m) h per axis covering the closure of the domain plus one layer.
///
/// Interior nodes are those where the classifier is positive (Psi for barrier
/// domains). The boundary band is every non-interior node that appears in the
/// 3^d stencil of an interior node.
class Grid {
public:
    static Grid for_barrier(const Barrier& bar, double h) {
        Grid g(bar.axes(), h);
        for (int n = 0; n < g.size(); ++n) g.level_[static_cast<std::size_t>(n)] = bar.psi(g.position(n));
        g.classify();
        return g;
    }

    /// Truncation box [-L, L]^d for whole-space problems; nodes with |x_i| = L form the boundary.
    static Grid box(int d, double half_width, double h) {
        Grid g(Point::Constant(d, half_width), h);
        for (int n = 0; n < g.size(); ++n) {
            const Point x = g.position(n);
            g.level_[static_cast<std::size_t>(n)] = half_width - x.cwiseAbs().maxCoeff();
        }
        g.classify();
        return g;
    }

    int dim() const { return d_; }
    double h() const { return h_; }
    int size() const { return total_; }
    int count(int axis) const { return count_[static_cast<std::size_t>(axis)]; }
    int offset(int axis) const { return m_[static_cast<std::size_t>(axis)]; }
    int stride(int axis) const { return stride_[static_cast<std::size_t>(axis)]; }

    NodeKind kind(int node) const { return kind_[static_cast<std::size_t>(node)]; }
    /// Classifier value (Psi on barrier grids).
    double level(int node) const { return level_[static_cast<std::size_t>(node)]; }
    const std::vector<int>& interior_nodes() const { return interior_; }
    const std::vector<int>& boundary_nodes() const { return boundary_; }
    /// Position of a node in the interior list, or -1.
    int slot(int node) const { return slot_[static_cast<std::size_t>(node)]; }

    std::array<int, kMaxDim> coords(int node) const {
        std::array<int, kMaxDim> c{};
        for (int k = d_ - 1; k >= 0; --k) {
            c[static_cast<std::size_t>(k)] = node / stride(k);
            node %= stride(k);
        }
        return c;
    }

    Point position(int node) const {
        const auto c = coords(node);
        Point x(d_);
        for (int k = 0; k < d_; ++k) x(k) = (c[static_cast<std::size_t>(k)] - offset(k)) * h_;
        return x;
    }

    /// Node shifted by `s` lattice steps, or -1 outside the box.
    int neighbor(int node, const std::array<int, kMaxDim>& s) const {
        auto c = coords(node);
        int idx = 0;
        for (int k = 0; k < d_; ++k) {
            const int v = c[static_cast<std::size_t>(k)] + s[static_cast<std::size_t>(k)];
            if (v < 0 || v >= count(k)) return -1;
            idx += v * stride(k);
        }
        return idx;
    }

    /// Nearest node, clamped to the box.
    int nearest(const Point& x) const {
        int idx = 0;
        for (int k = 0; k < d_; ++k) {
            int v = static_cast<int>(std::lround(x(k) / h_)) + offset(k);
            v = std::clamp(v, 0, count(k) - 1);
            idx += v * stride(k);
        }
        return idx;
    }

    std::string describe(int node) const {
        std::string s = "node " + std::to_string(node) + " at (";
        const Point x = position(node);
        for (int k = 0; k < d_; ++k) s += (k ? ", " : "") + std::to_string(x(k));
        return s + ")";
    }

private:
    Grid(const Point& half_widths, double h) : d_(static_cast<int>(half_widths.size())), h_(h) {
        if (d_ < 1 || d_ > 2) throw ConfigError("grids are supported for d = 1 and d = 2");
        if (!(h > 0.0)) throw ConfigError("grid spacing must be positive");
        total_ = 1;
        for (int k = 0; k < d_; ++k) {
            const int m = static_cast<int>(std::ceil(half_widths(k) / h - 1e-9)) + 1;
            m_[static_cast<std::size_t>(k)] = m;
            count_[static_cast<std::size_t>(k)] = 2 * m + 1;
            stride_[static_cast<std::size_t>(k)] = total_;
            total_ *= 2 * m + 1;
        }
        if (total_ > 50'000'000) throw ConfigError("grid too large");
        level_.assign(static_cast<std::size_t>(total_), 0.0);
    }

    void classify() {
        kind_.assign(static_cast<std::size_t>(total_), NodeKind::Exterior);
        slot_.assign(static_cast<std::size_t>(total_), -1);
        for (int n = 0; n < total_; ++n)
            if (level_[static_cast<std::size_t>(n)] > 0.0) {
                kind_[static_cast<std::size_t>(n)] = NodeKind::Interior;
                slot_[static_cast<std::size_t>(n)] = static_cast<int>(interior_.size());
                interior_.push_back(n);
            }
        for (int n : interior_) {
            std::array<int, kMaxDim> s{};
            const int span = d_ == 1 ? 3 : 9;
            for (int k = 0; k < span; ++k) {
                s[0] = k % 3 - 1;
                s[1] = d_ > 1 ? k / 3 - 1 : 0;
                const int nb = neighbor(n, s);
                if (nb < 0) throw DiscretizationError("stencil of interior " + describe(n) + " leaves the grid");
                if (kind_[static_cast<std::size_t>(nb)] == NodeKind::Exterior) {
                    kind_[static_cast<std::size_t>(nb)] = NodeKind::Boundary;
                }
            }
        }
        for (int n = 0; n < total_; ++n)
            if (kind_[static_cast<std::size_t>(n)] == NodeKind::Boundary) boundary_.push_back(n);
        if (interior_.empty()) throw ConfigError("grid has no interior nodes; decrease h");
    }

    int d_;
    double h_;
    int total_ = 0;
    std::array<int, kMaxDim> m_{}, count_{}, stride_{};
    std::vector<double> level_;
    std::vector<NodeKind> kind_;
    std::vector<int> slot_;
    std::vector<int> interior_, boundary_;
};

/// Multilinear interpolation. Every corner of the enclosing cell must be an
/// interior or boundary node.
inline double interpolate(const Grid& g, const ScalarField& u, const Point& x) {
    const int d = g.dim();
    std::array<int, kMaxDim> base{};
    std::array<double, kMaxDim> w{};
    for (int k = 0; k < d; ++k) {
        const double t = x(k) / g.h() + g.offset(k);
        int i = static_cast<int>(std::floor(t));
        if (i == g.count(k) - 1 && t == static_cast<double>(i)) --i;
        if (!(t >= 0.0) || i < 0 || i + 1 >= g.count(k))
            throw ExtrapolationError("point outside the grid box");
        base[static_cast<std::size_t>(k)] = i;
        w[static_cast<std::size_t>(k)] = t - i;
    }
    double acc = 0.0;
    for (int corner = 0; corner < (1 << d); ++corner) {
        int idx = 0;
        double wt = 1.0;
        for (int k = 0; k < d; ++k) {
            const int bit = (corner >> k) & 1;
            idx += (base[static_cast<std::size_t>(k)] + bit) * g.stride(k);
            wt *= bit ? w[static_cast<std::size_t>(k)] : 1.0 - w[static_cast<std::size_t>(k)];
        }
        if (wt == 0.0) continue;
        if (g.kind(idx) == NodeKind::Exterior) throw ExtrapolationError("field undefined near " + g.describe(idx));
        acc += wt * u[static_cast<std::size_t>(idx)];
    }
    return acc;
}

/// Worst violation of L Psi + c Psi <= -1 over interior grid nodes.
inline double verify_barrier(const Barrier& bar, const GameCoefficients& game, const Grid& grid) {
    std::vector<Point> pts;
    pts.reserve(grid.interior_nodes().size());
    for (int n : grid.interior_nodes()) pts.push_back(grid.position(n));
    return verify_barrier(bar, game, pts);
}

}  // namespace isaacs
