#pragma once

#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "isaacs/barrier.hpp"
#include "isaacs/errors.hpp"
#include "isaacs/grid.hpp"
#include "isaacs/model.hpp"

namespace isaacs {

using json = nlohmann::json;

enum class DomainType { Ball, Ellipse, WholeSpace };

struct DomainSpec {
    DomainType kind = DomainType::Ball;
    Point axes;                        ///< ball: all equal to the radius
    double truncation_half_width = 0;  ///< whole space: box used for grid solves
};

struct ProblemDefinition {
    std::string name;
    GameCoefficients game;
    DomainSpec domain;
    json raw;  ///< the document as read
};

namespace io {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) throw ConfigError(where + ": unknown field '" + it.key() + "'");
}

inline double number(const json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigError(where + ": expected a number");
    return j.get<double>();
}

inline const json& need(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
    return j.at(key);
}

inline Point vec(const json& j, int n, const std::string& where) {
    if (!j.is_array() || static_cast<int>(j.size()) != n)
        throw ConfigError(where + ": expected an array of " + std::to_string(n) + " numbers");
    Point p(n);
    for (int i = 0; i < n; ++i) p(i) = number(j[static_cast<std::size_t>(i)], where);
    return p;
}

inline SqMat mat(const json& j, int n, const std::string& where) {
    if (!j.is_array() || static_cast<int>(j.size()) != n) throw ConfigError(where + ": expected a square matrix");
    SqMat m(n, n);
    for (int i = 0; i < n; ++i) m.row(i) = vec(j[static_cast<std::size_t>(i)], n, where).transpose();
    return m;
}

/// Scalar function: a number, or one of {affine, quadratic, trig, piecewise}.
inline CoefFn scalar_fn(const json& j, int d, const std::string& where) {
    if (j.is_number()) return CoefFn(j.get<double>());
    if (!j.is_object() || j.size() != 1) throw ConfigError(where + ": expected a number or a single-key function object");
    const auto& [key, p] = *j.items().begin();
    const std::string w = where + "." + key;
    if (key == "affine") {
        check_keys(p, {"c0", "grad"}, w);
        return CoefFn(fn::Affine{p.contains("c0") ? number(p["c0"], w) : 0.0, vec(need(p, "grad", w), d, w)});
    }
    if (key == "quadratic") {
        check_keys(p, {"c0", "grad", "hess"}, w);
        fn::Quadratic q{p.contains("c0") ? number(p["c0"], w) : 0.0,
                        p.contains("grad") ? vec(p["grad"], d, w) : Point::Zero(d), mat(need(p, "hess", w), d, w)};
        return CoefFn(q);
    }
    if (key == "trig") {
        check_keys(p, {"c0", "amp", "freq", "phase"}, w);
        return CoefFn(fn::Trig{p.contains("c0") ? number(p["c0"], w) : 0.0, number(need(p, "amp", w), w),
                               vec(need(p, "freq", w), d, w), p.contains("phase") ? number(p["phase"], w) : 0.0});
    }
    if (key == "piecewise") {
        check_keys(p, {"axis", "knots", "values"}, w);
        fn::Piecewise pw;
        pw.axis = p.contains("axis") ? p["axis"].get<int>() : 0;
        if (pw.axis < 0 || pw.axis >= d) throw ConfigError(w + ": axis out of range");
        for (const auto& v : need(p, "knots", w)) pw.knots.push_back(number(v, w));
        for (const auto& v : need(p, "values", w)) pw.values.push_back(number(v, w));
        return CoefFn(pw);
    }
    throw ConfigError(where + ": unknown function kind '" + key + "'");
}

inline void apply_entry(ControlEntry& e, const json& j, int d, int d1, const std::string& where) {
    if (j.contains("sigma")) {
        const auto& s = j["sigma"];
        if (!s.is_array() || static_cast<int>(s.size()) != d) throw ConfigError(where + ".sigma: expected d rows");
        e.sigma.clear();
        for (int i = 0; i < d; ++i) {
            const auto& r = s[static_cast<std::size_t>(i)];
            if (!r.is_array() || static_cast<int>(r.size()) != d1)
                throw ConfigError(where + ".sigma: expected d1 columns");
            for (int k = 0; k < d1; ++k) e.sigma.push_back(scalar_fn(r[static_cast<std::size_t>(k)], d, where + ".sigma"));
        }
    }
    if (j.contains("b")) {
        const auto& b = j["b"];
        if (!b.is_array() || static_cast<int>(b.size()) != d) throw ConfigError(where + ".b: expected d components");
        e.b.clear();
        for (const auto& v : b) e.b.push_back(scalar_fn(v, d, where + ".b"));
    }
    if (j.contains("c")) e.c = scalar_fn(j["c"], d, where + ".c");
    if (j.contains("f")) e.f = scalar_fn(j["f"], d, where + ".f");
}

inline std::vector<std::string> labels(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array of labels");
    std::vector<std::string> out;
    for (const auto& v : j) {
        if (!v.is_string()) throw ConfigError(where + ": labels must be strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

}  // namespace io

/// Parse a problem document. Unknown fields anywhere are rejected.
inline ProblemDefinition parse_problem(const json& j) {
    using namespace io;
    check_keys(j, {"name", "dimension", "noise_dimension", "control_sets", "coefficient_preset", "domain", "constants",
                   "terminal_cost_preset"},
               "problem");
    ProblemDefinition def;
    def.raw = j;
    def.name = j.value("name", std::string("problem"));
    const int d = need(j, "dimension", "problem").get<int>();
    if (d < 1 || d > kMaxDim) throw ConfigError("problem.dimension must be 1, 2 or 3");
    const int d1 = j.contains("noise_dimension") ? j["noise_dimension"].get<int>() : d;

    const auto& cs = need(j, "control_sets", "problem");
    check_keys(cs, {"A", "B"}, "control_sets");
    ControlSet A(labels(need(cs, "A", "control_sets"), "control_sets.A"));
    ControlSet B(labels(need(cs, "B", "control_sets"), "control_sets.B"));

    const auto& cp = need(j, "coefficient_preset", "problem");
    check_keys(cp, {"kind", "default", "entries"}, "coefficient_preset");
    if (need(cp, "kind", "coefficient_preset") != "table")
        throw ConfigError("coefficient_preset.kind: only 'table' is supported");
    ControlEntry base;
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d1; ++k) base.sigma.emplace_back(i == k ? 1.0 : 0.0);
    base.b.assign(static_cast<std::size_t>(d), CoefFn(0.0));
    const auto& def_entry = need(cp, "default", "coefficient_preset");
    check_keys(def_entry, {"sigma", "b", "c", "f"}, "coefficient_preset.default");
    apply_entry(base, def_entry, d, d1, "coefficient_preset.default");
    std::vector<ControlEntry> table(static_cast<std::size_t>(A.size() * B.size()), base);
    if (cp.contains("entries")) {
        if (!cp["entries"].is_array()) throw ConfigError("coefficient_preset.entries: expected an array");
        int k = 0;
        for (const auto& e : cp["entries"]) {
            const std::string w = "coefficient_preset.entries[" + std::to_string(k++) + "]";
            check_keys(e, {"alpha", "beta", "sigma", "b", "c", "f"}, w);
            const std::string a = e.value("alpha", std::string("*")), b = e.value("beta", std::string("*"));
            if (a != "*" && A.index_of(a) < 0) throw ConfigError(w + ": unknown alpha '" + a + "'");
            if (b != "*" && B.index_of(b) < 0) throw ConfigError(w + ": unknown beta '" + b + "'");
            for (int ia = 0; ia < A.size(); ++ia)
                for (int ib = 0; ib < B.size(); ++ib)
                    if ((a == "*" || A.index_of(a) == ia) && (b == "*" || B.index_of(b) == ib))
                        apply_entry(table[static_cast<std::size_t>(ia * B.size() + ib)], e, d, d1, w);
        }
    }

    const auto& c = need(j, "constants", "problem");
    check_keys(c, {"K0", "delta", "delta1"}, "constants");
    Constants k;
    k.K0 = number(need(c, "K0", "constants"), "constants.K0");
    k.delta = number(need(c, "delta", "constants"), "constants.delta");
    if (c.contains("delta1")) k.delta1 = number(c["delta1"], "constants.delta1");

    const CoefFn g = j.contains("terminal_cost_preset") ? scalar_fn(j["terminal_cost_preset"], d, "terminal_cost_preset")
                                                         : CoefFn(0.0);
    def.game = GameCoefficients(d, d1, A, B, std::move(table), g, k);

    const auto& dom = need(j, "domain", "problem");
    const std::string kind = need(dom, "kind", "domain").get<std::string>();
    if (kind == "ball") {
        check_keys(dom, {"kind", "radius"}, "domain");
        def.domain.kind = DomainType::Ball;
        const double R = number(need(dom, "radius", "domain"), "domain.radius");
        if (!(R > 0.0)) throw ConfigError("domain.radius must be positive");
        def.domain.axes = Point::Constant(d, R);
    } else if (kind == "ellipse") {
        check_keys(dom, {"kind", "axes"}, "domain");
        def.domain.kind = DomainType::Ellipse;
        def.domain.axes = vec(need(dom, "axes", "domain"), d, "domain.axes");
        if (!(def.domain.axes.minCoeff() > 0.0)) throw ConfigError("domain.axes must be positive");
    } else if (kind == "whole_space") {
        check_keys(dom, {"kind", "truncation_half_width"}, "domain");
        def.domain.kind = DomainType::WholeSpace;
        def.domain.truncation_half_width = number(need(dom, "truncation_half_width", "domain"), "domain");
        def.domain.axes = Point::Constant(d, def.domain.truncation_half_width);
        if (!k.delta1) throw ConfigError("whole_space problems need constants.delta1");
    } else {
        throw ConfigError("domain.kind must be ball, ellipse or whole_space");
    }
    return def;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

inline ProblemDefinition load_problem(const std::string& path) {
    try {
        return parse_problem(read_json_file(path));
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

/// Barrier for ball/ellipse domains; none in whole-space mode.
inline std::optional<Barrier> build_barrier(const ProblemDefinition& def) {
    switch (def.domain.kind) {
        case DomainType::Ball: return make_ball_barrier(def.domain.axes(0), def.game);
        case DomainType::Ellipse: return make_ellipse_barrier(def.domain.axes, def.game);
        case DomainType::WholeSpace: return std::nullopt;
    }
    return std::nullopt;
}

inline std::shared_ptr<const Grid> build_grid(const ProblemDefinition& def, const Barrier* bar, double h) {
    if (def.domain.kind == DomainType::WholeSpace)
        return std::make_shared<const Grid>(Grid::box(def.game.dim(), def.domain.truncation_half_width, h));
    if (!bar) throw ConfigError("bounded domains need a barrier to build a grid");
    return std::make_shared<const Grid>(Grid::for_barrier(*bar, h));
}

}  // namespace isaacs
