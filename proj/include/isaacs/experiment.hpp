#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "isaacs/isaacs.hpp"

namespace isaacs {

inline constexpr const char* kToolVersion = "isaacs-lab 1.0.0";
inline constexpr int kSchemaVersion = 1;

/// Policy used by the Monte Carlo commands: the grid saddle pair or a constant pair of labels.
struct PolicyChoice {
    bool saddle = true;
    std::string alpha, beta;

    std::string name() const { return saddle ? "saddle" : alpha + "/" + beta; }
};

/// Everything a command needs. Keys absent from the document take the defaults below.
struct ExperimentConfig {
    std::string problem;                  ///< problem file, relative paths resolve against base_dir
    std::string base_dir = ".";           ///< not serialized
    double h = 1.0 / 64;
    std::optional<double> delta_hat;      ///< default: the problem's delta
    int rotations = 8;
    std::vector<double> K;
    std::string mode = "extended";        ///< extended | obstacle
    SolveConfig solver;
    std::vector<PolicyChoice> policies{PolicyChoice{}};
    std::vector<std::vector<double>> x0;
    std::vector<double> epsilon{0.0};
    double dt = 1e-3;
    std::int64_t n_paths = 1000;
    std::uint64_t seed = 1;
    int threads = 1;
    double censor_factor = 10.0;
    double discount_floor = 1e-8;
    double gamma = 1.0;
    std::vector<double> lambda0{0.0};
    std::optional<double> allowance;      ///< default depends on the command
    double min_psi = 0.2;
    double tail_tol = 1e-3;
    bool projection = true;
    int max_refine = 16;
    std::optional<double> equator_dt;     ///< default: min(dt, eps / 50)
    std::vector<std::vector<double>> directions;
    std::vector<double> drift_dts;
    SamplePlan validation;
    bool timing = false;
    std::string out = "out";

    std::string problem_path() const {
        const std::filesystem::path p(problem);
        return p.is_absolute() ? p.string() : (std::filesystem::path(base_dir) / p).lexically_normal().string();
    }
};

namespace cfgio {

inline std::vector<std::vector<double>> points(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected a list of points");
    std::vector<std::vector<double>> out;
    for (const auto& p : j) {
        if (!p.is_array() || p.empty()) throw ConfigError(where + ": each point is a nonempty list");
        std::vector<double> v;
        for (const auto& c : p) v.push_back(io::number(c, where));
        out.push_back(std::move(v));
    }
    return out;
}

inline std::vector<double> numbers(const json& j, const std::string& where) {
    if (j.is_number()) return {io::number(j, where)};
    if (!j.is_array()) throw ConfigError(where + ": expected a number or a list of numbers");
    std::vector<double> out;
    for (const auto& c : j) out.push_back(io::number(c, where));
    return out;
}

template <class T>
T integer(const json& j, const std::string& where) {
    if (!j.is_number_integer() && !j.is_number_unsigned()) throw ConfigError(where + ": expected an integer");
    return j.get<T>();
}

inline bool boolean(const json& j, const std::string& where) {
    if (!j.is_boolean()) throw ConfigError(where + ": expected true or false");
    return j.get<bool>();
}

}  // namespace cfgio

inline void check_config(const ExperimentConfig& c) {
    if (c.problem.empty()) throw ConfigError("config: 'problem' is required");
    if (!(c.h > 0.0 && c.h <= 0.5)) throw ConfigError("config: h must lie in (0, 0.5]");
    if (c.delta_hat && !(*c.delta_hat > 0.0 && *c.delta_hat < 1.0)) throw ConfigError("config: delta_hat must lie in (0, 1)");
    if (c.rotations < 2 || c.rotations % 2) throw ConfigError("config: rotations must be even and >= 2");
    for (std::size_t i = 0; i < c.K.size(); ++i) {
        if (!(c.K[i] >= 1.0)) throw ConfigError("config: K values must be >= 1");
        if (i && !(c.K[i] > c.K[i - 1])) throw ConfigError("config: K values must increase strictly");
    }
    if (c.mode != "extended" && c.mode != "obstacle") throw ConfigError("config: mode must be 'extended' or 'obstacle'");
    c.solver.check();
    if (c.policies.empty()) throw ConfigError("config: policies must not be empty");
    for (double e : c.epsilon)
        if (!(e >= 0.0)) throw ConfigError("config: epsilon values must be nonnegative");
    if (!(c.dt > 0.0 && c.dt <= 0.1)) throw ConfigError("config: dt must lie in (0, 0.1]");
    if (c.n_paths < 2 || c.n_paths > (std::int64_t{1} << 32)) throw ConfigError("config: n_paths must be in [2, 2^32]");
    if (c.threads < 1 || c.threads > 1024) throw ConfigError("config: threads must be in [1, 1024]");
    if (!(c.gamma >= 0.0)) throw ConfigError("config: gamma must be nonnegative");
    for (double l : c.lambda0)
        if (!(l >= 0.0)) throw ConfigError("config: lambda0 values must be nonnegative");
    if (c.allowance && !(*c.allowance >= 0.0)) throw ConfigError("config: allowance must be nonnegative");
    if (!(c.min_psi > 0.0)) throw ConfigError("config: min_psi must be positive");
    if (c.max_refine < 0 || c.max_refine > 24) throw ConfigError("config: max_refine must be in 0..24");
    if (c.equator_dt && !(*c.equator_dt > 0.0)) throw ConfigError("config: equator_dt must be positive");
    for (double d : c.drift_dts)
        if (!(d > 0.0)) throw ConfigError("config: drift_dts must be positive");
    if (c.validation.points_per_axis < 2 || c.validation.random_pairs < 0)
        throw ConfigError("config: validation sampling sizes out of range");
}

inline ExperimentConfig parse_config(const json& j, const std::string& base_dir = ".") {
    using namespace cfgio;
    io::check_keys(j,
                   {"problem", "h", "delta_hat", "rotations", "K", "mode", "solver", "policies", "x0", "epsilon", "dt",
                    "n_paths", "seed", "threads", "censor_factor", "discount_floor", "gamma", "lambda0", "allowance",
                    "min_psi", "tail_tol", "projection", "max_refine", "equator_dt", "directions", "drift_dts",
                    "validation", "timing", "out"},
                   "config");
    ExperimentConfig c;
    c.base_dir = base_dir;
    if (!j.contains("problem") || !j["problem"].is_string()) throw ConfigError("config: 'problem' must be a path");
    c.problem = j["problem"].get<std::string>();
    if (j.contains("h")) c.h = io::number(j["h"], "config.h");
    if (j.contains("delta_hat") && !j["delta_hat"].is_null()) c.delta_hat = io::number(j["delta_hat"], "config.delta_hat");
    if (j.contains("rotations")) c.rotations = integer<int>(j["rotations"], "config.rotations");
    if (j.contains("K")) c.K = numbers(j["K"], "config.K");
    if (j.contains("mode")) {
        if (!j["mode"].is_string()) throw ConfigError("config.mode: expected a string");
        c.mode = j["mode"].get<std::string>();
    }
    if (j.contains("solver")) {
        const auto& s = j["solver"];
        io::check_keys(s, {"tolerance", "max_outer", "max_inner", "allow_nonmonotone"}, "config.solver");
        if (s.contains("tolerance")) c.solver.tolerance = io::number(s["tolerance"], "config.solver.tolerance");
        if (s.contains("max_outer")) c.solver.max_outer = integer<int>(s["max_outer"], "config.solver.max_outer");
        if (s.contains("max_inner")) c.solver.max_inner = integer<int>(s["max_inner"], "config.solver.max_inner");
        if (s.contains("allow_nonmonotone"))
            c.solver.allow_nonmonotone = boolean(s["allow_nonmonotone"], "config.solver.allow_nonmonotone");
    }
    if (j.contains("policies")) {
        if (!j["policies"].is_array()) throw ConfigError("config.policies: expected a list");
        c.policies.clear();
        for (const auto& p : j["policies"]) {
            if (p == "saddle") {
                c.policies.push_back(PolicyChoice{});
            } else if (p.is_array() && p.size() == 2 && p[0].is_string() && p[1].is_string()) {
                c.policies.push_back(PolicyChoice{false, p[0].get<std::string>(), p[1].get<std::string>()});
            } else {
                throw ConfigError("config.policies: entries are \"saddle\" or [alpha_label, beta_label]");
            }
        }
    }
    if (j.contains("x0")) c.x0 = points(j["x0"], "config.x0");
    if (j.contains("epsilon")) c.epsilon = numbers(j["epsilon"], "config.epsilon");
    if (j.contains("dt")) c.dt = io::number(j["dt"], "config.dt");
    if (j.contains("n_paths")) c.n_paths = integer<std::int64_t>(j["n_paths"], "config.n_paths");
    if (j.contains("seed")) c.seed = integer<std::uint64_t>(j["seed"], "config.seed");
    if (j.contains("threads")) c.threads = integer<int>(j["threads"], "config.threads");
    if (j.contains("censor_factor")) c.censor_factor = io::number(j["censor_factor"], "config.censor_factor");
    if (j.contains("discount_floor")) c.discount_floor = io::number(j["discount_floor"], "config.discount_floor");
    if (j.contains("gamma")) c.gamma = io::number(j["gamma"], "config.gamma");
    if (j.contains("lambda0")) c.lambda0 = numbers(j["lambda0"], "config.lambda0");
    if (j.contains("allowance") && !j["allowance"].is_null()) c.allowance = io::number(j["allowance"], "config.allowance");
    if (j.contains("min_psi")) c.min_psi = io::number(j["min_psi"], "config.min_psi");
    if (j.contains("tail_tol")) c.tail_tol = io::number(j["tail_tol"], "config.tail_tol");
    if (j.contains("projection")) c.projection = boolean(j["projection"], "config.projection");
    if (j.contains("max_refine")) c.max_refine = integer<int>(j["max_refine"], "config.max_refine");
    if (j.contains("equator_dt") && !j["equator_dt"].is_null())
        c.equator_dt = io::number(j["equator_dt"], "config.equator_dt");
    if (j.contains("directions")) c.directions = points(j["directions"], "config.directions");
    if (j.contains("drift_dts")) c.drift_dts = numbers(j["drift_dts"], "config.drift_dts");
    if (j.contains("validation")) {
        const auto& v = j["validation"];
        io::check_keys(v, {"points_per_axis", "random_pairs", "tolerance", "seed"}, "config.validation");
        if (v.contains("points_per_axis"))
            c.validation.points_per_axis = integer<int>(v["points_per_axis"], "config.validation.points_per_axis");
        if (v.contains("random_pairs"))
            c.validation.random_pairs = integer<int>(v["random_pairs"], "config.validation.random_pairs");
        if (v.contains("tolerance")) c.validation.tolerance = io::number(v["tolerance"], "config.validation.tolerance");
        if (v.contains("seed")) c.validation.seed = integer<std::uint64_t>(v["seed"], "config.validation.seed");
    }
    if (j.contains("timing")) c.timing = boolean(j["timing"], "config.timing");
    if (j.contains("out")) {
        if (!j["out"].is_string()) throw ConfigError("config.out: expected a path");
        c.out = j["out"].get<std::string>();
    }
    check_config(c);
    return c;
}

/// Every field written explicitly; parse_config(to_json(c)) reproduces c.
inline json to_json(const ExperimentConfig& c) {
    json j;
    j["problem"] = c.problem;
    j["h"] = c.h;
    j["delta_hat"] = c.delta_hat ? json(*c.delta_hat) : json(nullptr);
    j["rotations"] = c.rotations;
    j["K"] = c.K;
    j["mode"] = c.mode;
    j["solver"] = {{"tolerance", c.solver.tolerance},
                   {"max_outer", c.solver.max_outer},
                   {"max_inner", c.solver.max_inner},
                   {"allow_nonmonotone", c.solver.allow_nonmonotone}};
    json pol = json::array();
    for (const auto& p : c.policies) pol.push_back(p.saddle ? json("saddle") : json::array({p.alpha, p.beta}));
    j["policies"] = pol;
    j["x0"] = c.x0;
    j["epsilon"] = c.epsilon;
    j["dt"] = c.dt;
    j["n_paths"] = c.n_paths;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["censor_factor"] = c.censor_factor;
    j["discount_floor"] = c.discount_floor;
    j["gamma"] = c.gamma;
    j["lambda0"] = c.lambda0;
    j["allowance"] = c.allowance ? json(*c.allowance) : json(nullptr);
    j["min_psi"] = c.min_psi;
    j["tail_tol"] = c.tail_tol;
    j["projection"] = c.projection;
    j["max_refine"] = c.max_refine;
    j["equator_dt"] = c.equator_dt ? json(*c.equator_dt) : json(nullptr);
    j["directions"] = c.directions;
    j["drift_dts"] = c.drift_dts;
    j["validation"] = {{"points_per_axis", c.validation.points_per_axis},
                       {"random_pairs", c.validation.random_pairs},
                       {"tolerance", c.validation.tolerance},
                       {"seed", c.validation.seed}};
    j["timing"] = c.timing;
    j["out"] = c.out;
    return j;
}

inline ExperimentConfig load_config(const std::string& path) {
    const auto dir = std::filesystem::path(path).parent_path();
    return parse_config(read_json_file(path), dir.empty() ? "." : dir.string());
}

/// CSV table; numbers are written with 17 significant digits.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    static std::string num(double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }
    static std::string num(std::optional<double> v) { return v ? num(*v) : std::string(); }
    static std::string flag(bool b) { return b ? "true" : "false"; }

    std::string str() const {
        std::ostringstream os;
        auto line = [&](const std::vector<std::string>& r) {
            for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
            os << '\n';
        };
        line(header);
        for (const auto& r : rows) line(r);
        return os.str();
    }
};

/// Outcome of one command: exit status, summary document, CSV tables by file name.
struct RunResult {
    int exit_code = 0;
    json summary;
    std::map<std::string, Table> tables;
    std::string report;  ///< human-readable lines for stdout
};

namespace exp_detail {

inline json estimate_json(const McEstimate& e) {
    return {{"mean", e.mean},
            {"stderr", e.std_error},
            {"n_paths", e.n_paths},
            {"dt", e.dt},
            {"epsilon", e.epsilon},
            {"seed", e.seed},
            {"censored_count", e.censored_count},
            {"nonfinite_count", e.nonfinite_count},
            {"bias_bound", e.bias_bound},
            {"refined_count", e.flagged_count},
            {"usable", e.usable}};
}

inline std::vector<std::string> axis_header(int d, const std::string& prefix = "x") {
    std::vector<std::string> h;
    for (int i = 0; i < d; ++i) h.push_back(prefix + std::to_string(i));
    return h;
}

inline std::vector<std::string> coords(const Point& x) {
    std::vector<std::string> r;
    for (int i = 0; i < x.size(); ++i) r.push_back(Table::num(x(i)));
    return r;
}

inline Point to_point(const std::vector<double>& v, int d, const std::string& what) {
    if (static_cast<int>(v.size()) != d)
        throw ConfigError(what + " has " + std::to_string(v.size()) + " coordinates, the problem has " + std::to_string(d));
    Point x(d);
    for (int i = 0; i < d; ++i) x(i) = v[static_cast<std::size_t>(i)];
    return x;
}

/// Loaded problem with barrier, grid and discrete game.
struct Context {
    ExperimentConfig cfg;
    ProblemDefinition def;
    std::optional<Barrier> barrier;
    std::shared_ptr<const Grid> grid;
    std::shared_ptr<DiscreteGame> dg;

    explicit Context(const ExperimentConfig& c, bool need_grid = true) : cfg(c), def(load_problem(c.problem_path())) {
        barrier = build_barrier(def);
        if (need_grid) {
            grid = build_grid(def, barrier ? &*barrier : nullptr, cfg.h);
            dg = std::make_shared<DiscreteGame>(def.game, grid);
        }
    }
    int dim() const { return def.game.dim(); }
    PucciSpec pucci() const { return {cfg.delta_hat.value_or(def.game.constants().delta), cfg.rotations}; }
    RegMode mode() const { return cfg.mode == "obstacle" ? RegMode::ObstacleResidual : RegMode::ExtendedGame; }
    std::optional<Point> half_widths() const {
        if (def.domain.kind != DomainType::WholeSpace) return std::nullopt;
        return Point::Constant(dim(), def.domain.truncation_half_width);
    }
    std::vector<Point> starts() const {
        std::vector<Point> xs;
        for (const auto& p : cfg.x0) xs.push_back(to_point(p, dim(), "x0 entry"));
        if (xs.empty()) xs.push_back(Point::Zero(dim()));
        return xs;
    }
    MarkovPolicy policy(const PolicyChoice& p, const SolveResult* saddle) const {
        if (p.saddle) return MarkovPolicy::from_solve(*dg, *saddle);
        const int a = def.game.alphas().index_of(p.alpha), b = def.game.betas().index_of(p.beta);
        if (a < 0) throw ConfigError("unknown alpha label '" + p.alpha + "'");
        if (b < 0) throw ConfigError("unknown beta label '" + p.beta + "'");
        return MarkovPolicy::constant(a, b);
    }
};

inline std::string control_label(const GameCoefficients& game, int n_alpha_total, int ia, bool alpha) {
    if (ia == kExactPucci) return "pucci";
    if (ia < 0) return "-";
    const auto& set = alpha ? game.alphas() : game.betas();
    if (ia < set.size()) return set.label(ia);
    return alpha && ia < n_alpha_total ? "A2:" + std::to_string(ia - set.size()) : "?";
}

inline Table solution_table(const Context& ctx, const SolveResult& r) {
    Table t;
    t.header = axis_header(ctx.dim());
    for (const char* c : {"kind", "v", "alpha", "beta"}) t.header.emplace_back(c);
    const auto& g = *ctx.grid;
    for (int n = 0; n < g.size(); ++n) {
        auto row = coords(g.position(n));
        const bool in = g.kind(n) == NodeKind::Interior;
        row.emplace_back(in ? "interior" : "boundary");
        row.push_back(Table::num(r.v[static_cast<std::size_t>(n)]));
        const int ia = in ? r.alpha[static_cast<std::size_t>(n)] : -1;
        const int ib = in ? r.beta[static_cast<std::size_t>(n)] : -1;
        row.push_back(control_label(ctx.def.game, r.n_alpha_total, ia, true));
        row.push_back(ia == kExactPucci ? "-" : control_label(ctx.def.game, r.n_alpha_total, ib, false));
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline json solve_json(const SolveResult& r) {
    return {{"residual", r.residual},
            {"outer_iterations", r.outer_iterations},
            {"linear_solves", r.linear_solves},
            {"used_fallback", r.used_fallback},
            {"residual_history", r.residual_history},
            {"warnings", r.warnings}};
}

}  // namespace exp_detail

inline RunResult cmd_validate(const ExperimentConfig& cfg) {
    const auto def = load_problem(cfg.problem_path());
    RunResult out;
    std::optional<Barrier> bar;
    std::string barrier_error;
    try {
        bar = build_barrier(def);
    } catch (const BarrierError& e) {
        barrier_error = e.what();
    }
    std::optional<Point> hw;
    if (def.domain.kind == DomainType::WholeSpace) hw = Point::Constant(def.game.dim(), def.domain.truncation_half_width);
    auto rep = validate_assumptions(def.game, bar ? &*bar : nullptr, cfg.validation, hw);
    if (def.domain.kind != DomainType::WholeSpace) {
        CheckResult c;
        c.name = "barrier";
        if (bar) {
            c.worst = verify_barrier(*bar, def.game, barrier_verification_points(*bar, bar->axes().minCoeff() / 64.0));
            c.threshold = 0.0;
            c.pass = c.worst <= 1e-9;
            c.detail = "mu=" + Table::num(bar->mu()) + " kappa=" + Table::num(bar->kappa());
        } else {
            c.pass = false;
            c.detail = barrier_error;
        }
        rep.checks.push_back(c);
    }
    Table t;
    t.header = {"check", "worst", "threshold", "floor", "pass", "detail"};
    json checks = json::array();
    for (const auto& c : rep.checks) {
        std::string detail = c.detail;
        for (auto& ch : detail)
            if (ch == ',' || ch == '\n') ch = ';';
        t.rows.push_back({c.name, Table::num(c.worst), Table::num(c.threshold), Table::flag(c.floor), Table::flag(c.pass),
                          detail});
        checks.push_back({{"name", c.name},
                          {"worst", c.worst},
                          {"threshold", c.threshold},
                          {"floor", c.floor},
                          {"pass", c.pass},
                          {"detail", c.detail}});
        out.report += std::string(c.pass ? "PASS " : "FAIL ") + c.name + " worst=" + Table::num(c.worst) +
                      " threshold=" + Table::num(c.threshold) + (c.detail.empty() ? "" : " (" + c.detail + ")") + "\n";
    }
    out.tables["validation.csv"] = t;
    out.summary["checks"] = checks;
    out.summary["pass"] = rep.all_pass();
    out.exit_code = rep.all_pass() ? 0 : 1;
    return out;
}

inline RunResult cmd_solve(const ExperimentConfig& cfg) {
    exp_detail::Context ctx(cfg);
    RunResult out;
    const auto r = solve_isaacs(*ctx.dg, cfg.solver);
    out.tables["solution.csv"] = exp_detail::solution_table(ctx, r);
    out.summary["solve"] = exp_detail::solve_json(r);
    out.summary["nodes"] = ctx.grid->size();
    out.summary["interior_nodes"] = ctx.grid->interior_nodes().size();
    out.report = "residual " + Table::num(r.residual) + " after " + std::to_string(r.outer_iterations) +
                 " outer iterations\n";
    return out;
}

inline RunResult cmd_solve_reg(const ExperimentConfig& cfg) {
    if (cfg.K.empty()) throw ConfigError("solve-reg needs at least one K");
    exp_detail::Context ctx(cfg);
    RunResult out;
    const auto ref = solve_isaacs(*ctx.dg, cfg.solver);
    const auto spec = ctx.pucci();
    double threshold = 0.0;
    for (int n : ctx.grid->interior_nodes()) threshold = std::max(threshold, pucci_P(*ctx.grid, ref.v, n, spec.delta_hat));
    out.summary["obstacle_threshold"] = threshold;
    out.summary["reference"] = exp_detail::solve_json(ref);
    Table t;
    t.header = exp_detail::axis_header(ctx.dim());
    t.header.emplace_back("v");
    std::vector<SolveResult> rs;
    SolveOptions opt;
    opt.warm = &ref;
    json runs = json::array();
    for (double K : cfg.K) {
        rs.push_back(solve_regularized(*ctx.dg, K, spec, cfg.solver, ctx.mode(), opt));
        t.header.push_back("v_K" + Table::num(K));
        runs.push_back({{"K", K}, {"solve", exp_detail::solve_json(rs.back())}});
        out.report += "K=" + Table::num(K) + " residual " + Table::num(rs.back().residual) + "\n";
    }
    for (int n = 0; n < ctx.grid->size(); ++n) {
        auto row = exp_detail::coords(ctx.grid->position(n));
        row.push_back(Table::num(ref.v[static_cast<std::size_t>(n)]));
        for (const auto& r : rs) row.push_back(Table::num(r.v[static_cast<std::size_t>(n)]));
        t.rows.push_back(std::move(row));
    }
    out.summary["runs"] = runs;
    out.tables["solution.csv"] = t;
    return out;
}

inline RunResult cmd_rate_study(const ExperimentConfig& cfg) {
    if (cfg.K.empty()) throw ConfigError("rate-study needs at least one K");
    exp_detail::Context ctx(cfg);
    RunResult out;
    const auto ref = solve_isaacs(*ctx.dg, cfg.solver);
    const auto st = rate_study(*ctx.dg, ref, cfg.K, ctx.pucci(), cfg.solver, ctx.mode(), cfg.timing);
    Table t;
    t.header = {"K", "e_K", "weighted", "ratio", "iterations", "wall_time_ms"};
    for (const auto& r : st.rows)
        t.rows.push_back({Table::num(r.K), Table::num(r.e_K), Table::num(r.weighted), Table::num(r.ratio),
                          std::to_string(r.iterations), Table::num(r.wall_time_ms)});
    out.tables["rate.csv"] = t;
    out.summary["obstacle_threshold"] = st.obstacle_threshold;
    out.summary["slope"] = st.slope ? json(*st.slope) : json(nullptr);
    out.summary["empirical_N"] = st.empirical_N;
    out.summary["complete"] = st.complete;
    if (!st.complete) out.summary["error"] = st.error;
    out.summary["reference"] = exp_detail::solve_json(ref);
    out.report = "empirical N " + Table::num(st.empirical_N) + "\nslope " +
                 (st.slope ? Table::num(*st.slope) : std::string("n/a")) + "\nobstacle threshold " +
                 Table::num(st.obstacle_threshold) + "\n";
    if (!st.complete) out.report += "incomplete: " + st.error + "\n";
    out.exit_code = st.complete ? 0 : 1;
    return out;
}

/// Monte Carlo payoffs from each x0 and epsilon. With the saddle policy on a bounded
/// domain the estimate is also compared with the grid solution.
inline RunResult cmd_simulate(const ExperimentConfig& cfg) {
    bool saddle = false;
    for (const auto& p : cfg.policies) saddle = saddle || p.saddle;
    exp_detail::Context ctx(cfg, saddle);
    RunResult out;
    std::optional<SolveResult> ref;
    if (saddle) ref = solve_isaacs(*ctx.dg, cfg.solver);
    const Simulator sim(ctx.def.game, ctx.barrier, ctx.half_widths());
    const double allowance = cfg.allowance.value_or(4.0 * cfg.h + 4.0 * std::sqrt(cfg.dt));
    Table t;
    t.header = exp_detail::axis_header(ctx.dim());
    for (const char* c : {"policy", "epsilon", "mean", "std_error", "n_paths", "censored", "nonfinite", "bias_bound",
                          "v_h", "tolerance", "pass"})
        t.header.emplace_back(c);
    bool ok = true;
    json reports = json::array();
    for (const auto& pc : cfg.policies) {
        const auto pol = ctx.policy(pc, ref ? &*ref : nullptr);
        for (const auto& x : ctx.starts()) {
            for (double eps : cfg.epsilon) {
                SimConfig sc;
                sc.dt = cfg.dt;
                sc.epsilon = eps;
                sc.n_paths = cfg.n_paths;
                sc.seed = cfg.seed;
                sc.threads = cfg.threads;
                sc.censor_factor = cfg.censor_factor;
                sc.discount_floor = cfg.discount_floor;
                const auto e = sim.estimate_payoff(pol, x, sc);
                bool pass = e.usable;
                std::optional<double> vh, tol;
                if (pc.saddle && ref) {
                    vh = interpolate(*ctx.grid, ref->v, x);
                    tol = 3.0 * e.std_error + e.bias_bound + allowance;
                    pass = pass && std::abs(e.mean - *vh) <= *tol;
                }
                ok = ok && pass;
                reports.push_back({{"x0", std::vector<double>(x.data(), x.data() + x.size())},
                                   {"policy", pc.name()},
                                   {"estimate", exp_detail::estimate_json(e)},
                                   {"pass", pass}});
                auto row = exp_detail::coords(x);
                row.insert(row.end(), {pc.name(), Table::num(eps), Table::num(e.mean), Table::num(e.std_error),
                                       std::to_string(e.n_paths), std::to_string(e.censored_count),
                                       std::to_string(e.nonfinite_count), Table::num(e.bias_bound), Table::num(vh),
                                       Table::num(tol), Table::flag(pass)});
                t.rows.push_back(std::move(row));
                out.report += std::string(pass ? "PASS " : "FAIL ") + pc.name() + " eps=" + Table::num(eps) +
                              " mean=" + Table::num(e.mean) + " stderr=" + Table::num(e.std_error) + "\n";
            }
        }
    }
    out.tables["simulate.csv"] = t;
    out.summary["estimates"] = reports;
    out.summary["allowance"] = allowance;
    out.summary["pass"] = ok;
    out.exit_code = ok ? 0 : 1;
    return out;
}

/// DPP identity on a whole-space problem at each x0 and lambda0, saddle policies from the grid.
inline RunResult cmd_dpp(const ExperimentConfig& cfg) {
    exp_detail::Context ctx(cfg);
    if (ctx.def.domain.kind != DomainType::WholeSpace) throw ConfigError("dpp-check needs a whole-space problem");
    RunResult out;
    const auto ref = solve_isaacs(*ctx.dg, cfg.solver);
    const Simulator sim(ctx.def.game, std::nullopt, ctx.half_widths());
    const double allowance = cfg.allowance.value_or(0.02);
    Table t;
    t.header = exp_detail::axis_header(ctx.dim());
    for (const char* c : {"policy", "gamma", "lambda0", "lhs", "rhs_mean", "rhs_std_error", "discrepancy", "tolerance",
                          "pass"})
        t.header.emplace_back(c);
    bool ok = true;
    json reports = json::array();
    for (const auto& pc : cfg.policies) {
        const auto pol = ctx.policy(pc, &ref);
        for (const auto& x : ctx.starts()) {
            for (double lam : cfg.lambda0) {
                SimConfig sc;
                sc.dt = cfg.dt;
                sc.n_paths = cfg.n_paths;
                sc.seed = cfg.seed;
                sc.threads = cfg.threads;
                sc.discount_floor = cfg.discount_floor;
                const auto d = check_dpp(sim, *ctx.grid, ref.v, cfg.gamma, lam, x, pol, sc, allowance);
                const bool pass = d.pass && (cfg.gamma > 0.0 ? d.rhs.usable : true);
                ok = ok && pass;
                reports.push_back({{"x0", std::vector<double>(x.data(), x.data() + x.size())},
                                   {"policy", pc.name()},
                                   {"lambda0", lam},
                                   {"lhs", d.lhs},
                                   {"rhs", exp_detail::estimate_json(d.rhs)},
                                   {"discrepancy", d.discrepancy},
                                   {"tolerance", d.tolerance},
                                   {"pass", pass}});
                auto row = exp_detail::coords(x);
                row.insert(row.end(), {pc.name(), Table::num(cfg.gamma), Table::num(lam), Table::num(d.lhs),
                                       Table::num(d.rhs.mean), Table::num(d.rhs.std_error), Table::num(d.discrepancy),
                                       Table::num(d.tolerance), Table::flag(pass)});
                t.rows.push_back(std::move(row));
                out.report += std::string(pass ? "PASS " : "FAIL ") + "lambda0=" + Table::num(lam) +
                              " discrepancy=" + Table::num(d.discrepancy) + " tolerance=" + Table::num(d.tolerance) +
                              "\n";
            }
        }
    }
    out.tables["dpp.csv"] = t;
    out.summary["checks"] = reports;
    out.summary["allowance"] = allowance;
    out.summary["pass"] = ok;
    out.exit_code = ok ? 0 : 1;
    return out;
}

/// Reduction identity at each x0, equator moments from each direction and policy, and
/// optionally the projection-off drift study.
inline RunResult cmd_lift_check(const ExperimentConfig& cfg) {
    exp_detail::Context ctx(cfg);
    if (!ctx.barrier) throw ConfigError("lift-check needs a bounded domain");
    if (!ctx.def.game.terminal_fn().is_zero()) throw ConfigError("lift-check requires g = 0");
    RunResult out;
    const auto ref = solve_isaacs(*ctx.dg, cfg.solver);
    const LiftedGame lg(ctx.def.game, *ctx.barrier);
    const SurfaceSimulator sim(lg, cfg.max_refine);
    SurfaceConfig sc;
    sc.dt = cfg.dt;
    sc.n_paths = cfg.n_paths;
    sc.seed = cfg.seed;
    sc.threads = cfg.threads;
    sc.projection = cfg.projection;
    sc.tail_tol = cfg.tail_tol;
    const double h = cfg.h;
    const double allowance = cfg.allowance.value_or(5.0 * h * h + 2.0 * std::sqrt(cfg.dt));
    bool ok = true;

    const auto saddle = MarkovPolicy::from_solve(*ctx.dg, ref);
    Table red;
    red.header = exp_detail::axis_header(ctx.dim());
    for (const char* c : {"psi", "v_h", "vbar_mean", "vbar_stderr", "difference", "tolerance", "refined", "skipped",
                          "pass"})
        red.header.emplace_back(c);
    for (const auto& r : check_reduction(sim, ctx.starts(), *ctx.grid, ref.v, saddle, sc, allowance, cfg.min_psi)) {
        auto row = exp_detail::coords(r.x);
        row.insert(row.end(), {Table::num(r.psi), Table::num(r.v_h), Table::num(r.vbar.mean),
                               Table::num(r.vbar.std_error), Table::num(r.difference), Table::num(r.tolerance),
                               std::to_string(r.vbar.flagged_count), Table::flag(r.skipped), Table::flag(r.pass)});
        red.rows.push_back(std::move(row));
        ok = ok && r.pass;
        out.report += std::string(r.skipped ? "SKIP " : r.pass ? "PASS " : "FAIL ") + "reduction psi=" +
                      Table::num(r.psi) + " diff=" + Table::num(r.difference) + " tol=" + Table::num(r.tolerance) + "\n";
    }
    out.tables["reduction.csv"] = red;

    const auto band = calibrate_equator_band(lg);
    out.summary["band"] = {{"eps", band.eps},       {"N0", band.N0},   {"N1", band.N1},
                           {"lambda", band.lambda}, {"L_b", band.L_b}, {"L_sigma", band.L_sigma},
                           {"margin", band.margin}, {"min_band_gradient", band.min_band_gradient}};
    SurfaceConfig ec = sc;
    ec.dt = cfg.equator_dt.value_or(std::min(cfg.dt, band.eps / 50.0));
    std::vector<Point> dirs;
    for (const auto& d : cfg.directions) dirs.push_back(exp_detail::to_point(d, ctx.dim(), "direction"));
    if (dirs.empty()) dirs.push_back(Point::Unit(ctx.dim(), 0));
    Table eq;
    eq.header = exp_detail::axis_header(ctx.dim(), "dir");
    for (const char* c : {"policy", "level", "dt", "mean", "std_error", "censored", "bound", "pass"})
        eq.header.emplace_back(c);
    for (const auto& pc : cfg.policies) {
        const auto pol = ctx.policy(pc, &ref);
        for (const auto& dir : dirs) {
            const auto z0 = surface_point_at_level(lg.barrier(), dir, band.eps);
            const auto m = equator_exit_moment(sim, band, z0, pol, ec);
            ok = ok && m.pass;
            auto row = exp_detail::coords(dir);
            row.insert(row.end(), {pc.name(), Table::num(band.eps), Table::num(ec.dt), Table::num(m.estimate.mean),
                                   Table::num(m.estimate.std_error), std::to_string(m.estimate.censored_count),
                                   Table::num(m.bound), Table::flag(m.pass)});
            eq.rows.push_back(std::move(row));
            out.report += std::string(m.pass ? "PASS " : "FAIL ") + "equator " + pc.name() + " mean=" +
                          Table::num(m.estimate.mean) + " bound=" + Table::num(m.bound) + "\n";
        }
    }
    out.tables["equator.csv"] = eq;

    if (!cfg.drift_dts.empty()) {
        const auto st = gamma_invariance_study(sim, lift_point(ctx.starts().front(), lg.barrier()), saddle,
                                               cfg.drift_dts, sc);
        Table dr;
        dr.header = {"dt", "drift", "std_error", "nonfinite", "fitted_C", "ratio"};
        for (const auto& r : st.rows)
            dr.rows.push_back({Table::num(r.dt), Table::num(r.drift.mean), Table::num(r.drift.std_error),
                               std::to_string(r.drift.nonfinite_count), Table::num(r.fitted_C), Table::num(r.ratio)});
        out.tables["drift.csv"] = dr;
        out.summary["drift_pass"] = st.pass;
        ok = ok && st.pass;
        out.report += std::string(st.pass ? "PASS " : "FAIL ") + "drift study\n";
    }
    out.summary["allowance"] = allowance;
    out.summary["pass"] = ok;
    out.exit_code = ok ? 0 : 1;
    return out;
}

/// Dispatch by subcommand name; the summary gets the command, config and version embedded.
inline RunResult run_command(const std::string& name, const ExperimentConfig& cfg) {
    RunResult r;
    if (name == "validate")
        r = cmd_validate(cfg);
    else if (name == "solve")
        r = cmd_solve(cfg);
    else if (name == "solve-reg")
        r = cmd_solve_reg(cfg);
    else if (name == "rate-study")
        r = cmd_rate_study(cfg);
    else if (name == "simulate")
        r = cmd_simulate(cfg);
    else if (name == "dpp-check")
        r = cmd_dpp(cfg);
    else if (name == "lift-check")
        r = cmd_lift_check(cfg);
    else
        throw ConfigError("unknown command '" + name + "'");
    r.summary["schema_version"] = kSchemaVersion;
    r.summary["tool_version"] = kToolVersion;
    r.summary["command"] = name;
    r.summary["config"] = to_json(cfg);
    r.summary["exit_code"] = r.exit_code;
    return r;
}

}  // namespace isaacs
