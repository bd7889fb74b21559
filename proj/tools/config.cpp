#include "config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace qbsde::cli {

using nlohmann::json;

namespace {

// Reads keys of one JSON object and rejects whatever was not consumed.
class Obj {
public:
    Obj(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
    }
    ~Obj() noexcept(false) {
        if (std::uncaught_exceptions()) return;
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(where_ + ": unknown key \"" + it.key() + "\"");
    }

    bool has(const std::string& k) {
        seen_.insert(k);
        return j_.contains(k) && !j_.at(k).is_null();
    }
    const json& at(const std::string& k) {
        seen_.insert(k);
        return j_.at(k);
    }
    std::string path(const std::string& k) const { return where_ + "." + k; }

    template <class T>
    void get(const std::string& k, T& out) {
        if (!has(k)) return;
        out = as<T>(j_.at(k), path(k));
    }
    template <class T>
    void get(const std::string& k, std::optional<T>& out) {
        if (!has(k)) return;
        out = as<T>(j_.at(k), path(k));
    }

    template <class T>
    static T as(const json& v, const std::string& where) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError(where + ": expected a boolean");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
            if constexpr (std::is_unsigned_v<T>)
                if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)
                    throw ConfigError(where + ": expected a non-negative integer");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ConfigError(where + ": expected a number");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError(where + ": expected a string");
        } else {
            if (!v.is_array()) throw ConfigError(where + ": expected an array");
            T out;
            for (std::size_t i = 0; i < v.size(); ++i)
                out.push_back(as<typename T::value_type>(v[i], where + "[" + std::to_string(i) + "]"));
            return out;
        }
        return v.get<T>();
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

RegionConfig parse_region(const json& j, const std::string& where) {
    RegionConfig r;
    Obj o(j, where);
    o.get("lo", r.lo);
    o.get("hi", r.hi);
    o.get("t_lo", r.t_lo);
    o.get("t_hi", r.t_hi);
    o.get("n_per_axis", r.n_per_axis);
    o.get("n_times", r.n_times);
    if (r.lo.size() != r.hi.size()) throw ConfigError(where + ": lo and hi differ in length");
    return r;
}

SystemOptions parse_system(const json& j) {
    SystemOptions s;
    if (j.is_string()) {
        s.name = j.get<std::string>();
        return s;
    }
    Obj o(j, "system");
    o.get("name", s.name);
    o.get("T", s.T);
    o.get("d", s.d);
    o.get("amplitude", s.amplitude);
    o.get("theta", s.theta);
    o.get("alphas", s.alphas);
    o.get("box", s.box);
    o.get("chart", s.chart);
    o.get("coefficient", s.coefficient);
    o.get("constant", s.constant);
    o.get("drift", s.drift);
    o.get("terminal", s.terminal);
    return s;
}

GridConfig parse_grid(const json& j) {
    GridConfig g;
    Obj o(j, "solver.grid");
    std::vector<double> lo, hi;
    o.get("lo", lo);
    o.get("hi", hi);
    if (lo.empty() || lo.size() != hi.size()) throw ConfigError("solver.grid: lo and hi must be non-empty and match");
    g.lo = Eigen::Map<Vec>(lo.data(), lo.size());
    g.hi = Eigen::Map<Vec>(hi.data(), hi.size());
    o.get("dx", g.dx);
    o.get("dt", g.dt);
    o.get("safety", g.safety);
    o.get("n_save", g.n_save);
    return g;
}

RegressionConfig parse_regression(const json& j) {
    RegressionConfig r;
    Obj o(j, "solver.regression");
    o.get("n_paths", r.n_paths);
    o.get("n_steps", r.n_steps);
    o.get("degree", r.degree);
    o.get("truncation", r.truncation);
    o.get("picard_max", r.picard_max);
    o.get("picard_tol", r.picard_tol);
    std::vector<double> x0;
    o.get("x0", x0);
    if (!x0.empty()) r.x0 = Eigen::Map<Vec>(x0.data(), x0.size());
    o.get("init_spread", r.init_spread);
    o.get("domain_quantile", r.domain_quantile);
    return r;
}

DiagnosticConfig parse_diagnostic(const json& j, const std::string& where) {
    DiagnosticConfig d;
    Obj o(j, where);
    o.get("type", d.type);
    static const std::set<std::string> types{"holder", "bmo", "submartingale", "apriori", "nash", "level_set", "oracle"};
    if (!types.count(d.type)) throw ConfigError(where + ": unknown diagnostic type \"" + d.type + "\"");
    o.get("alpha", d.alpha);
    o.get("n_pairs", d.n_pairs);
    o.get("refinements", d.refinements);
    o.get("deltas", d.deltas);
    o.get("n_anchor", d.n_anchor);
    o.get("n_paths", d.n_paths);
    o.get("n_steps", d.n_steps);
    o.get("tol", d.tol);
    o.get("pair", d.pair);
    if (d.pair != "bf" && d.pair != "quadratic") throw ConfigError(where + ".pair: expected bf or quadratic");
    o.get("c", d.c);
    o.get("k_scale", d.k_scale);
    o.get("alpha_scale", d.alpha_scale);
    if (o.has("region")) d.region = parse_region(o.at("region"), o.path("region"));
    return d;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config does not parse: ") + e.what());
    }
    ExperimentConfig c;
    c.canonical = j.dump();
    Obj o(j, "config");
    if (o.has("system")) c.system = parse_system(o.at("system"));
    o.get("seed", c.seed);
    o.get("out", c.out);
    if (o.has("solver")) {
        Obj s(o.at("solver"), "solver");
        s.get("method", c.method);
        if (s.has("grid")) c.grid = parse_grid(s.at("grid"));
        if (s.has("regression")) c.regression = parse_regression(s.at("regression"));
        if (s.has("compare_region")) c.compare_region = parse_region(s.at("compare_region"), "solver.compare_region");
    }
    if (c.method != "grid" && c.method != "regression" && c.method != "both")
        throw ConfigError("solver.method: expected grid, regression or both");
    if (o.has("checks")) {
        const json& ch = o.at("checks");
        if (ch.is_array()) {
            c.checks = Obj::as<std::vector<std::string>>(ch, "checks");
        } else {
            Obj k(ch, "checks");
            k.get("run", c.checks);
            k.get("n_samples", c.check_samples);
        }
        static const std::set<std::string> known{"coefficients", "spanning", "bf", "ab", "lyapunov"};
        for (const auto& s : c.checks)
            if (!known.count(s)) throw ConfigError("checks: unknown check \"" + s + "\"");
    }
    if (o.has("lyapunov")) {
        Obj l(o.at("lyapunov"), "lyapunov");
        l.get("c", c.lyapunov.c);
        l.get("n_samples", c.lyapunov.n_samples);
        l.get("z_max", c.lyapunov.z_max);
        l.get("k_scale", c.lyapunov.k_scale);
        l.get("alpha_scale", c.lyapunov.alpha_scale);
    }
    if (o.has("diagnostics")) {
        const json& d = o.at("diagnostics");
        if (!d.is_array()) throw ConfigError("diagnostics: expected an array");
        for (std::size_t i = 0; i < d.size(); ++i)
            c.diagnostics.push_back(parse_diagnostic(d[i], "diagnostics[" + std::to_string(i) + "]"));
    }
    if (o.has("simulate")) {
        Obj s(o.at("simulate"), "simulate");
        s.get("n_paths", c.simulate.n_paths);
        s.get("n_steps", c.simulate.n_steps);
        s.get("x0", c.simulate.x0);
        s.get("aronson", c.simulate.aronson);
        s.get("bin_width", c.simulate.bin_width);
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

GridConfig default_grid(const SystemBundle& b) {
    GridConfig g;
    const int d = b.spec.d;
    g.lo = Vec::Constant(d, d == 1 ? -6.0 : -4.0);
    g.hi = Vec::Constant(d, d == 1 ? 6.0 : 4.0);
    g.dx = d == 1 ? 0.05 : 0.1;
    return g;
}

}  // namespace qbsde::cli
