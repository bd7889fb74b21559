#include "qbsde/serialize.hpp"

#include "qbsde/error.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>

namespace qbsde {

using nlohmann::json;

namespace {

json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

json vec(const Vec& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
    return a;
}

json mat(const Mat& m) {
    json a = json::array();
    for (int i = 0; i < m.rows(); ++i) a.push_back(vec(m.row(i).transpose()));
    return a;
}

json sample(const SamplePoint& p) { return {{"t", num(p.t)}, {"x", vec(p.x)}, {"z", mat(p.z)}}; }

double as_double(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (s == "inf") return INFINITY;
        if (s == "-inf") return -INFINITY;
        if (s == "nan") return NAN;
    }
    fail(ErrorKind::io, "expected a number in Lyapunov pair JSON");
}

}  // namespace

std::string to_json(const DiagnosticReport& r) {
    json rungs = json::array();
    for (const Rung& g : r.rungs)
        rungs.push_back({{"label", g.label}, {"value", num(g.value)}, {"margin", num(g.margin)}, {"se", num(g.se)},
                         {"pass", g.pass}});
    json j = {{"name", r.name}, {"pass", r.pass}, {"margin", num(r.margin)}, {"se", num(r.se)},
              {"witness", r.witness}, {"rungs", rungs}};
    if (!r.note.empty()) j["note"] = r.note;
    return j.dump(2);
}

std::string to_json(const HolderEstimate& h) {
    json j = {{"name", "holder_seminorm"}, {"alpha", num(h.alpha)}, {"value", num(h.value)},
              {"n_pairs", h.n_pairs}, {"exhaustive", h.exhaustive},
              {"witness", {{"t1", num(h.t1)}, {"x1", vec(h.x1)}, {"t2", num(h.t2)}, {"x2", vec(h.x2)}}}};
    return j.dump(2);
}

std::string to_json(const BmoLadder& b) {
    json est = json::array();
    for (const auto& e : b.estimates)
        est.push_back({{"delta", num(e.delta)}, {"value", num(e.value)}, {"se", num(e.se)},
                       {"anchor", {{"t", num(e.t)}, {"x", vec(e.x)}}}, {"escape_fraction", num(e.escape_fraction)}});
    json j = {{"name", "bmo_ladder"}, {"monotone", b.monotone}, {"estimates", est},
              {"note", "deterministic anchors give a lower bound of the stopping-time supremum"}};
    return j.dump(2);
}

std::string to_json(const GrowthReport& g) {
    json conds = json::array();
    for (const auto& c : g.conditions)
        conds.push_back({{"name", c.name}, {"pass", c.pass}, {"worst_ratio", num(c.worst_ratio)},
                         {"witness", sample(c.witness)}});
    return json({{"name", "bf_growth"}, {"pass", g.pass}, {"conditions", conds}}).dump(2);
}

std::string to_json(const ABReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"k", row.k}, {"max_margin", num(row.max_margin)}, {"witness", sample(row.witness)}});
    return json({{"name", "ab_certificate"}, {"pass", r.pass}, {"L_growth_ok", r.L_growth_ok},
                 {"L_growth_worst", num(r.L_growth_worst)}, {"rows", rows}})
        .dump(2);
}

std::string to_json(const VerifyReport& r) {
    json j = {{"name", "lyapunov_verify"}, {"pass", r.pass}, {"margin", num(r.min_margin)},
              {"n_samples", r.n_samples},
              {"witness", {{"t", num(r.t)}, {"x", vec(r.x)}, {"y", vec(r.y)}, {"z", mat(r.z)}}}};
    return j.dump(2);
}

std::string to_json(const ValidationReport& r) {
    json checks = json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name}, {"pass", c.pass}, {"worst", num(c.worst)}, {"t", num(c.t)},
                          {"x", vec(c.x)}, {"direction", vec(c.direction)}});
    return json({{"name", "coefficients"}, {"pass", r.pass}, {"checks", checks}}).dump(2);
}

std::string to_json(const DiscrepancyReport& r) {
    return json({{"name", "cross_validate"}, {"sup_v", num(r.sup_v)}, {"l2_v", num(r.l2_v)}, {"sup_w", num(r.sup_w)},
                 {"l2_w", num(r.l2_w)}, {"n_points", r.n_points}})
        .dump(2);
}

std::string to_json(const ConvergenceInfo& c) {
    json res = json::array();
    for (double v : c.picard_residuals) res.push_back(num(v));
    return json({{"cfl_ratio", num(c.cfl_ratio)}, {"n_internal_steps", c.n_internal_steps},
                 {"max_picard_iterations", c.max_picard_iterations}, {"sup_z", num(c.sup_z)},
                 {"picard_residuals", res}})
        .dump(2);
}

std::string to_json(const LyapunovPair& p) {
    json a = json::array();
    for (double v : p.alphas) a.push_back(num(v));
    json j = {{"kind", p.kind == LyapunovKind::quadratic ? "quadratic" : "cosh_recursive"},
              {"N", p.N}, {"alphas", a}, {"c", num(p.c)}, {"scale", num(p.scale)}, {"k_const", num(p.k_const)},
              {"C1", num(p.C1)}, {"C", num(p.C)}, {"C0", num(p.C0)}, {"eps0", num(p.eps0)},
              {"kappa_star", num(p.kappa_star)}};
    return j.dump(2);
}

LyapunovPair lyapunov_pair_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::io, std::string("Lyapunov pair JSON does not parse: ") + e.what());
    }
    LyapunovPair p;
    try {
        std::string kind = j.at("kind").get<std::string>();
        if (kind == "quadratic")
            p.kind = LyapunovKind::quadratic;
        else if (kind == "cosh_recursive")
            p.kind = LyapunovKind::cosh_recursive;
        else
            fail(ErrorKind::io, "unknown Lyapunov kind " + kind);
        p.N = j.at("N").get<int>();
        for (const auto& a : j.at("alphas")) p.alphas.push_back(as_double(a));
        p.c = as_double(j.at("c"));
        p.scale = as_double(j.at("scale"));
        p.k_const = as_double(j.at("k_const"));
        p.C1 = as_double(j.at("C1"));
        if (j.contains("C")) p.C = as_double(j.at("C"));
        if (j.contains("C0")) p.C0 = as_double(j.at("C0"));
        if (j.contains("eps0")) p.eps0 = as_double(j.at("eps0"));
        if (j.contains("kappa_star")) p.kappa_star = as_double(j.at("kappa_star"));
    } catch (const json::exception& e) {
        fail(ErrorKind::io, std::string("Lyapunov pair JSON is incomplete: ") + e.what());
    }
    if (p.kind == LyapunovKind::cosh_recursive && static_cast<int>(p.alphas.size()) != p.N)
        fail(ErrorKind::io, "Lyapunov pair alphas do not match N");
    return p;
}

}  // namespace qbsde
