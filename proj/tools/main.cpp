// qbsde: batch runner for the example systems.
//
// Exit codes: 0 pass, 1 check or diagnostic failure, 2 usage or config error, 3 runtime or solver error.

#include "config.hpp"

#include "qbsde/diagnostics.hpp"
#include "qbsde/error.hpp"
#include "qbsde/field.hpp"
#include "qbsde/paths.hpp"
#include "qbsde/rng.hpp"
#include "qbsde/registry.hpp"
#include "qbsde/serialize.hpp"
#include "qbsde/solver.hpp"
#include "qbsde/spanning.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qbsde;
using namespace qbsde::cli;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { ok = 0, failed = 1, usage = 2, runtime = 3 };

/// Runtime failure after the config was accepted.
struct RuntimeFailure : std::runtime_error {
    ErrorKind kind;
    RuntimeFailure(ErrorKind k, const std::string& m) : std::runtime_error(m), kind(k) {}
};

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string method;
    std::string system;
    std::optional<double> theta;
    bool all = false;
    std::string spanning;
    int dim = 0;
    std::string field;
    std::string pair;
    std::string action;
};

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw RuntimeFailure(ErrorKind::io, "cannot write " + p.string());
    out << text;
}

json parsed(const std::string& s) { return json::parse(s); }

struct Context {
    ExperimentConfig cfg;
    fs::path out;
    std::string config_hash;
};

Context make_context(const Flags& f) {
    Context c;
    if (!f.config.empty()) c.cfg = load_config(f.config);
    else c.cfg.canonical = "{}";
    if (!f.system.empty()) c.cfg.system.name = f.system;
    if (f.theta) c.cfg.system.theta = *f.theta;
    if (f.seed) c.cfg.seed = f.seed;
    if (!f.method.empty()) c.cfg.method = f.method;
    if (!f.out.empty()) c.cfg.out = f.out;
    if (c.cfg.out.empty()) c.cfg.out = "out";
    c.out = c.cfg.out;
    std::ostringstream eff;
    eff << c.cfg.canonical << "|system=" << c.cfg.system.name << "|theta=" << c.cfg.system.theta
        << "|method=" << c.cfg.method << "|seed=" << (c.cfg.seed ? std::to_string(*c.cfg.seed) : "none");
    c.config_hash = hex(fnv1a(eff.str()));
    return c;
}

std::uint64_t require_seed(const Context& c, const std::string& stage) {
    if (!c.cfg.seed) throw ConfigError(stage + " is stochastic and needs a seed (--seed or \"seed\")");
    return *c.cfg.seed;
}

SystemBundle build_system(const Context& c) {
    try {
        return make_system(c.cfg.system);
    } catch (const Error& e) {
        throw ConfigError(std::string("system: ") + e.what());
    }
}

json manifest_base(const Context& c, const std::string& command) {
    json m;
    m["command"] = command;
    m["version"] = kVersion;
    m["config_hash"] = c.config_hash;
    m["seed"] = c.cfg.seed ? json(*c.cfg.seed) : json(nullptr);
    m["system"] = c.cfg.system.name;
    return m;
}

Region to_region(const std::optional<RegionConfig>& rc, int d, double T) {
    Region r;
    r.lo = Vec::Constant(d, -1.0);
    r.hi = Vec::Constant(d, 1.0);
    r.t_lo = 0.0;
    r.t_hi = T;
    if (!rc) return r;
    if (!rc->lo.empty()) {
        if (static_cast<int>(rc->lo.size()) != d) throw ConfigError("region dimension does not match the system");
        r.lo = Eigen::Map<const Vec>(rc->lo.data(), d);
        r.hi = Eigen::Map<const Vec>(rc->hi.data(), d);
    }
    r.t_lo = rc->t_lo;
    r.t_hi = rc->t_hi < 0 ? T : rc->t_hi;
    r.n_per_axis = rc->n_per_axis;
    r.n_times = rc->n_times;
    return r;
}

double default_radius(const SystemBundle& b) { return 0.5 * max_lyapunov_radius(b); }

LyapunovPair mutated(LyapunovPair p, double k_scale, const std::vector<double>& alpha_scale) {
    p.k_const *= k_scale;
    p.C1 *= k_scale;
    for (std::size_t i = 0; i < alpha_scale.size() && i < p.alphas.size(); ++i) p.alphas[i] *= alpha_scale[i];
    return p;
}

// check ------------------------------------------------------------------------------------------

Mat parse_vectors(const std::string& text, int dim) {
    std::vector<std::vector<double>> cols;
    int n = dim;
    std::string s = text;
    std::size_t i = 0;
    auto skip = [&] {
        while (i < s.size() && (s[i] == ' ' || s[i] == ',' || s[i] == ';')) ++i;
    };
    std::vector<std::pair<int, double>> units;  // index, sign
    while (skip(), i < s.size()) {
        if (s[i] == '[') {
            std::size_t j = s.find(']', i);
            if (j == std::string::npos) throw ConfigError("--spanning: unterminated vector");
            std::vector<double> v;
            std::stringstream ss(s.substr(i + 1, j - i - 1));
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                try {
                    v.push_back(std::stod(tok));
                } catch (...) {
                    throw ConfigError("--spanning: bad number \"" + tok + "\"");
                }
            }
            n = std::max<int>(n, v.size());
            cols.push_back(v);
            i = j + 1;
            continue;
        }
        double sign = 1.0;
        if (s[i] == '-' || s[i] == '+') sign = s[i++] == '-' ? -1.0 : 1.0;
        if (i >= s.size() || s[i] != 'e') throw ConfigError("--spanning: expected eK, -eK or [a,b,...]");
        ++i;
        std::size_t j = i;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        if (j == i) throw ConfigError("--spanning: missing index after e");
        int k = std::stoi(s.substr(i, j - i));
        if (k < 1) throw ConfigError("--spanning: indices start at 1");
        n = std::max(n, k);
        cols.push_back({});
        units.emplace_back(static_cast<int>(cols.size()) - 1, sign * k);
        i = j;
    }
    if (cols.empty()) throw ConfigError("--spanning: no vectors");
    Mat a = Mat::Zero(n, cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c)
        for (std::size_t r = 0; r < cols[c].size(); ++r) a(r, c) = cols[c][r];
    for (auto [c, sk] : units) a(static_cast<int>(std::abs(sk)) - 1, c) = sk > 0 ? 1.0 : -1.0;
    return a;
}

json spanning_report(const Mat& a) {
    json r;
    r["name"] = "spanning";
    r["N"] = a.rows();
    r["K"] = a.cols();
    bool pass = positively_spans(SpanningSet(a));
    r["pass"] = pass;
    r["verdict"] = pass ? "positively spanning" : "not positively spanning";
    if (!pass) {
        auto w = strict_separation_witness(SpanningSet(a), 4000, 1);
        if (w) r["separating_direction"] = std::vector<double>(w->data(), w->data() + w->size());
    }
    return r;
}

int cmd_check(const Flags& f) {
    if (!f.spanning.empty()) {
        json r = spanning_report(parse_vectors(f.spanning, f.dim));
        std::cout << r.dump(2) << "\n";
        return r["pass"].get<bool>() ? ok : failed;
    }
    Context c = make_context(f);
    auto b = build_system(c);
    std::vector<std::string> checks = c.cfg.checks;
    if (f.all || checks.empty()) checks = {"coefficients", "spanning", "bf", "ab", "lyapunov"};
    const std::uint64_t seed = c.cfg.seed.value_or(7);
    json reports = json::array();
    bool pass = true;
    for (const auto& name : checks) {
        json r;
        if (name == "coefficients") {
            r = parsed(to_json(validate_coefficients(b.spec, c.cfg.check_samples, seed)));
            r["name"] = "coefficients";
        } else if (name == "spanning") {
            if (!b.certificate) continue;
            r = spanning_report(b.certificate->directions);
        } else if (name == "bf") {
            if (!b.bf) continue;
            r = parsed(to_json(check_bf_growth(*b.bf, 1, c.cfg.check_samples, 50.0, seed)));
            r["name"] = "bf";
        } else if (name == "ab") {
            if (!b.certificate) continue;
            r = parsed(to_json(check_ab(b.driver, *b.certificate, c.cfg.check_samples, 50.0, seed + 1)));
            r["name"] = "ab";
        } else if (name == "lyapunov") {
            if (!b.bf) continue;
            const double radius = c.cfg.lyapunov.c.value_or(default_radius(b));
            auto pair = mutated(bundle_lyapunov(b, radius), c.cfg.lyapunov.k_scale, c.cfg.lyapunov.alpha_scale);
            VerifyOptions vo;
            vo.f_k = b.bf->f_k;
            r = parsed(to_json(verify_lyapunov(pair, assemble(*b.bf), b.spec, radius, 1, c.cfg.lyapunov.n_samples,
                                               c.cfg.lyapunov.z_max, seed + 2, vo)));
            r["name"] = "lyapunov";
            r["c"] = radius;
        }
        pass = pass && r.value("pass", false);
        reports.push_back(r);
    }
    json out;
    out["system"] = b.name;
    out["guarantee"] = b.guarantee;
    if (!b.note.empty()) out["note"] = b.note;
    out["pass"] = pass;
    out["reports"] = reports;
    std::cout << out.dump(2) << "\n";
    return pass ? ok : failed;
}

// solve ------------------------------------------------------------------------------------------

struct Solved {
    std::string tag;
    SolutionField field;
};

std::vector<Solved> run_solvers(const Context& c, const SystemBundle& b) {
    std::vector<Solved> out;
    if (c.cfg.method == "grid" || c.cfg.method == "both") {
        GridConfig g = c.cfg.grid.value_or(default_grid(b));
        if (g.lo.size() != b.spec.d) throw ConfigError("solver.grid dimension does not match the system");
        out.push_back({"grid", solve_pde_grid(b.spec, b.driver, b.terminal, g)});
    }
    if (c.cfg.method == "regression" || c.cfg.method == "both")
        out.push_back({"regression", solve_regression_mc(b.spec, b.driver, b.terminal, c.cfg.regression,
                                                         require_seed(c, "regression"))});
    return out;
}

int cmd_solve(const Flags& f) {
    Context c = make_context(f);
    auto b = build_system(c);
    if (c.cfg.method != "grid") require_seed(c, "regression");
    fs::create_directories(c.out);
    json man = manifest_base(c, "solve");
    man["method"] = c.cfg.method;
    auto gate = certify(b);
    if (!gate.pass) {
        man["status"] = "certification failed";
        man["failures"] = gate.failures;
        write_text(c.out / "manifest.json", man.dump(2) + "\n");
        std::cerr << "system fails its own checks:";
        for (const auto& s : gate.failures) std::cerr << " " << s;
        std::cerr << "\n";
        return failed;
    }
    try {
        auto fields = run_solvers(c, b);
        json payload, conv;
        const bool both = fields.size() > 1;
        for (const auto& s : fields) {
            std::string stem = both ? "field-" + s.tag : "field";
            std::ostringstream bin;
            write_field(s.field, bin);
            write_text(c.out / (stem + ".bin"), bin.str());
            std::ostringstream csv;
            write_field_csv(s.field, csv, {0, static_cast<int>(s.field.times.size()) / 2,
                                           static_cast<int>(s.field.times.size()) - 1});
            std::string cname = both ? "slices-" + s.tag + ".csv" : "slices.csv";
            write_text(c.out / cname, csv.str());
            payload[stem + ".bin"] = hex(fnv1a(bin.str()));
            payload[cname] = hex(fnv1a(csv.str()));
            conv[s.tag] = parsed(to_json(s.field.info));
        }
        man["payload_hashes"] = payload;
        man["convergence"] = conv;
        if (b.oracle) {
            Region r = to_region(c.cfg.compare_region, b.spec.d, b.spec.T);
            for (const auto& s : fields) {
                double err = 0;
                for (int i = 0; i < r.n_per_axis; ++i) {
                    Vec x = r.lo + (r.hi - r.lo) * (double(i) / std::max(1, r.n_per_axis - 1));
                    if (!s.field.in_domain(0.0, x)) continue;
                    err = std::max(err, (evaluate_solution(s.field, 0.0, x).first - b.oracle(0.0, x)).cwiseAbs().maxCoeff());
                }
                man["oracle_error"][s.tag] = err;
            }
        }
        if (both) {
            Region r = to_region(c.cfg.compare_region, b.spec.d, b.spec.T);
            json rep = parsed(to_json(cross_validate(fields[0].field, fields[1].field, r)));
            rep["name"] = "cross_validate";
            json out = json::array({rep});
            write_text(c.out / "report.json", out.dump(2) + "\n");
        }
        man["status"] = "ok";
        write_text(c.out / "manifest.json", man.dump(2) + "\n");
        return ok;
    } catch (const Error& e) {
        man["status"] = "error";
        man["error"] = {{"kind", to_string(e.kind())}, {"message", e.what()}};
        write_text(c.out / "manifest.json", man.dump(2) + "\n");
        std::cerr << e.what() << "\n";
        return runtime;
    }
}

// diagnose ---------------------------------------------------------------------------------------

SolutionField load_field(const Context& c, const Flags& f) {
    std::vector<fs::path> tries;
    if (!f.field.empty()) tries.push_back(f.field);
    else tries = {c.out / "field.bin", c.out / "field-grid.bin", c.out / "field-regression.bin"};
    for (const auto& p : tries) {
        if (!fs::exists(p)) continue;
        std::ifstream in(p, std::ios::binary);
        return read_field(in);
    }
    throw ConfigError("no field file found (tried " + tries.front().string() + "); run solve first");
}

json run_diagnostic(const DiagnosticConfig& d, const Context& c, const SystemBundle& b, const SolutionField& field,
                    std::uint64_t seed) {
    const Region region = to_region(d.region, b.spec.d, field.T());
    PathTestOptions po;
    po.n_steps = d.n_steps;
    po.tol = d.tol;
    if (d.type == "holder") {
        auto h = holder_seminorm(field, d.alpha, region, d.n_pairs, seed);
        json r = parsed(to_json(h));
        bool pass = std::isfinite(h.value);
        if (!d.refinements.empty()) {
            if (field.method != SolveMethod::grid) throw ConfigError("holder refinements need a grid field");
            GridConfig g = c.cfg.grid.value_or(default_grid(b));
            json ladder = json::array();
            std::vector<double> est;
            for (double dx : d.refinements) {
                g.dx = dx;
                auto fr = solve_pde_grid(b.spec, b.driver, b.terminal, g);
                est.push_back(holder_seminorm(fr, d.alpha, region, d.n_pairs, seed).value);
                ladder.push_back({{"dx", dx}, {"value", est.back()}});
            }
            for (double e : est) pass = pass && e <= 2.0 * est.front() && e >= 0.5 * est.front();
            r["refinements"] = ladder;
        }
        r["pass"] = pass;
        return r;
    }
    if (d.type == "bmo") {
        auto lad = bmo_ladder(b.spec, field, d.deltas, region, d.n_anchor, d.n_paths, seed);
        json r = parsed(to_json(lad));
        r["pass"] = lad.monotone;
        return r;
    }
    if (d.type == "submartingale") {
        if (!b.bf) throw ConfigError("submartingale test needs a BF decomposition");
        LyapunovPair pair;
        double radius = 0;
        if (d.pair == "quadratic") {
            if (!d.c) throw ConfigError("quadratic pair needs c");
            radius = *d.c;
            pair = quadratic_lyapunov(radius, b.spec.ellipticity, b.eps, b.terminal.N);
        } else {
            radius = d.c.value_or(default_radius(b));
            pair = bundle_lyapunov(b, radius);
        }
        pair = mutated(pair, d.k_scale, d.alpha_scale);
        po.transform = b.transform;
        json r = parsed(to_json(lyapunov_submartingale_test(b.spec, field, pair, b.bf->f_k, d.n_paths, seed, po)));
        r["c"] = radius;
        if (d.k_scale != 1.0) r["k_scale"] = d.k_scale;
        return r;
    }
    if (d.type == "apriori") {
        if (!b.certificate) throw ConfigError("a-priori test needs an AB certificate");
        return parsed(to_json(apriori_bound_test(b.spec, field, *b.certificate, d.n_paths, seed, po)));
    }
    if (d.type == "nash") {
        if (!b.game) throw ConfigError("nash test needs a game system");
        NashOptions no;
        no.n_steps = d.n_steps;
        no.tol = d.tol;
        return parsed(to_json(nash_deviation_test(*b.game, field, shipped_deviations(b), d.n_paths, seed, no)));
    }
    if (d.type == "level_set") {
        auto chart = system_chart(c.cfg.system);
        if (!chart) throw ConfigError("level_set needs a darling system");
        const double tol = d.tol > 0 ? d.tol : 1e-3;
        double worst = -INFINITY;
        if (field.method != SolveMethod::grid) throw ConfigError("level_set scans grid fields");
        for (const auto& v : field.v)
            for (long i = 0; i < v.grid.size(); ++i) worst = std::max(worst, chart->phi(v.at(i)));
        return {{"name", "level_set"}, {"pass", worst <= tol}, {"max_phi", worst}, {"tol", tol}};
    }
    // oracle
    if (!b.oracle) throw ConfigError("system has no closed-form oracle");
    const double tol = d.tol > 0 ? d.tol : 1e-2;
    double err = 0;
    for (int k = 0; k < region.n_times; ++k) {
        double t = region.t_lo + (region.t_hi - region.t_lo) * k / std::max(1, region.n_times - 1);
        for (int i = 0; i < region.n_per_axis; ++i) {
            Vec x = region.lo + (region.hi - region.lo) * (double(i) / std::max(1, region.n_per_axis - 1));
            if (!field.in_domain(t, x)) continue;
            err = std::max(err, (evaluate_solution(field, t, x).first - b.oracle(t, x)).cwiseAbs().maxCoeff());
        }
    }
    return {{"name", "oracle"}, {"pass", err <= tol}, {"max_error", err}, {"tol", tol}};
}

int cmd_diagnose(const Flags& f) {
    Context c = make_context(f);
    auto b = build_system(c);
    if (c.cfg.diagnostics.empty()) throw ConfigError("no diagnostics configured");
    SolutionField field;
    try {
        field = load_field(c, f);
    } catch (const Error& e) {
        throw ConfigError(std::string("field file: ") + e.what());
    }
    const std::uint64_t seed = require_seed(c, "diagnose");
    fs::create_directories(c.out);
    json man = manifest_base(c, "diagnose");
    json reports = json::array();
    bool pass = true;
    try {
        for (std::size_t i = 0; i < c.cfg.diagnostics.size(); ++i) {
            json r = run_diagnostic(c.cfg.diagnostics[i], c, b, field, derive_seed(seed, i));
            if (!r.contains("name")) r["name"] = c.cfg.diagnostics[i].type;
            r["type"] = c.cfg.diagnostics[i].type;
            pass = pass && r.value("pass", false);
            std::cout << (r.value("pass", false) ? "PASS " : "FAIL ") << c.cfg.diagnostics[i].type << "\n";
            reports.push_back(r);
        }
    } catch (const Error& e) {
        man["status"] = "error";
        man["error"] = {{"kind", to_string(e.kind())}, {"message", e.what()}};
        write_text(c.out / "manifest-diagnose.json", man.dump(2) + "\n");
        write_text(c.out / "report.json", reports.dump(2) + "\n");
        std::cerr << e.what() << "\n";
        return runtime;
    }
    man["status"] = pass ? "pass" : "fail";
    write_text(c.out / "report.json", reports.dump(2) + "\n");
    man["payload_hashes"] = {{"report.json", hex(fnv1a(reports.dump(2) + "\n"))}};
    write_text(c.out / "manifest-diagnose.json", man.dump(2) + "\n");
    return pass ? ok : failed;
}

// simulate ---------------------------------------------------------------------------------------

int cmd_simulate(const Flags& f) {
    Context c = make_context(f);
    auto b = build_system(c);
    const std::uint64_t seed = require_seed(c, "simulate");
    const auto& s = c.cfg.simulate;
    Vec x0 = Vec::Zero(b.spec.d);
    if (!s.x0.empty()) {
        if (static_cast<int>(s.x0.size()) != b.spec.d) throw ConfigError("simulate.x0 dimension does not match");
        x0 = Eigen::Map<const Vec>(s.x0.data(), s.x0.size());
    }
    fs::create_directories(c.out);
    json man = manifest_base(c, "simulate");
    try {
        auto paths = simulate_paths(b.spec, 0.0, x0, b.spec.T / s.n_steps, s.n_steps, s.n_paths, seed);
        std::ostringstream bin, csv;
        write_bundle(paths, bin);
        write_bundle_csv(paths, csv);
        write_text(c.out / "paths.bin", bin.str());
        write_text(c.out / "paths.csv", csv.str());
        man["payload_hashes"] = {{"paths.bin", hex(fnv1a(bin.str()))}, {"paths.csv", hex(fnv1a(csv.str()))}};
        int code = ok;
        if (s.aronson) {
            auto env = aronson_envelope_check(paths, b.spec.T, s.bin_width, EnvelopeConstants::gaussian(b.spec.d),
                                              b.spec.constant_coefficients);
            json r = {{"name", "aronson"},
                      {"n_bins", env.n_bins},
                      {"n_below", env.n_below},
                      {"n_above", env.n_above},
                      {"flagged_fraction", env.flagged_fraction()},
                      {"pass", env.flagged_fraction() <= 0.01}};
            write_text(c.out / "report.json", json::array({r}).dump(2) + "\n");
            if (!r["pass"].get<bool>()) code = failed;
        }
        man["status"] = "ok";
        write_text(c.out / "manifest.json", man.dump(2) + "\n");
        return code;
    } catch (const Error& e) {
        man["status"] = "error";
        man["error"] = {{"kind", to_string(e.kind())}, {"message", e.what()}};
        write_text(c.out / "manifest.json", man.dump(2) + "\n");
        std::cerr << e.what() << "\n";
        return runtime;
    }
}

// lyapunov ---------------------------------------------------------------------------------------

int cmd_lyapunov(const Flags& f) {
    Context c = make_context(f);
    auto b = build_system(c);
    if (!b.bf) throw ConfigError(b.name + " has no BF decomposition");
    fs::create_directories(c.out);
    const fs::path pair_path = f.pair.empty() ? c.out / "lyapunov.json" : fs::path(f.pair);
    if (f.action == "build") {
        const double radius = c.cfg.lyapunov.c.value_or(default_radius(b));
        auto pair = bundle_lyapunov(b, radius);
        write_text(pair_path, to_json(pair) + "\n");
        std::cout << to_json(pair) << "\n";
        return ok;
    }
    if (!fs::exists(pair_path)) throw ConfigError("no Lyapunov pair at " + pair_path.string());
    LyapunovPair pair;
    try {
        pair = lyapunov_pair_from_json(slurp(pair_path));
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    pair = mutated(pair, c.cfg.lyapunov.k_scale, c.cfg.lyapunov.alpha_scale);
    VerifyOptions vo;
    vo.f_k = b.bf->f_k;
    auto rep = verify_lyapunov(pair, assemble(*b.bf), b.spec, pair.c, 1, c.cfg.lyapunov.n_samples, c.cfg.lyapunov.z_max,
                               c.cfg.seed.value_or(7), vo);
    json r = parsed(to_json(rep));
    r["name"] = "lyapunov_verify";
    write_text(c.out / "report.json", json::array({r}).dump(2) + "\n");
    std::cout << r.dump(2) << "\n";
    return rep.pass ? ok : failed;
}

// report -----------------------------------------------------------------------------------------

int cmd_report(const Flags& f) {
    Context c = make_context(f);
    bool any = false, pass = true;
    for (const char* name : {"manifest.json", "manifest-diagnose.json"}) {
        fs::path p = c.out / name;
        if (!fs::exists(p)) continue;
        any = true;
        json m = json::parse(slurp(p));
        std::cout << name << ": " << m.value("command", "?") << " " << m.value("system", "?") << " status "
                  << m.value("status", "?") << " config " << m.value("config_hash", "?") << "\n";
        if (m.contains("oracle_error"))
            for (auto it = m["oracle_error"].begin(); it != m["oracle_error"].end(); ++it)
                std::cout << "  oracle error (" << it.key() << "): " << it.value().get<double>() << "\n";
        if (m.contains("error")) std::cout << "  error: " << m["error"]["message"].get<std::string>() << "\n";
    }
    fs::path rp = c.out / "report.json";
    if (fs::exists(rp)) {
        any = true;
        json r = json::parse(slurp(rp));
        for (const auto& e : r) {
            bool p = e.value("pass", true);
            pass = pass && p;
            std::cout << (p ? "PASS " : "FAIL ") << e.value("name", std::string("?"));
            if (e.contains("margin") && e["margin"].is_number()) std::cout << " margin " << e["margin"].get<double>();
            std::cout << "\n";
        }
    }
    if (!any) throw ConfigError("nothing to report in " + c.out.string());
    return pass ? ok : failed;
}

void common(CLI::App* app, Flags& f) {
    app->add_option("--config", f.config, "experiment config (JSON)");
    app->add_option("--seed", f.seed, "seed for stochastic stages");
    app->add_option("--out", f.out, "output directory");
    app->add_option("--method", f.method, "grid, regression or both")
        ->check(CLI::IsMember({"grid", "regression", "both"}));
    app->add_option("--system", f.system, "system name")->check(CLI::IsMember(system_names()));
    app->add_option("--theta", f.theta, "cooperation penalty");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quadratic BSDE systems: checks, solvers and diagnostics"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    Flags f;
    auto* check = app.add_subcommand("check", "run structural checks on a system");
    common(check, f);
    check->add_flag("--all", f.all, "run every applicable check");
    check->add_option("--spanning", f.spanning, "vectors such as \"e1,-e2,[1,1]\"");
    check->add_option("--dim", f.dim, "ambient dimension for --spanning");
    auto* solve = app.add_subcommand("solve", "solve a system and persist the field");
    common(solve, f);
    auto* diagnose = app.add_subcommand("diagnose", "run diagnostics on a persisted field");
    common(diagnose, f);
    diagnose->add_option("--field", f.field, "field file (default: OUT/field.bin)");
    auto* simulate = app.add_subcommand("simulate", "simulate forward paths");
    common(simulate, f);
    auto* lyap = app.add_subcommand("lyapunov", "build or verify a Lyapunov pair");
    common(lyap, f);
    lyap->add_option("action", f.action, "build or verify")->required()->check(CLI::IsMember({"build", "verify"}));
    lyap->add_option("--pair", f.pair, "pair file (default: OUT/lyapunov.json)");
    auto* report = app.add_subcommand("report", "summarise the outputs in OUT");
    common(report, f);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? ok : usage;
    }
    try {
        if (check->parsed()) return cmd_check(f);
        if (solve->parsed()) return cmd_solve(f);
        if (diagnose->parsed()) return cmd_diagnose(f);
        if (simulate->parsed()) return cmd_simulate(f);
        if (lyap->parsed()) return cmd_lyapunov(f);
        return cmd_report(f);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return usage;
    } catch (const RuntimeFailure& e) {
        std::cerr << e.what() << "\n";
        return runtime;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return runtime;
    } catch (const json::exception& e) {
        std::cerr << "malformed JSON: " << e.what() << "\n";
        return usage;
    }
}
