#include "qbsde/registry.hpp"

#include "qbsde/error.hpp"

#include <cmath>

namespace qbsde {

namespace {

TerminalData terminal(int N, int d, std::function<Vec(const Vec&)> g, double sup) {
    TerminalData t;
    t.N = N;
    t.d = d;
    t.g = std::move(g);
    t.sup_bound = sup;
    return t;
}

TerminalData tanh_terminal(int d) {
    return terminal(1, d, [](const Vec& x) { return Vec(Vec::Constant(1, std::tanh(x[0]))); }, 1.0);
}

SystemBundle equilibrium(const SystemOptions& o) {
    const int N = static_cast<int>(o.alphas.size());
    const int d = o.d;
    if (d != 1 && d != 2) fail(ErrorKind::input, "equilibrium needs d = 1 or d = 2");
    TerminalData g;
    if (o.terminal == "tanh") {
        if (N != 1) fail(ErrorKind::input, "terminal tanh needs a single agent");
        g = tanh_terminal(d);
    } else {
        const double a = o.amplitude;
        g = terminal(N, d, [a, N, d](const Vec& x) {
            Vec v(N);
            for (int i = 0; i < N; ++i) v[i] = a * std::sin(x[0] + 0.5 * i) * (d == 2 ? std::cos(x[1]) : 1.0);
            return v;
        }, a);
    }
    return equilibrium_system(o.alphas, g, brownian_spec(d, o.T));
}

ManifoldChart chart_for(const SystemOptions& o) {
    if (o.chart == "flat") return flat_chart(2);
    if (o.chart != "hyperbolic") fail(ErrorKind::input, "unknown chart " + o.chart);
    Vec center(2);
    center << 0.0, 1.0;
    return hyperbolic_chart(center, 0.5);
}

SystemBundle darling(const SystemOptions& o) {
    auto g = terminal(2, 1, [](const Vec& x) {
        Vec v(2);
        v << 0.4 * std::tanh(x[0]), 1.0 + 0.3 * std::sin(x[0]);
        return v;
    }, 1.3);
    return darling_system(chart_for(o), g, brownian_spec(1, o.T));
}

SystemBundle coop(const SystemOptions& o) {
    const double a = o.amplitude;
    CoopGameData cd;
    cd.theta = o.theta;
    cd.h = [a](int i, const Vec& x) { return a * (i ? std::cos(x[0]) : std::sin(x[0])); };
    cd.h_bound = a;
    cd.g = terminal(2, 1, [a](const Vec& x) {
        Vec v(2);
        v << a * std::tanh(x[0]), a * std::sin(x[0]);
        return v;
    }, a);
    return coop_game(cd, brownian_spec(1, o.T));
}

SystemBundle risk(const SystemOptions& o) {
    const double a = o.amplitude;
    RiskGameData rd;
    rd.h = [a](int i, double, const Vec& x) { return a * (i ? std::cos(x[0]) : std::sin(x[0])); };
    rd.h_bound = a;
    rd.g = terminal(2, 1, [a](const Vec& x) {
        Vec v(2);
        v << a * std::tanh(x[0]), a * std::cos(x[0]);
        return v;
    }, a);
    rd.box = o.box;
    return risk_sensitive_game(rd, brownian_spec(1, o.T));
}

SystemBundle scalar(const SystemOptions& o) {
    auto spec = brownian_spec(1, o.T);
    auto g = o.terminal == "zero" ? terminal(1, 1, [](const Vec&) { return Vec(Vec::Zero(1)); }, 0.0) : tanh_terminal(1);
    SystemBundle b;
    if (o.coefficient == "constant")
        b = scalar_unbounded(nullptr, g, spec, o.constant);
    else if (o.coefficient == "linear")
        b = scalar_unbounded([](const Vec& x) { return x[0]; }, g, spec);
    else
        fail(ErrorKind::input, "unknown scalar coefficient " + o.coefficient);
    if (o.drift != 0.0) {
        const double K = o.drift;
        auto f = b.driver.f;
        b.driver.f = [f, K](double t, const Vec& x, const Vec& y, const Mat& z) {
            Vec v = f(t, x, y, z);
            v[0] += K;
            return v;
        };
        b.bf->f_k = [K](double, const Vec&) { return Vec(Vec::Constant(1, K)); };
        auto cons = b.bf->constants;
        b.bf->constants = [cons](int n) {
            BFConstants c = cons(n);
            c.q = 3.0;
            return c;
        };
        b.oracle = nullptr;
        if (b.certificate) {
            const double l = std::abs(K) * b.certificate->directions.cwiseAbs().maxCoeff();
            b.certificate->l = [l](double) { return l; };
        }
    }
    return b;
}

}  // namespace

SystemBundle make_system(const SystemOptions& opt) {
    if (opt.terminal != "default" && opt.terminal != "tanh" && opt.terminal != "zero") fail(ErrorKind::input, "unknown terminal " + opt.terminal);
    if (opt.name == "equilibrium") return equilibrium(opt);
    if (opt.name == "darling") return darling(opt);
    if (opt.name == "coop-game") return coop(opt);
    if (opt.name == "risk-game") return risk(opt);
    if (opt.name == "scalar") return scalar(opt);
    fail(ErrorKind::input, "unknown system " + opt.name);
}

std::optional<ManifoldChart> system_chart(const SystemOptions& opt) {
    if (opt.name != "darling") return std::nullopt;
    return chart_for(opt);
}

std::vector<Deviation> shipped_deviations(const SystemBundle& b) {
    if (!b.game) fail(ErrorKind::input, b.name + " is not a game");
    const int d = b.game->d;
    std::vector<double> sizes = b.game->exponential ? std::vector<double>{0.5, 1.0, 2.0}
                                                    : std::vector<double>{0.25, 0.5, 1.0};
    std::vector<Deviation> out;
    for (int player : {0, 1})
        for (double sign : {1.0, -1.0})
            for (double s : sizes) {
                Vec dir = Vec::Zero(d);
                dir[0] = sign;
                out.push_back(Deviation{player, s, dir});
            }
    return out;
}

}  // namespace qbsde
