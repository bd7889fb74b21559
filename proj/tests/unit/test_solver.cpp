#include "doctest.h"

#include "qbsde/error.hpp"
#include "qbsde/paths.hpp"
#include "qbsde/solver.hpp"
#include "qbsde/systems.hpp"

#include <cmath>
#include <sstream>

using namespace qbsde;

namespace {

TerminalData scalar_g(std::function<double(double)> fn) {
    TerminalData g;
    g.g = [fn](const Vec& x) { return Vec(Vec::Constant(1, fn(x[0]))); };
    return g;
}

Generator zero_driver(int N, int d) {
    return Generator{N, d, 1.0, [N](double, const Vec&, const Vec&, const Mat&) { return Vec(Vec::Zero(N)); }, false};
}

Generator cole_hopf_driver() {
    return Generator{1, 1, 1.0,
                     [](double, const Vec&, const Vec&, const Mat& z) { return Vec(Vec::Constant(1, -0.5 * z.squaredNorm())); },
                     false};
}

GridConfig box1(double lo, double hi, double dx) {
    GridConfig c;
    c.lo = Vec::Constant(1, lo);
    c.hi = Vec::Constant(1, hi);
    c.dx = dx;
    return c;
}

double max_error(const SolutionField& f, const OracleFn& oracle, double xlo, double xhi, int n = 61) {
    double e = 0;
    for (int i = 0; i < n; ++i) {
        Vec x = Vec::Constant(1, xlo + (xhi - xlo) * i / (n - 1));
        e = std::max(e, std::abs(evaluate_solution(f, 0.0, x).first[0] - oracle(0.0, x)[0]));
    }
    return e;
}

// Field on times {0, 1} and one axis, filled from fn(t, x).
SolutionField manual_field(std::function<double(double, double)> fn, double dx) {
    SolutionField f;
    f.method = SolveMethod::grid;
    f.grid.axes = {Axis{-1.0, 1.0, static_cast<int>(std::lround(2.0 / dx)) + 1}};
    f.times = {0.0, 1.0};
    for (double t : f.times) {
        GridFunction v(f.grid, 1), w(f.grid, 1);
        for (long i = 0; i < f.grid.size(); ++i) {
            double x = f.grid.point(i)[0];
            v.set(i, Vec::Constant(1, fn(t, x)));
            w.set(i, Vec::Constant(1, (fn(t, x + 1e-6) - fn(t, x - 1e-6)) / 2e-6));
        }
        f.v.push_back(v);
        f.w.push_back(w);
    }
    return f;
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("linear terminal data is reproduced exactly") {
    auto spec = DiffusionSpec::brownian(1, 1.0);
    auto f = solve_pde_grid(spec, zero_driver(1, 1), scalar_g([](double x) { return x; }), box1(-2, 2, 0.1));
    for (std::size_t k = 0; k < f.times.size(); ++k)
        for (long i = 0; i < f.grid.size(); ++i) {
            CHECK(std::abs(f.v[k].at(i)[0] - f.grid.point(i)[0]) < 1e-10);
            CHECK(std::abs(f.w[k].at(i)[0] - 1.0) < 1e-10);
        }
}

TEST_CASE("Cole-Hopf grid accuracy and refinement") {
    auto spec = DiffusionSpec::brownian(1, 1.0);
    auto g = scalar_g([](double x) { return std::tanh(x); });
    auto oracle = cole_hopf_oracle(g, -1.0, 1.0);
    auto coarse = solve_pde_grid(spec, cole_hopf_driver(), g, box1(-6, 6, 0.08));
    GridConfig fine_cfg = box1(-6, 6, 0.08 / std::sqrt(2.0));
    auto fine = solve_pde_grid(spec, cole_hopf_driver(), g, fine_cfg);
    double e1 = max_error(coarse, oracle, -3, 3), e2 = max_error(fine, oracle, -3, 3);
    CHECK(e1 < 1e-2);
    CHECK(e2 < 0.75 * e1);
    // terminal exactness
    for (long i = 0; i < coarse.grid.size(); ++i)
        CHECK(coarse.v.back().at(i)[0] == std::tanh(coarse.grid.point(i)[0]));
}

TEST_CASE("decoupled copy matches the scalar run bit for bit") {
    auto spec = DiffusionSpec::brownian(1, 1.0);
    auto g = scalar_g([](double x) { return std::tanh(x); });
    TerminalData g2;
    g2.N = 2;
    g2.g = [](const Vec& x) { return Vec(Vec::Constant(2, std::tanh(x[0]))); };
    Generator f2{2, 1, 1.0,
                 [](double, const Vec&, const Vec&, const Mat& z) { return Vec(-0.5 * z.rowwise().squaredNorm()); },
                 false};
    auto a = solve_pde_grid(spec, cole_hopf_driver(), g, box1(-4, 4, 0.1));
    auto b = solve_pde_grid(spec, f2, g2, box1(-4, 4, 0.1));
    REQUIRE(a.times == b.times);
    for (std::size_t k = 0; k < a.times.size(); ++k)
        for (long i = 0; i < a.grid.size(); ++i) {
            REQUIRE(b.v[k].at(i)[0] == a.v[k].at(i)[0]);
            REQUIRE(b.v[k].at(i)[1] == a.v[k].at(i)[0]);
        }
}

TEST_CASE("CFL violation is a config error") {
    auto cfg = box1(-2, 2, 0.1);
    cfg.dt = 0.01;
    try {
        solve_pde_grid(DiffusionSpec::brownian(1, 1.0), zero_driver(1, 1), scalar_g([](double x) { return x; }), cfg);
        FAIL("expected config error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::config);
        CHECK(std::string(e.what()).find("CFL") != std::string::npos);
    }
}

TEST_CASE("comparison in one dimension") {
    auto spec = DiffusionSpec::brownian(1, 1.0);
    auto lo = solve_pde_grid(spec, zero_driver(1, 1), scalar_g([](double x) { return std::sin(x); }), box1(-3, 3, 0.1));
    auto hi = solve_pde_grid(spec, zero_driver(1, 1), scalar_g([](double x) { return std::sin(x) + 0.1 * std::exp(-x * x); }),
                             box1(-3, 3, 0.1));
    for (std::size_t k = 0; k < lo.times.size(); ++k)
        for (long i = 0; i < lo.grid.size(); ++i) CHECK(lo.v[k].at(i)[0] <= hi.v[k].at(i)[0]);
}

TEST_CASE("two-dimensional heat equation") {
    auto spec = DiffusionSpec::brownian(2, 0.5);
    TerminalData g;
    g.d = 2;
    g.g = [](const Vec& x) { return Vec(Vec::Constant(1, std::cos(x[0]) * std::cos(x[1]))); };
    GridConfig cfg;
    cfg.lo = Vec::Constant(2, -4.0);
    cfg.hi = Vec::Constant(2, 4.0);
    cfg.dx = 0.1;
    auto f = solve_pde_grid(spec, zero_driver(1, 2), g, cfg);
    // E cos(x + W) = cos(x) exp(-tau/2) per axis
    double exact = std::exp(-0.5);
    CHECK(std::abs(evaluate_solution(f, 0.0, Vec::Zero(2)).first[0] - exact) < 2e-3);
}

TEST_CASE("regression on a martingale") {
    auto spec = DiffusionSpec::brownian(1, 1.0);
    RegressionConfig cfg;
    cfg.n_paths = 20000;
    cfg.n_steps = 20;
    cfg.degree = 3;
    auto f = solve_regression_mc(spec, zero_driver(1, 1), scalar_g([](double x) { return x; }), cfg, 3);
    auto [y, z] = evaluate_solution(f, 0.0, Vec::Zero(1));
    CHECK(std::abs(y[0]) < 3.0 / std::sqrt(20000.0));
    CHECK(std::abs(z(0, 0) - 1.0) < 0.05);
}

TEST_CASE("regression against a Feynman-Kac oracle") {
    auto spec = DiffusionSpec::brownian(1, 1.0);
    Generator F{1, 1, 1.0,
                [](double t, const Vec& x, const Vec&, const Mat&) { return Vec(Vec::Constant(1, std::sin(x[0]) + t)); },
                false};
    auto g = scalar_g([](double x) { return std::cos(x); });
    RegressionConfig cfg;
    cfg.n_paths = 40000;
    cfg.n_steps = 40;
    cfg.degree = 4;
    auto field = solve_regression_mc(spec, F, g, cfg, 5);
    double est = evaluate_solution(field, 0.0, Vec::Zero(1)).first[0];

    // plain MC with a fresh seed, same time grid
    const int n = 40000, K = 40;
    const double dt = 1.0 / K;
    auto b = simulate_paths(spec, 0.0, Vec::Zero(1), dt, K, n, 991);
    double s = 0, s2 = 0;
    for (int p = 0; p < n; ++p) {
        double acc = std::cos(b.x(p, K, 0));
        for (int k = 0; k < K; ++k) acc += (std::sin(b.x(p, k, 0)) + k * dt) * dt;
        s += acc;
        s2 += acc * acc;
    }
    double m = s / n, se = std::sqrt((s2 / n - m * m) / n);
    CHECK(std::abs(est - m) < 3.0 * std::sqrt(2.0) * se + 1e-3);
}

TEST_CASE("regression solver contracts") {
    auto spec = DiffusionSpec::brownian(1, 1.0);
    auto g = scalar_g([](double x) { return std::tanh(x); });
    RegressionConfig cfg;
    cfg.n_paths = 5000;
    cfg.n_steps = 10;
    cfg.degree = 3;
    SUBCASE("determinism") {
        auto a = solve_regression_mc(spec, cole_hopf_driver(), g, cfg, 17);
        auto b = solve_regression_mc(spec, cole_hopf_driver(), g, cfg, 17);
        std::stringstream sa, sb;
        write_field(a, sa);
        write_field(b, sb);
        CHECK(sa.str() == sb.str());
    }
    SUBCASE("inactive truncation") {
        cfg.truncation = 10.0;
        auto a = solve_regression_mc(spec, cole_hopf_driver(), g, cfg, 17);
        CHECK(a.info.sup_z < 10.0);
        cfg.truncation = 100.0;
        auto b = solve_regression_mc(spec, cole_hopf_driver(), g, cfg, 17);
        double ya = evaluate_solution(a, 0.0, Vec::Zero(1)).first[0];
        double yb = evaluate_solution(b, 0.0, Vec::Zero(1)).first[0];
        CHECK(std::abs(ya - yb) < 1e-12);
    }
    SUBCASE("too few paths for the basis") {
        cfg.n_paths = 30;
        cfg.degree = 4;
        CHECK_THROWS_AS(solve_regression_mc(spec, cole_hopf_driver(), g, cfg, 1), Error);
    }
    SUBCASE("terminal exactness") {
        auto a = solve_regression_mc(spec, zero_driver(1, 1), scalar_g([](double x) { return x * x; }), cfg, 2);
        for (double x : {-1.0, 0.0, 0.7})
            if (a.in_domain(1.0, Vec::Constant(1, x)))
                CHECK(evaluate_solution(a, 1.0, Vec::Constant(1, x)).first[0] == doctest::Approx(x * x).epsilon(1e-9));
    }
}

TEST_CASE("grid and regression agree on the Cole-Hopf problem") {
    auto spec = DiffusionSpec::brownian(1, 1.0);
    auto g = scalar_g([](double x) { return std::tanh(x); });
    auto grid = solve_pde_grid(spec, cole_hopf_driver(), g, box1(-6, 6, 0.05));
    RegressionConfig cfg;
    cfg.n_paths = 60000;
    cfg.n_steps = 25;
    cfg.degree = 6;
    cfg.init_spread = 1.0;
    auto reg = solve_regression_mc(spec, cole_hopf_driver(), g, cfg, 23);
    Region r;
    r.lo = Vec::Constant(1, -0.75);
    r.hi = Vec::Constant(1, 0.75);
    r.t_lo = 0.0;
    r.t_hi = 0.5;
    auto rep = cross_validate(grid, reg, r);
    CHECK(rep.n_points > 0);
    CHECK(rep.sup_v <= 3e-2);
}

TEST_CASE("interpolation") {
    SUBCASE("nodes and linear fields") {
        auto f = manual_field([](double t, double x) { return 2 * x - t; }, 0.1);
        for (long i = 0; i < f.grid.size(); ++i)
            CHECK(evaluate_solution(f, 0.0, f.grid.point(i)).first[0] == f.v[0].at(i)[0]);
        CHECK(evaluate_solution(f, 0.5, Vec::Constant(1, 0.05)).first[0] == doctest::Approx(-0.4).epsilon(1e-14));
    }
    SUBCASE("quadratic remainder") {
        const double dx = 0.1;
        auto f = manual_field([](double, double x) { return x * x; }, dx);
        double worst = 0;
        for (int i = 0; i < 400; ++i) {
            double x = -1.0 + 2.0 * (i + 0.37) / 400;
            worst = std::max(worst, std::abs(evaluate_solution(f, 0.3, Vec::Constant(1, x)).first[0] - x * x));
        }
        CHECK(worst <= 0.25 * dx * dx * 2.0 + 1e-14);
    }
    SUBCASE("outside the domain") {
        auto f = manual_field([](double, double x) { return x; }, 0.1);
        try {
            evaluate_solution(f, 0.0, Vec::Constant(1, 3.0));
            FAIL("expected domain error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::domain);
        }
    }
}

TEST_CASE("cross validation") {
    auto spec = DiffusionSpec::brownian(1, 1.0);
    auto g = scalar_g([](double x) { return std::tanh(x); });
    auto ref = solve_pde_grid(spec, cole_hopf_driver(), g, box1(-6, 6, 0.025));
    auto c1 = solve_pde_grid(spec, cole_hopf_driver(), g, box1(-6, 6, 0.2));
    auto c2 = solve_pde_grid(spec, cole_hopf_driver(), g, box1(-6, 6, 0.1));
    Region r;
    r.lo = Vec::Constant(1, -3.0);
    r.hi = Vec::Constant(1, 3.0);
    r.t_hi = 1.0;
    CHECK(cross_validate(ref, ref, r).sup_v == 0.0);
    CHECK(cross_validate(c2, ref, r).sup_v < cross_validate(c1, ref, r).sup_v);
    Region away = r;
    away.lo = Vec::Constant(1, 10.0);
    away.hi = Vec::Constant(1, 11.0);
    CHECK_THROWS_AS(cross_validate(ref, c1, away), Error);
}

TEST_CASE("field persistence") {
    auto spec = DiffusionSpec::brownian(1, 1.0);
    auto f = solve_pde_grid(spec, cole_hopf_driver(), scalar_g([](double x) { return std::tanh(x); }), box1(-2, 2, 0.1));
    std::stringstream ss;
    write_field(f, ss);
    auto g = read_field(ss);
    CHECK(g.times == f.times);
    CHECK(g.v.back().values == f.v.back().values);
    CHECK(g.w.front().values == f.w.front().values);
    std::stringstream csv;
    write_field_csv(f, csv, {0});
    std::string header;
    std::getline(csv, header);
    CHECK(header.find("v_1") != std::string::npos);
    std::stringstream bad("nope");
    CHECK_THROWS_AS(read_field(bad), Error);
}

}  // TEST_SUITE
