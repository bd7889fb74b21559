#include "doctest.h"

#include "qbsde/diagnostics.hpp"
#include "qbsde/error.hpp"
#include "qbsde/solver.hpp"
#include "qbsde/systems.hpp"

#include <cmath>

using namespace qbsde;

namespace {

SolutionField manual_field(std::function<double(double, double)> v, std::function<double(double, double)> w,
                           double lo, double hi, int n, int n_times = 3) {
    SolutionField f;
    f.method = SolveMethod::grid;
    f.grid.axes = {Axis{lo, hi, n}};
    for (int k = 0; k < n_times; ++k) f.times.push_back(double(k) / (n_times - 1));
    for (double t : f.times) {
        GridFunction V(f.grid, 1), W(f.grid, 1);
        for (long i = 0; i < f.grid.size(); ++i) {
            double x = f.grid.point(i)[0];
            V.set(i, Vec::Constant(1, v(t, x)));
            W.set(i, Vec::Constant(1, w(t, x)));
        }
        f.v.push_back(V);
        f.w.push_back(W);
    }
    return f;
}

Region region1(double lo, double hi, double t_lo = 0.0, double t_hi = 1.0) {
    Region r;
    r.lo = Vec::Constant(1, lo);
    r.hi = Vec::Constant(1, hi);
    r.t_lo = t_lo;
    r.t_hi = t_hi;
    return r;
}

GridConfig box(int d, double half, double dx) {
    GridConfig c;
    c.lo = Vec::Constant(d, -half);
    c.hi = Vec::Constant(d, half);
    c.dx = dx;
    return c;
}

TerminalData scalar_g(std::function<double(double)> fn) {
    TerminalData g;
    g.g = [fn](const Vec& x) { return Vec(Vec::Constant(1, fn(x[0]))); };
    return g;
}

Generator constant_driver(const Vec& K, int d) {
    return Generator{static_cast<int>(K.size()), d, 1.0, [K](double, const Vec&, const Vec&, const Mat&) { return K; },
                     false};
}

SystemBundle coop(double theta, double amp) {
    CoopGameData cd;
    cd.theta = theta;
    cd.h = [amp](int i, const Vec& x) { return amp * (i ? std::cos(x[0]) : std::sin(x[0])); };
    cd.h_bound = amp;
    cd.g.N = 2;
    cd.g.d = 1;
    cd.g.g = [amp](const Vec& x) {
        Vec v(2);
        v << amp * std::tanh(x[0]), amp * std::sin(x[0]);
        return v;
    };
    return coop_game(cd, brownian_spec(1, 1.0));
}

}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("Hoelder seminorm") {
    SUBCASE("identity field") {
        auto f = manual_field([](double, double x) { return x; }, [](double, double) { return 1.0; }, 0.0, 1.0, 21);
        auto h = holder_seminorm(f, 1.0, region1(0.0, 1.0), 0, 1);
        CHECK(h.exhaustive);
        CHECK(h.value == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(h.t1 == h.t2);
    }
    SUBCASE("constant field") {
        auto f = manual_field([](double, double) { return 3.0; }, [](double, double) { return 0.0; }, 0.0, 1.0, 21);
        CHECK(holder_seminorm(f, 0.5, region1(0.0, 1.0), 0, 1).value == 0.0);
    }
    SUBCASE("square root against brute force") {
        auto f = manual_field([](double, double x) { return std::sqrt(std::abs(x)); }, [](double, double) { return 0.0; },
                              -1.0, 1.0, 41);
        double brute = 0;
        for (std::size_t a = 0; a < f.times.size(); ++a)
            for (std::size_t b = 0; b < f.times.size(); ++b)
                for (long i = 0; i < 41; ++i)
                    for (long j = 0; j < 41; ++j) {
                        double xi = f.grid.point(i)[0], xj = f.grid.point(j)[0];
                        double dist = std::max(std::sqrt(std::abs(f.times[a] - f.times[b])), std::abs(xi - xj));
                        if (dist == 0) continue;
                        double dv = std::abs(f.v[a].at(i)[0] - f.v[b].at(j)[0]);
                        brute = std::max(brute, dv / std::sqrt(dist));
                    }
        auto h = holder_seminorm(f, 0.5, region1(-1.0, 1.0), 0, 1);
        CHECK(h.value == doctest::Approx(brute).epsilon(1e-12));
        CHECK(brute == doctest::Approx(1.0).epsilon(1e-12));
        auto sampled = holder_seminorm(f, 0.5, region1(-1.0, 1.0), 200, 2);
        CHECK_FALSE(sampled.exhaustive);
        CHECK(sampled.value <= h.value + 1e-15);
    }
    SUBCASE("empty region") {
        auto f = manual_field([](double, double x) { return x; }, [](double, double) { return 1.0; }, 0.0, 1.0, 21);
        CHECK_THROWS_AS(holder_seminorm(f, 1.0, region1(5.0, 6.0), 0, 1), Error);
    }
}

TEST_CASE("bmo norms of constant gradients") {
    auto spec = brownian_spec(1, 1.0);
    auto zero = manual_field([](double, double) { return 0.0; }, [](double, double) { return 0.0; }, -8, 8, 81);
    auto one = manual_field([](double, double x) { return x; }, [](double, double) { return 1.0; }, -8, 8, 81);
    auto r = region1(-1.0, 1.0);
    CHECK(bmo_norm(spec, zero, 0.3, r, 5, 200, 1).value == 0.0);
    auto e = bmo_norm(spec, one, 0.3, r, 5, 200, 1);
    CHECK(e.value == doctest::Approx(0.3).epsilon(1e-12));
    auto lad = bmo_ladder(spec, one, {0.4, 0.2, 0.1}, r, 5, 200, 1);
    REQUIRE(lad.estimates.size() == 3);
    CHECK(lad.estimates[2].value == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(lad.monotone);
}

TEST_CASE("bmo ladder decreases on the Cole-Hopf field") {
    auto spec = brownian_spec(1, 1.0);
    Generator f{1, 1, 1.0,
                [](double, const Vec&, const Vec&, const Mat& z) { return Vec(Vec::Constant(1, -0.5 * z.squaredNorm())); },
                false};
    auto field = solve_pde_grid(spec, f, scalar_g([](double x) { return std::tanh(x); }), box(1, 6, 0.05));
    auto lad = bmo_ladder(spec, field, {0.4, 0.2, 0.1, 0.05}, region1(-1.0, 1.0), 20, 400, 3);
    CHECK(lad.monotone);
    for (std::size_t i = 1; i < lad.estimates.size(); ++i) CHECK(lad.estimates[i].value < lad.estimates[i - 1].value);
}

TEST_CASE("bmo escape is a domain error") {
    auto spec = brownian_spec(1, 1.0);
    auto small = manual_field([](double, double x) { return x; }, [](double, double) { return 1.0; }, -1, 1, 21);
    try {
        bmo_norm(spec, small, 0.5, region1(-0.5, 0.5), 5, 400, 1);
        FAIL("expected domain error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::domain);
    }
}

TEST_CASE("Lyapunov submartingale test") {
    auto spec = brownian_spec(1, 1.0);
    SUBCASE("martingale field with the quadratic pair") {
        Generator zero{1, 1, 1.0, [](double, const Vec&, const Vec&, const Mat&) { return Vec(Vec::Zero(1)); }, false};
        auto field = solve_pde_grid(spec, zero, scalar_g([](double x) { return std::tanh(x); }), box(1, 6, 0.05));
        auto pair = quadratic_lyapunov(1.0, 1.0, 0.0, 1);
        auto rep = lyapunov_submartingale_test(spec, field, pair, {}, 4000, 5);
        CHECK(rep.pass);
        CHECK(rep.rungs.size() == 4);
    }
    SUBCASE("halved k fails") {
        const double K = 0.6;
        auto field = solve_pde_grid(spec, constant_driver(Vec::Constant(1, K), 1),
                                    scalar_g([](double) { return 0.0; }), box(1, 6, 0.1));
        auto pair = quadratic_lyapunov(K, 1.0, 0.0, 1);
        StateFn fk = [K](double, const Vec&) { return Vec(Vec::Constant(1, K)); };
        PathTestOptions opt;
        opt.tol = 1e-6;
        CHECK(lyapunov_submartingale_test(spec, field, pair, fk, 500, 6, opt).pass);
        auto bad = pair;
        bad.C1 *= 0.5;
        bad.k_const *= 0.5;
        auto rep = lyapunov_submartingale_test(spec, field, bad, fk, 500, 6, opt);
        CHECK_FALSE(rep.pass);
        CHECK(rep.margin < 0);
    }
    SUBCASE("values beyond c are a precondition error") {
        auto field = solve_pde_grid(spec, constant_driver(Vec::Constant(1, 2.0), 1),
                                    scalar_g([](double) { return 0.0; }), box(1, 4, 0.1));
        try {
            lyapunov_submartingale_test(spec, field, quadratic_lyapunov(1.0, 1.0, 0.0, 1), {}, 100, 1);
            FAIL("expected precondition error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::precondition);
        }
    }
    SUBCASE("cooperation game pair") {
        auto b = coop(0.25, 0.01);
        auto field = solve_pde_grid(b.spec, b.driver, b.terminal, box(1, 6, 0.1));
        double c = 0.5 * max_lyapunov_radius(b);
        auto pair = bundle_lyapunov(b, c);
        PathTestOptions opt;
        opt.transform = b.transform;
        auto rep = lyapunov_submartingale_test(b.spec, field, pair, b.bf->f_k, 2000, 7, opt);
        CHECK(rep.pass);
    }
}

TEST_CASE("a-priori bound test") {
    auto spec = brownian_spec(1, 1.0);
    SUBCASE("Jensen on a martingale field") {
        Generator zero{1, 1, 1.0, [](double, const Vec&, const Vec&, const Mat&) { return Vec(Vec::Zero(1)); }, false};
        auto field = solve_pde_grid(spec, zero, scalar_g([](double x) { return std::tanh(2 * x); }), box(1, 6, 0.05));
        ABCertificate cert;
        cert.directions = Mat(1, 2);
        cert.directions << 1.5, -0.7;
        CHECK(apriori_bound_test(spec, field, cert, 4000, 8).pass);
    }
    SUBCASE("equilibrium certificate and its sign flip") {
        auto spec2 = brownian_spec(2, 1.0);
        TerminalData g;
        g.N = 2;
        g.d = 2;
        g.g = [](const Vec& x) {
            Vec v(2);
            v << std::sin(2 * x[1]) + 0.3 * std::tanh(x[0]), -std::sin(2 * x[1]);
            return v;
        };
        auto b = equilibrium_system({0.5, 0.5}, g, spec2);
        auto field = solve_pde_grid(spec2, b.driver, g, box(2, 4, 0.1));
        CHECK(apriori_bound_test(spec2, field, *b.certificate, 4000, 9).pass);
        ABCertificate flipped = *b.certificate;
        flipped.directions.col(2) *= -1.0;
        auto rep = apriori_bound_test(spec2, field, flipped, 4000, 9);
        CHECK_FALSE(rep.pass);
    }
    SUBCASE("weak certificate of the cooperation game") {
        auto b = coop(0.25, 0.3);
        auto field = solve_pde_grid(b.spec, b.driver, b.terminal, box(1, 6, 0.05));
        CHECK(apriori_bound_test(b.spec, field, *b.certificate, 4000, 10).pass);
    }
}

TEST_CASE("Nash deviations") {
    auto b = coop(0.0, 0.3);
    auto field = solve_pde_grid(b.spec, b.driver, b.terminal, box(1, 6, 0.05));
    SUBCASE("zero deviation has zero gap") {
        auto rep = nash_deviation_test(*b.game, field, {Deviation{0, 0.0, Vec::Ones(1)}}, 2000, 11);
        REQUIRE(rep.rungs.size() == 1);
        CHECK(rep.rungs[0].value == 0.0);
    }
    SUBCASE("gaps grow with the deviation") {
        std::vector<Deviation> devs;
        for (double dl : {0.25, 0.5, 1.0}) devs.push_back(Deviation{0, dl, Vec::Ones(1)});
        auto rep = nash_deviation_test(*b.game, field, devs, 20000, 12);
        CHECK(rep.pass);
        for (std::size_t i = 1; i < rep.rungs.size(); ++i) CHECK(rep.rungs[i].value > rep.rungs[i - 1].value);
        // second-order expansion: the gap is about delta^2 T / 2
        CHECK(rep.rungs[2].value == doctest::Approx(0.5).epsilon(0.2));
    }
    SUBCASE("weights") {
        CHECK(effective_sample_size({1.0, 1.0, 1.0, 1.0}) == doctest::Approx(4.0));
        CHECK(effective_sample_size({1.0, 0.0, 0.0, 0.0}) == doctest::Approx(1.0));
    }
}

}  // TEST_SUITE
