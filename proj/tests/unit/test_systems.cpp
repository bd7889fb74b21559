#include "doctest.h"

#include "qbsde/error.hpp"
#include "qbsde/rng.hpp"
#include "qbsde/solver.hpp"
#include "qbsde/systems.hpp"

#include <cmath>
#include <random>

using namespace qbsde;

namespace {

TerminalData tdata(int N, int d, std::function<Vec(const Vec&)> g) {
    TerminalData t;
    t.N = N;
    t.d = d;
    t.g = std::move(g);
    return t;
}

Mat random_mat(std::mt19937_64& eng, int r, int c, double s = 1.0) {
    std::normal_distribution<double> nd;
    Mat m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = s * nd(eng);
    return m;
}

CoopGameData coop_data(double theta) {
    CoopGameData cd;
    cd.theta = theta;
    cd.h = [](int i, const Vec& x) { return 0.01 * (i ? std::cos(x[0]) : std::sin(x[0])); };
    cd.h_bound = 0.01;
    cd.g = tdata(2, 1, [](const Vec& x) {
        Vec v(2);
        v << 0.01 * std::tanh(x[0]), 0.01 * std::sin(x[0]);
        return v;
    });
    return cd;
}

RiskGameData risk_data() {
    RiskGameData rd;
    rd.h = [](int i, double, const Vec& x) { return 0.01 * (i ? std::cos(x[0]) : std::sin(x[0])); };
    rd.h_bound = 0.01;
    rd.g = tdata(2, 1, [](const Vec& x) {
        Vec v(2);
        v << 0.01 * std::tanh(x[0]), 0.01 * std::cos(x[0]);
        return v;
    });
    rd.box = 1.0;
    return rd;
}

}  // namespace

TEST_SUITE("systems") {

TEST_CASE("cooperation minimisers") {
    Mat p(2, 1);
    p << 1.0, 2.0;
    auto [mu0, nu0] = coop_minimizers(0.0, p);
    CHECK(mu0[0] == doctest::Approx(-1.0));
    CHECK(nu0[0] == doctest::Approx(-2.0));
    // theta = 1/2: mu = (theta p2 - p1) / (1 - theta^2)
    auto [mu, nu] = coop_minimizers(0.5, p);
    CHECK(mu[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(nu[0] == doctest::Approx((0.5 - 2.0) / 0.75));
    CHECK_THROWS_AS(coop_minimizers(1.0, p), Error);
    Mat q(2, 3);
    q << 1.0, 0.0, 0.0, 1.0, 0.0, 0.0;
    auto [mh, nh] = coop_minimizers(0.5, q);
    CHECK(mh[0] == doctest::Approx(-2.0 / 3.0));
    CHECK(mh.tail(2).norm() == 0.0);
    CHECK((mh - nh).norm() < 1e-15);

    std::mt19937_64 eng(21);
    std::normal_distribution<double> nd;
    for (double th : {-0.5, 0.0, 0.25, 0.5}) {
        for (int s = 0; s < 200; ++s) {
            Mat z = random_mat(eng, 2, 2);
            auto [m, n] = coop_minimizers(th, z);
            Vec dm(2), dn(2);
            dm << nd(eng), nd(eng);
            dn << nd(eng), nd(eng);
            dm *= 0.1;
            dn *= 0.1;
            // each player's own control is a best response
            CHECK(coop_lagrangian(0, th, m + dm, n, z) >= coop_lagrangian(0, th, m, n, z) - 1e-12);
            CHECK(coop_lagrangian(1, th, m, n + dn, z) >= coop_lagrangian(1, th, m, n, z) - 1e-12);
        }
    }
    CHECK(coop_in_range(0.25));
    CHECK(coop_in_range(2.0));
    CHECK_FALSE(coop_in_range(0.75));
    auto b = coop_game(coop_data(0.75), brownian_spec(1, 1.0));
    CHECK_FALSE(b.guarantee);
    CHECK_FALSE(b.note.empty());
}

TEST_CASE("risk game saddle point on a control grid") {
    auto rd = risk_data();
    std::mt19937_64 eng(22);
    for (int s = 0; s < 50; ++s) {
        Mat z = random_mat(eng, 2, 1, 1.5);
        Vec x = Vec::Constant(1, 0.3 * s - 7.0);
        auto [mu, nu] = risk_minimizers(rd, z);
        double h0 = risk_hamiltonian(rd, 0, 0.2, x, z, mu, nu);
        double h1 = risk_hamiltonian(rd, 1, 0.2, x, z, mu, nu);
        for (int k = 0; k <= 200; ++k) {
            Vec u = Vec::Constant(1, -1.0 + 0.01 * k);
            CHECK(risk_hamiltonian(rd, 0, 0.2, x, z, u, nu) >= h0 - 1e-12);
            CHECK(risk_hamiltonian(rd, 1, 0.2, x, z, mu, u) >= h1 - 1e-12);
        }
    }
    auto [m0, n0] = risk_minimizers(rd, Mat::Zero(2, 1));
    CHECK(m0.norm() + n0.norm() == 0.0);
    Vec x1 = Vec::Constant(1, 0.7);
    CHECK(risk_hamiltonian(rd, 1, 0.0, x1, Mat::Zero(2, 1), m0, n0) == rd.h(1, 0.0, x1));
    Vec u(2);
    u << 3.0, -0.4;
    Vec c = clip_box(u, 1.0);
    CHECK(c[0] == 1.0);
    CHECK(c[1] == -0.4);
}

TEST_CASE("equilibrium with one agent is the scalar system") {
    auto spec = brownian_spec(1, 1.0);
    auto g = tdata(1, 1, [](const Vec& x) { return Vec(Vec::Constant(1, std::tanh(x[0]))); });
    auto eq = equilibrium_system({1.0}, g, spec);
    auto sc = scalar_unbounded(nullptr, g, spec, -1.0);
    std::mt19937_64 eng(23);
    for (int s = 0; s < 1000; ++s) {
        Mat z = random_mat(eng, 1, 1, 3.0);
        Vec x = random_mat(eng, 1, 1);
        Vec y = Vec::Zero(1);
        CHECK(eq.driver.f(0.3, x, y, z)[0] == sc.driver.f(0.3, x, y, z)[0]);
    }
    // exp(-Y) is driftless: f(z) + |z|^2 / 2 = 0
    for (double zz : {-3.0, 0.1, 2.0}) {
        Mat z = Mat::Constant(1, 1, zz);
        CHECK(eq.driver.f(0.0, Vec::Zero(1), Vec::Zero(1), z)[0] + 0.5 * zz * zz == 0.0);
    }
    REQUIRE(eq.oracle);
    REQUIRE(sc.oracle);
    Vec x0 = Vec::Constant(1, 0.4);
    CHECK(eq.oracle(0.0, x0)[0] == sc.oracle(0.0, x0)[0]);
    CHECK_THROWS_AS(equilibrium_system({0.6, 0.6}, tdata(2, 1, g.g), spec), Error);
}

TEST_CASE("equilibrium driver in BF coordinates") {
    for (int d : {1, 2}) {
        auto spec = brownian_spec(d, 1.0);
        auto g = tdata(3, d, [](const Vec& x) { return Vec(Vec::Constant(3, std::sin(x[0]))); });
        auto b = equilibrium_system({0.2, 0.3, 0.5}, g, spec);
        REQUIRE(b.bf);
        std::mt19937_64 eng(24 + d);
        for (int s = 0; s < 200; ++s) {
            Mat z = random_mat(eng, 3, d);
            Vec x = random_mat(eng, d, 1);
            Vec fb = b.transform * b.driver.f(0.5, x, Vec::Zero(3), z);
            Mat zb = b.transform * z;
            Vec got = b.bf->value(0.5, x, zb);
            CHECK((got - fb).norm() < 1e-10 * (1.0 + fb.norm()));
        }
        CHECK(certify(b, 2000, 3).pass);
    }
}

TEST_CASE("Darling charts") {
    auto flat = check_geodesic_convexity(flat_chart(2), 500, 1);
    CHECK(flat.pass);
    CHECK(flat.symmetric);
    Vec center(2);
    center << 0.0, 1.0;
    auto hyp = hyperbolic_chart(center, 0.5);
    auto chk = check_geodesic_convexity(hyp, 2000, 2, 0.5, 1e-4);
    CHECK(chk.pass);
    CHECK(chk.symmetric);
    // d^2/2 has covariant Hessian >= the metric I / y_2^2 in negative curvature
    std::mt19937_64 eng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int s = 0; s < 500; ++s) {
        Vec y(2);
        y << -1.0 + 2.0 * u(eng), 0.3 + 3.0 * u(eng);
        if (hyp.phi(y) > 0.5) continue;
        Mat H = covariant_hessian(hyp, y) * y[1] * y[1];
        Mat Hs = 0.5 * (H + H.transpose());
        CHECK(Eigen::SelfAdjointEigenSolver<Mat>(Hs).eigenvalues().minCoeff() >= 1.0 - 1e-3);
    }

    Vec a(2), b(2);
    a << 0.0, 1.0;
    b << 0.0, std::exp(1.0);
    CHECK(hyperbolic_distance(a, b) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(hyperbolic_distance(a, Vec::Zero(2)), Error);

    auto spec = brownian_spec(1, 1.0);
    auto inside = tdata(2, 1, [](const Vec& x) {
        Vec v(2);
        v << 0.4 * std::tanh(x[0]), 1.0 + 0.3 * std::sin(x[0]);
        return v;
    });
    auto sys = darling_system(hyp, inside, spec);
    CHECK(sys.driver.depends_on_y);
    auto outside = tdata(2, 1, [](const Vec& x) {
        Vec v(2);
        v << 2.0 * std::tanh(x[0]), 1.0;
        return v;
    });
    try {
        darling_system(hyp, outside, spec);
        FAIL("expected precondition error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::precondition);
    }
    auto fsys = darling_system(flat_chart(2), outside, spec);
    CHECK(fsys.oracle);
    CHECK(fsys.driver.f(0.0, Vec::Zero(1), Vec::Ones(2), Mat::Ones(2, 1)).norm() == 0.0);
}

TEST_CASE("every bundle certifies") {
    auto spec1 = brownian_spec(1, 1.0);
    auto g1 = tdata(1, 1, [](const Vec& x) { return Vec(Vec::Constant(1, std::tanh(x[0]))); });
    auto g2 = tdata(2, 2, [](const Vec& x) {
        Vec v(2);
        v << 0.01 * std::sin(x[0]), 0.01 * std::cos(x[1]);
        return v;
    });
    std::vector<SystemBundle> all = {
        equilibrium_system({0.5, 0.5}, g2, brownian_spec(2, 1.0)),
        coop_game(coop_data(0.25), spec1),
        coop_game(coop_data(0.0), spec1),
        coop_game(coop_data(2.0), spec1),
        risk_sensitive_game(risk_data(), spec1),
        scalar_unbounded(nullptr, g1, spec1, -1.0),
    };
    for (const auto& b : all) {
        auto r = certify(b);
        INFO(b.name);
        CHECK(r.pass);
        CHECK(r.failures.empty());
        double c = max_lyapunov_radius(b);
        CHECK(c > 0);
        CHECK_NOTHROW(bundle_lyapunov(b, 0.5 * c));
    }
    CHECK(system_names().size() == 5);
}

TEST_CASE("unbounded scalar coefficient") {
    auto spec = brownian_spec(1, 1.0);
    auto g = tdata(1, 1, [](const Vec& x) { return Vec(Vec::Constant(1, std::tanh(x[0]))); });
    auto b = scalar_unbounded([](const Vec& x) { return x[0]; }, g, spec);
    REQUIRE(b.bf);
    CHECK_FALSE(b.certificate);
    CHECK_FALSE(b.oracle);
    CHECK_FALSE(b.note.empty());
    // local constant on the ball of radius n is about n / 2
    for (int n : {1, 4, 16}) {
        double C = b.bf->constants(n).C;
        CHECK(C >= 0.5 * n);
        CHECK(C <= 0.5 * n * 1.06);
    }
    CHECK_THROWS_AS(scalar_unbounded(nullptr, g, spec), Error);
}

TEST_CASE("Cole-Hopf oracle") {
    auto g = tdata(1, 1, [](const Vec& x) { return Vec(Vec::Constant(1, x[0])); });
    auto o = cole_hopf_oracle(g, 2.0, 1.0);
    // (1/c) log E exp(c (x + W_T)) = x + c T / 2
    CHECK(o(0.0, Vec::Constant(1, 0.3))[0] == doctest::Approx(1.3).epsilon(1e-10));
    CHECK(o(0.5, Vec::Constant(1, 0.3))[0] == doctest::Approx(0.8).epsilon(1e-10));
    CHECK(o(1.0, Vec::Constant(1, 0.3))[0] == doctest::Approx(0.3));
    CHECK(cole_hopf_oracle(g, 0.0, 1.0)(0.0, Vec::Constant(1, 0.3))[0] == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("swap-symmetric equilibrium solves to equal components") {
    auto spec = brownian_spec(2, 1.0);
    auto g = tdata(2, 2, [](const Vec& x) { return Vec(Vec::Constant(2, 0.5 * std::sin(x[0]) * std::cos(x[1]))); });
    auto b = equilibrium_system({0.5, 0.5}, g, spec);
    GridConfig gc;
    gc.lo = Vec::Constant(2, -4.0);
    gc.hi = Vec::Constant(2, 4.0);
    gc.dx = 0.2;
    auto field = solve_pde_grid(spec, b.driver, g, gc);
    double worst = 0.0;
    for (const auto& v : field.v)
        for (long i = 0; i < v.grid.size(); ++i) worst = std::max(worst, std::abs(v.at(i)[0] - v.at(i)[1]));
    CHECK(worst <= 1e-12);
}

TEST_CASE("unbounded coefficient keeps the measure-change bound") {
    auto spec = brownian_spec(1, 1.0);
    auto g = tdata(1, 1, [](const Vec& x) { return Vec(Vec::Constant(1, std::tanh(x[0]))); });
    auto b = scalar_unbounded([](const Vec& x) { return x[0]; }, g, spec);
    GridConfig gc;
    gc.lo = Vec::Constant(1, -6.0);
    gc.hi = Vec::Constant(1, 6.0);
    gc.dx = 0.05;
    auto field = solve_pde_grid(spec, b.driver, g, gc);
    double sup = 0.0;
    for (const auto& v : field.v)
        for (long i = 0; i < v.grid.size(); ++i) sup = std::max(sup, std::abs(v.at(i)[0]));
    CHECK(sup <= 1.0 + 1e-2);
}

TEST_CASE("cooperation game in transformed coordinates") {
    auto spec = brownian_spec(1, 1.0);
    CoopGameData cd = coop_data(0.25);
    cd.h = [](int i, const Vec& x) { return 0.3 * (i ? std::cos(x[0]) : std::sin(x[0])); };
    cd.g = tdata(2, 1, [](const Vec& x) {
        Vec v(2);
        v << 0.5 * std::tanh(x[0]), 0.3 * std::sin(x[0]);
        return v;
    });
    auto b = coop_game(cd, spec);
    GridConfig gc;
    gc.lo = Vec::Constant(1, -6.0);
    gc.hi = Vec::Constant(1, 6.0);
    gc.dx = 0.05;
    auto raw = solve_pde_grid(spec, b.driver, b.terminal, gc);
    auto tg = transform_terminal(b.terminal, b.transform);
    auto bar = solve_pde_grid(spec, assemble(*b.bf), tg, gc);
    REQUIRE(raw.v.size() == bar.v.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < raw.v.size(); ++k)
        for (long i = 0; i < raw.grid.size(); ++i)
            worst = std::max(worst, (b.transform * raw.v[k].at(i) - bar.v[k].at(i)).cwiseAbs().maxCoeff());
    CHECK(worst <= 1e-3);
}

}  // TEST_SUITE
