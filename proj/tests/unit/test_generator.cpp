#include "doctest.h"

#include "qbsde/error.hpp"
#include "qbsde/generator.hpp"
#include "qbsde/rng.hpp"
#include "qbsde/systems.hpp"

#include <cmath>

using namespace qbsde;

namespace {

Mat random_z(std::mt19937_64& eng, int N, int d, double scale = 2.0) {
    std::normal_distribution<double> n01;
    Mat z(N, d);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < d; ++j) z(i, j) = scale * n01(eng);
    return z;
}

GeneratorBF zero_bf(int N, int d) {
    GeneratorBF bf;
    bf.N = N;
    bf.d = d;
    bf.constants = [](int) { return BFConstants{1.0, {}, 3.0, 0.0}; };
    return bf;
}

TerminalData small_g2(int d) {
    TerminalData g;
    g.N = 2;
    g.d = d;
    g.g = [](const Vec& x) {
        Vec v(2);
        v << 0.01 * std::tanh(x[0]), 0.01 * std::sin(x[x.size() - 1]);
        return v;
    };
    g.sup_bound = 0.01;
    return g;
}

SystemBundle coop(double theta) {
    CoopGameData cd;
    cd.theta = theta;
    cd.h = [](int i, const Vec& x) { return 0.01 * (i ? std::cos(x[0]) : std::sin(x[0])); };
    cd.h_bound = 0.01;
    cd.g = small_g2(1);
    return coop_game(cd, brownian_spec(1, 1.0));
}

}  // namespace

TEST_SUITE("generator") {

TEST_CASE("zero decomposition") {
    auto bf = zero_bf(2, 2);
    auto f = assemble(bf);
    auto eng = stream(1, 0);
    for (int s = 0; s < 20; ++s) CHECK(f(0.3, Vec::Ones(2), random_z(eng, 2, 2)).norm() == 0.0);
    auto rep = check_bf_growth(bf, 1, 500, 50.0, 2);
    CHECK(rep.pass);
    for (auto& c : rep.conditions) CHECK(c.worst_ratio == 0.0);
}

TEST_CASE("quadratic part arithmetic") {
    auto bf = zero_bf(2, 1);
    bf.f_q = [](double, const Vec&, const Mat& z) {
        Vec v(2);
        v << 0.5 * z.row(0).squaredNorm(), 0.0;
        return v;
    };
    Mat z(2, 1);
    z << 2.0, 3.0;
    Vec f = assemble(bf)(0.0, Vec::Zero(1), z);
    CHECK(f[0] == 2.0);
    CHECK(f[1] == 0.0);
}

TEST_CASE("assembled value is the component sum") {
    GeneratorBF bf = zero_bf(2, 2);
    bf.f_l = [](double t, const Vec& x, const Mat& z) {
        Mat m(2, 2);
        m << std::sin(z(0, 0)), t, x[0], std::cos(z(1, 1));
        return m;
    };
    bf.f_q = [](double, const Vec&, const Mat& z) { return Vec(z.rowwise().squaredNorm()); };
    bf.f_s = [](double, const Vec&, const Mat& z) { return Vec(Vec::Constant(2, std::sqrt(1.0 + z.norm()))); };
    bf.f_e = [](double, const Vec& x, const Mat&) { return Vec(0.1 * x); };
    bf.f_k = [](double t, const Vec&) { return Vec(Vec::Constant(2, t)); };
    auto f = assemble(bf);
    auto eng = stream(3, 0);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int s = 0; s < 10000; ++s) {
        double t = 0.5 * (u(eng) + 2.0) / 2.0;
        Vec x(2);
        x << u(eng), u(eng);
        Mat z = random_z(eng, 2, 2);
        Mat l = bf.f_l(t, x, z);
        Vec expect(2);
        for (int i = 0; i < 2; ++i) expect[i] = z.row(i).dot(l.col(i).transpose());
        expect += bf.f_q(t, x, z) + bf.f_s(t, x, z) + bf.f_e(t, x, z) + bf.f_k(t, x);
        REQUIRE((f(t, x, z) - expect).cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + expect.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("q must exceed 1 + d/2") {
    auto bf = zero_bf(1, 2);
    bf.f_k = [](double, const Vec& x) { return Vec(Vec::Constant(1, std::sin(x[0]))); };
    bf.constants = [](int) { return BFConstants{1.0, {}, 2.0, 0.0}; };
    CHECK_THROWS_AS(bf.validate(), Error);
    bf.constants = [](int) { return BFConstants{1.0, {}, 2.5, 0.0}; };
    CHECK_NOTHROW(bf.validate());
}

TEST_CASE("non-triangular quadratic part is caught") {
    auto bf = zero_bf(2, 1);
    bf.f_q = [](double, const Vec&, const Mat& z) {
        Vec v(2);
        v << z.row(1).squaredNorm(), 0.0;
        return v;
    };
    auto rep = check_bf_growth(bf, 1, 4000, 100.0, 4);
    CHECK_FALSE(rep.pass);
    const auto& c = rep.condition("quadratic_triangular");
    CHECK_FALSE(c.pass);
    CHECK(std::abs(c.witness.z(1, 0)) > std::abs(c.witness.z(0, 0)));
}

TEST_CASE("cooperation driver in transformed coordinates") {
    for (double theta : {0.0, 0.25, 0.5, 2.0}) {
        auto b = coop(theta);
        auto bf_gen = assemble(*b.bf);
        auto direct = linear_transform(b.driver, b.transform);
        const double k = (2 * theta - 1) / (2 * (1 + theta) * (1 - theta));
        auto eng = stream(5, 0);
        std::uniform_real_distribution<double> u(-3.0, 3.0);
        for (int s = 0; s < 1000; ++s) {
            Vec x = Vec::Constant(1, u(eng));
            Mat zt = random_z(eng, 2, 1);
            Vec a = bf_gen(0.2, x, zt);
            Vec c = direct(0.2, x, zt);
            double h1 = 0.01 * std::sin(x[0]), h2 = 0.01 * std::cos(x[0]);
            double f1 = k * zt(0, 0) * (zt(0, 0) + 2 * zt(1, 0)) + h1 - h2;
            REQUIRE(a[0] == doctest::Approx(f1).epsilon(1e-12).scale(1.0));
            REQUIRE((a - c).norm() <= 1e-12 * (1.0 + zt.squaredNorm()));
        }
    }
}

TEST_CASE("equilibrium transform matches the differenced driver") {
    TerminalData g = small_g2(2);
    auto b = equilibrium_system({0.3, 0.7}, g, brownian_spec(2, 1.0));
    auto bf_gen = assemble(*b.bf);
    auto eng = stream(6, 0);
    Mat Si = checked_inverse(b.transform);
    for (int s = 0; s < 1000; ++s) {
        Mat zb = random_z(eng, 2, 2);
        Mat z = Si * zb;
        // raw: f^i = -nu_i^2/2 + A^2/2 - A mu_i with A = 0.3 mu_1 + 0.7 mu_2
        double A = 0.3 * z(0, 0) + 0.7 * z(1, 0);
        double f1 = -0.5 * z(0, 1) * z(0, 1) + 0.5 * A * A - A * z(0, 0);
        double f2 = -0.5 * z(1, 1) * z(1, 1) + 0.5 * A * A - A * z(1, 0);
        Vec got = bf_gen(0.0, Vec::Zero(2), zb);
        REQUIRE(got[0] == doctest::Approx(f1 - f2).epsilon(1e-12).scale(1.0));
        REQUIRE(got[1] == doctest::Approx(f2).epsilon(1e-12).scale(1.0));
    }
    auto rep = check_bf_growth(*b.bf, 1, 4000, 50.0, 7);
    CHECK(rep.pass);
}

TEST_CASE("AB certificates") {
    SUBCASE("zero driver passes with margin 0 at z = 0") {
        Generator f{2, 1, 1.0, [](double, const Vec&, const Vec&, const Mat&) { return Vec(Vec::Zero(2)); }, false};
        ABCertificate cert;
        cert.directions = Mat(2, 3);
        cert.directions << 1, 0, -1, 0, 1, -1;
        auto rep = check_ab(f, cert, 500, 50.0, 1);
        CHECK(rep.pass);
        for (auto& r : rep.rows) CHECK(r.max_margin == 0.0);
    }
    SUBCASE("equilibrium certificate") {
        for (int d : {1, 2}) {
            auto b = equilibrium_system({0.5, 0.5}, small_g2(d), brownian_spec(d, 1.0));
            CHECK(check_ab(b.driver, *b.certificate, 4000, 50.0, 2).pass);
        }
        TerminalData g3;
        g3.N = 3;
        g3.d = 2;
        g3.g = [](const Vec& x) { return Vec(Vec::Constant(3, std::tanh(x[0]))); };
        auto b3 = equilibrium_system({0.2, 0.3, 0.5}, g3, brownian_spec(2, 1.0));
        CHECK(check_ab(b3.driver, *b3.certificate, 4000, 50.0, 3).pass);
    }
    SUBCASE("row-2 mass breaks the e1 inequality") {
        Generator f{2, 1, 1.0,
                    [](double, const Vec&, const Vec&, const Mat& z) {
                        Vec v(2);
                        v << z.squaredNorm(), 0.0;
                        return v;
                    },
                    false};
        ABCertificate cert;
        cert.directions = Mat(2, 3);
        cert.directions << 1, 0, -1, 0, 1, -1;
        auto rep = check_ab(f, cert, 4000, 50.0, 4);
        CHECK_FALSE(rep.pass);
        CHECK(rep.rows[0].max_margin > 0);
        CHECK(std::abs(rep.rows[0].witness.z(1, 0)) > std::abs(rep.rows[0].witness.z(0, 0)));
    }
    SUBCASE("non-spanning directions are rejected") {
        Generator f{2, 1, 1.0, [](double, const Vec&, const Vec&, const Mat&) { return Vec(Vec::Zero(2)); }, false};
        ABCertificate cert;
        cert.directions = Mat::Identity(2, 2);
        try {
            check_ab(f, cert, 10, 1.0, 1);
            FAIL("expected certificate error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::certificate);
        }
    }
    SUBCASE("weak cooperation certificates") {
        for (double theta : {0.0, 0.25, 0.5, 2.0}) {
            auto b = coop(theta);
            auto rep = check_ab(b.driver, *b.certificate, 4000, 50.0, 5);
            CHECK(rep.pass);
            CHECK(rep.L_growth_ok);
        }
    }
}

TEST_CASE("linear transforms") {
    auto b = coop(0.25);
    auto eng = stream(8, 0);
    SUBCASE("identity") {
        auto same = linear_transform(b.driver, Mat::Identity(2, 2));
        for (int s = 0; s < 100; ++s) {
            Mat z = random_z(eng, 2, 1);
            CHECK(same(0.1, Vec::Ones(1), z) == b.driver(0.1, Vec::Ones(1), z));
        }
    }
    SUBCASE("round trip") {
        Mat S(2, 2);
        S << 2.0, 1.0, -0.5, 3.0;
        auto back = linear_transform(linear_transform(b.driver, S), checked_inverse(S));
        double cond = 3.2;
        for (int s = 0; s < 200; ++s) {
            Mat z = random_z(eng, 2, 1);
            Vec a = b.driver(0.1, Vec::Ones(1), z), c = back(0.1, Vec::Ones(1), z);
            CHECK((a - c).norm() <= 1e-13 * cond * cond * (1.0 + a.norm()));
        }
    }
    SUBCASE("certificate follows the transform on the image sample set") {
        Mat S = b.transform;
        auto samples = ab_samples(2, 1, 1.0, 2000, 50.0, 5.0, 9);
        auto rep = check_ab_on(b.driver, *b.certificate, samples);
        std::vector<ABSample> image = samples;
        for (auto& s : image) s.z = S * s.z;
        auto rep2 = check_ab_on(linear_transform(b.driver, S), transform_certificate(*b.certificate, S), image);
        CHECK(rep.pass);
        CHECK(rep2.pass);
        for (std::size_t k = 0; k < rep.rows.size(); ++k)
            CHECK(rep2.rows[k].max_margin ==
                  doctest::Approx(rep.rows[k].max_margin).epsilon(1e-9).scale(1.0));
    }
    SUBCASE("singular transform") {
        Mat S(2, 2);
        S << 1.0, 2.0, 2.0, 4.0;
        CHECK_THROWS_AS(linear_transform(b.driver, S), Error);
    }
}

}  // TEST_SUITE
