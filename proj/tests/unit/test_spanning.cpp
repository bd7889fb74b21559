#include "doctest.h"

#include "qbsde/error.hpp"
#include "qbsde/rng.hpp"
#include "qbsde/spanning.hpp"

#include <cmath>

using namespace qbsde;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

Mat axis_pairs(int N) {
    Mat a(N, 2 * N);
    a.setZero();
    for (int i = 0; i < N; ++i) {
        a(i, 2 * i) = 1.0;
        a(i, 2 * i + 1) = -1.0;
    }
    return a;
}

Mat equilibrium_set(const Vec& alpha) {
    const int N = static_cast<int>(alpha.size());
    Mat a = Mat::Zero(N, N + 1);
    for (int i = 0; i < N; ++i) a(i, i) = -1.0;
    a.col(N) = alpha;
    return a;
}

}  // namespace

TEST_SUITE("spanning") {

TEST_CASE("canonical verdicts") {
    CHECK(positively_spans(SpanningSet(axis_pairs(2))));
    CHECK(positively_spans(SpanningSet(axis_pairs(5))));
    CHECK_FALSE(positively_spans(SpanningSet(Mat::Identity(2, 2))));
    Vec al(3);
    al << 0.2, 0.3, 0.5;
    CHECK(positively_spans(SpanningSet(equilibrium_set(al))));
    Mat line(2, 2);
    line << 1, -1, 0, 0;
    CHECK_FALSE(positively_spans(SpanningSet(line)));
}

TEST_CASE("zero vectors are rejected") {
    Mat a = Mat::Identity(2, 3);
    CHECK_THROWS_AS(SpanningSet{a}, Error);
}

TEST_CASE("positive representation") {
    SpanningSet s(axis_pairs(2));
    auto lam = positive_representation(s, v2(3.0, -2.0));
    REQUIRE(lam);
    Vec expect(4);
    expect << 3, 0, 0, 2;
    CHECK((*lam - expect).norm() < 1e-12);
    CHECK_FALSE(positive_representation(SpanningSet(Mat::Identity(2, 2)), v2(-1.0, 0.0)));
}

TEST_CASE("representation residuals on random spanning sets") {
    auto eng = stream(11, 0);
    std::normal_distribution<double> n01;
    int trials = 0;
    while (trials < 100) {
        const int N = 2 + trials % 4, K = N + 1 + trials % 5;
        Mat a(N, K);
        for (int i = 0; i < N; ++i)
            for (int k = 0; k < K; ++k) a(i, k) = n01(eng) * std::exp(2.0 * n01(eng));
        SpanningSet s(a);
        if (!positively_spans(s)) continue;
        Vec target(N);
        for (int i = 0; i < N; ++i) target[i] = 3.0 * n01(eng);
        auto lam = positive_representation(s, target);
        REQUIRE(lam);
        CHECK(lam->minCoeff() >= 0.0);
        CHECK((a * *lam - target).norm() <= 1e-8 * (1.0 + target.norm()));
        ++trials;
    }
}

TEST_CASE("separation witnesses") {
    auto w = strict_separation_witness(SpanningSet(Mat::Identity(2, 2)), 2000, 1);
    REQUIRE(w);
    CHECK((*w - v2(-1.0, -1.0) / std::sqrt(2.0)).norm() < 0.2);
    CHECK_FALSE(strict_separation_witness(SpanningSet(axis_pairs(2)), 10000, 2));
}

TEST_CASE("LP and sampling never contradict") {
    auto eng = stream(12, 0);
    std::normal_distribution<double> n01;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int found_false = 0, witnessed = 0;
    for (int t = 0; t < 200; ++t) {
        const int N = 2 + t % 3, K = 1 + static_cast<int>(u(eng) * 2 * N + 1);
        Mat a(N, K);
        for (int i = 0; i < N; ++i)
            for (int k = 0; k < K; ++k) a(i, k) = n01(eng);
        // half the sets live in a half-space so negative verdicts are common
        if (t % 2) a.row(0) = a.row(0).cwiseAbs();
        SpanningSet s(a);
        bool lp = positively_spans(s);
        auto w = strict_separation_witness(s, 4000, 100 + t);
        if (w) CHECK_FALSE(lp);
        if (!lp) {
            ++found_false;
            if (w) ++witnessed;
        }
    }
    CHECK(found_false > 50);
    CHECK(witnessed > 0.8 * found_false);
}

TEST_CASE("scale invariance and superset monotonicity") {
    auto eng = stream(13, 0);
    std::normal_distribution<double> n01;
    std::uniform_real_distribution<double> u(0.1, 10.0);
    for (int t = 0; t < 100; ++t) {
        Mat a(3, 5);
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 5; ++k) a(i, k) = n01(eng);
        bool base = positively_spans(SpanningSet(a));
        Mat scaled = a;
        for (int k = 0; k < 5; ++k) scaled.col(k) *= u(eng);
        CHECK(positively_spans(SpanningSet(scaled)) == base);
        Mat more(3, 6);
        more << a, Eigen::Vector3d(n01(eng), n01(eng), n01(eng));
        if (base) CHECK(positively_spans(SpanningSet(more)));
    }
}

TEST_CASE("phase one feasibility") {
    Mat A(2, 3);
    A << 1, 1, 0, 0, 1, 1;
    auto x = phase1_feasible(A, v2(1.0, 1.0));
    REQUIRE(x);
    CHECK((A * *x - v2(1.0, 1.0)).norm() < 1e-12);
    CHECK(x->minCoeff() >= 0);
    CHECK_FALSE(phase1_feasible(A, v2(-1.0, 1.0)));
    CHECK(numeric_rank(A) == 2);
}

}  // TEST_SUITE
