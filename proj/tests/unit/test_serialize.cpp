#include "doctest.h"

#include "qbsde/error.hpp"
#include "qbsde/serialize.hpp"

#include <json.hpp>

using namespace qbsde;
using nlohmann::json;

TEST_SUITE("serialize") {

TEST_CASE("Lyapunov pair round trip") {
    auto p = construct_bf_lyapunov(1.0, {}, 0.05, 3, 1.0, 0.0);
    auto q = lyapunov_pair_from_json(to_json(p));
    CHECK(q.N == p.N);
    REQUIRE(q.alphas.size() == p.alphas.size());
    for (std::size_t i = 0; i < p.alphas.size(); ++i) CHECK(q.alphas[i] == p.alphas[i]);
    CHECK(q.c == p.c);
    CHECK(q.k_const == p.k_const);
    CHECK(q.C1 == p.C1);
    Vec y(3);
    y << 0.01, -0.02, 0.03;
    CHECK(q.h(y) == p.h(y));
    CHECK((q.grad(y) - p.grad(y)).norm() == 0.0);

    auto qq = lyapunov_pair_from_json(to_json(quadratic_lyapunov(0.2, 1.0, 0.0, 2)));
    CHECK(qq.h(y.head(2)) == doctest::Approx(quadratic_lyapunov(0.2, 1.0, 0.0, 2).h(y.head(2))));
    CHECK_THROWS_AS(lyapunov_pair_from_json("{\"kind\": 1}"), Error);
    CHECK_THROWS_AS(lyapunov_pair_from_json("not json"), Error);
}

TEST_CASE("diagnostic report fields") {
    DiagnosticReport r;
    r.name = "test";
    r.add(Rung{"a", 1.0, 0.5, 0.1, true});
    r.add(Rung{"b", 2.0, -1.0, 0.1, false});
    auto j = json::parse(to_json(r));
    CHECK(j["name"] == "test");
    CHECK(j["pass"] == false);
    CHECK(j["rungs"].size() == 2);
    CHECK(j["rungs"][1]["label"] == "b");
    CHECK(j["margin"].get<double>() == -1.0);
}

TEST_CASE("non-finite numbers serialise as strings") {
    HolderEstimate h;
    h.value = INFINITY;
    auto j = json::parse(to_json(h));
    CHECK(j["value"] == "inf");
    h.value = NAN;
    CHECK(json::parse(to_json(h))["value"] == "nan");
    ConvergenceInfo c;
    c.picard_residuals = {1.0, 0.5};
    auto k = json::parse(to_json(c));
    CHECK(k["picard_residuals"].size() == 2);
}

}  // TEST_SUITE
