#include "doctest.h"

#include <cmath>
#include <random>

#include "entanglab/cone.hpp"
#include "entanglab/error.hpp"
#include "oracles.hpp"

using namespace entanglab;
using namespace entanglab::cone;

TEST_CASE("shannon entropy") {
    CHECK(shannon_entropy(std::vector<double>{1.0, 0.0}) == 0.0);
    CHECK(shannon_entropy(std::vector<double>{0.5, 0.5}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(shannon_entropy(std::vector<double>{0.75, 0.25}) == doctest::Approx(0.5623351446).epsilon(1e-9));
    CHECK_THROWS(shannon_entropy(std::vector<double>{0.7, 0.2}));
    CHECK_THROWS(shannon_entropy(std::vector<double>{1.1, -0.1}));
}

TEST_CASE("closed form") {
    CHECK(e1_closed_form(0.0) == 0.0);
    CHECK(std::abs(e1_closed_form(1.0) - std::log(2.0)) < 1e-15);
    CHECK(e1_closed_form(3.0) == doctest::Approx(0.5623351446).epsilon(1e-9));
    CHECK_THROWS_WITH(e1_closed_form(-0.1), doctest::Contains("outside closed-form domain"));
    double prev = 0.0;
    for (int i = 1; i <= 100; ++i) {
        const double a = i / 100.0;
        const double e = e1_closed_form(a);
        CHECK(e > prev);
        prev = e;
        CHECK(std::abs(e - e1_closed_form(1.0 / a)) < 1e-12);
    }
    CHECK(e1_closed_form(2.0) < e1_closed_form(1.5));
}

TEST_CASE("unique decomposition") {
    const StateFunctional g{{1.0, 0.5}, "g"}, l0{{1.0, 1.0}, "0"}, l1{{1.0, 0.0}, "1"};
    auto d = decompose_unique(g, l0, l1);
    CHECK(d.alpha == 1.0);
    REQUIRE(d.weights);
    CHECK((*d.weights)[0] == 0.5);
    d = decompose_unique(l0, l0, l1);
    CHECK(d.alpha == 0.0);
    CHECK((*d.weights)[0] == 1.0);
    d = decompose_unique(StateFunctional{{1.0, 0.8}, "g"}, StateFunctional{{1.0, 0.6}, "0"}, l1);
    CHECK(d.status == Status::negative_alpha);
    CHECK_FALSE(d.weights);
    CHECK_THROWS_WITH(decompose_unique(StateFunctional{{1.0, 0.0}, "g"}, l0, l1), doctest::Contains("unnormalizable"));
    CHECK_THROWS_WITH(decompose_unique(g, l0, StateFunctional{{1.0, 1e-6}, "1"}), doctest::Contains("contract"));
}

TEST_CASE("general solver on the three-state example") {
    ConeSpec cone{{{{1.0, 0.0}, "a"}, {{1.0, 1.0}, "b"}, {{1.0, 2.0}, "c"}}};
    const auto r = entanglement_general({{1.0, 0.5}, "t"}, cone);
    CHECK(r.status == Status::ok);
    CHECK(r.entanglement == doctest::Approx(0.5623351446).epsilon(1e-9));
    CHECK(r.support == std::vector<int>{0, 2});
    CHECK(r.weights[0] == doctest::Approx(0.75));
    CHECK(r.unique);
}

TEST_CASE("general solver edge cases") {
    ConeSpec cone{{{{1.0, 0.0}, "a"}, {{1.0, 1.0}, "b"}}};
    auto r = entanglement_general({{1.0, 1.0}, "t"}, cone);
    CHECK(r.status == Status::target_pure);
    CHECK(r.entanglement == 0.0);
    CHECK(r.weights[1] == 1.0);
    r = entanglement_general({{1.0, 1.5}, "t"}, cone);
    CHECK(r.status == Status::infeasible);
    // mirror-image pure set: {a,d} and {b,c} both give weights (2/3, 1/3)
    ConeSpec sym{{{{1.0, -1.0}, "a"}, {{1.0, 1.0}, "b"}, {{1.0, -2.0}, "c"}, {{1.0, 2.0}, "d"}}};
    r = entanglement_general({{1.0, 0.0}, "t"}, sym);
    CHECK(r.entanglement == doctest::Approx(oracle::shannon({2.0 / 3.0, 1.0 / 3.0})));
    CHECK_FALSE(r.unique);
    CHECK(r.support == std::vector<int>{0, 3});
    ConeSpec tie{{{{1.0, -1.0}, "a"}, {{1.0, 1.0}, "b"}, {{1.0, 3.0}, "c"}}};
    r = entanglement_general({{1.0, 1.0 / 3.0}, "t"}, tie);
    // {a,b}: p=(1/3,2/3); {a,c}: p=(2/3,1/3)
    CHECK_FALSE(r.unique);
    CHECK(r.support == std::vector<int>{0, 1});
    CHECK_THROWS_AS(entanglement_general({{1.0, 0.5}, "t"}, ConeSpec{}), ConfigError);
    CHECK_THROWS_AS(entanglement_general({{0.9, 0.5}, "t"}, cone), ConfigError);
}

TEST_CASE("two pure states reproduce the closed form") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int i = 0; i < 20; ++i) {
        const double a = u(rng) + 0.2, g = u(rng) * a;
        const StateFunctional l0{{1.0, a}, "0"}, l1{{1.0, 0.0}, "1"}, tg{{1.0, g}, "g"};
        const auto d = decompose_unique(tg, l0, l1);
        const auto r = entanglement_general(tg, ConeSpec{{l0, l1}});
        CHECK(std::abs(r.entanglement - e1_closed_form(d.alpha)) < 1e-12);
    }
}

TEST_CASE("enlarging the pure set never increases the infimum") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        ConeSpec cone;
        for (int j = 0; j < 3; ++j) cone.pure.push_back({{1.0, u(rng), u(rng)}, ""});
        const StateFunctional t{{1.0, (cone.pure[0].values[1] + cone.pure[1].values[1] + cone.pure[2].values[1]) / 3,
                                 (cone.pure[0].values[2] + cone.pure[1].values[2] + cone.pure[2].values[2]) / 3},
                                "t"};
        const double before = entanglement_general(t, cone).entanglement;
        cone.pure.push_back({{1.0, u(rng), u(rng)}, ""});
        CHECK(entanglement_general(t, cone).entanglement <= before + 1e-12);
    }
}

TEST_CASE("vertex enumeration is never beaten by the grid oracle") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0), w(0.0, 1.0);
    for (int trial = 0; trial < 4; ++trial) {
        const int d = 3, m = 4;
        ConeSpec cone;
        Eigen::MatrixXd a(d, m);
        for (int j = 0; j < m; ++j) {
            std::vector<double> v{1.0, u(rng), u(rng)};
            cone.pure.push_back({v, ""});
            for (int i = 0; i < d; ++i) a(i, j) = v[static_cast<std::size_t>(i)];
        }
        std::vector<double> p(m);
        double s = 0;
        for (auto& x : p) s += (x = w(rng));
        Eigen::VectorXd t = Eigen::VectorXd::Zero(d);
        for (int j = 0; j < m; ++j) t += (p[j] / s) * a.col(j);
        const auto r = entanglement_general({{t.data(), t.data() + d}, "t"}, cone, 2);
        const double grid = oracle::grid_min_entropy(a, t, 1e-3);
        CHECK(r.entanglement <= grid + 1e-6);
    }
}

TEST_CASE("purity check") {
    ConeSpec cone{{{{1.0, 0.0}, "a"}, {{1.0, 1.0}, "b"}, {{1.0, 1.0}, "b2"}}};
    CHECK(purity_check({{1.0, 1.0}, ""}, cone));
    CHECK_FALSE(purity_check({{1.0, 0.5}, ""}, cone));
}
