#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "nlch/grid.hpp"

using namespace nlch;

TEST_CASE("make_domain basic arithmetic") {
    auto d = make_domain(0.04, 12.0, 481);
    CHECK(d->h == doctest::Approx(0.025).epsilon(1e-15));
    CHECK(d->nodes.front() == doctest::Approx(0.04).epsilon(1e-15));
    CHECK(d->nodes.back() == doctest::Approx(12.04).epsilon(1e-15));
    for (int i = 1; i < d->n; ++i) CHECK(d->nodes[i] > d->nodes[i - 1]);

    double wsum = 0.0;
    for (double w : d->weights) wsum += w;
    CHECK(std::fabs(wsum - 12.0) <= 1e-12 * 12.0);
}

TEST_CASE("make_domain rejects bad input") {
    CHECK_THROWS_AS(make_domain(0.04, 12.0, 2), std::invalid_argument);
    CHECK_THROWS_AS(make_domain(-1.0, 12.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(make_domain(0.04, 0.0, 10), std::invalid_argument);
}

TEST_CASE("trapezoid weights on a 3-node unit segment") {
    auto d = make_domain(1.0, 1.0, 3);
    CHECK(d->weights[0] == doctest::Approx(0.25));
    CHECK(d->weights[1] == doctest::Approx(0.5));
    CHECK(d->weights[2] == doctest::Approx(0.25));
}

TEST_CASE("inner_H on constants and orthogonal pairs") {
    auto d = make_domain(1.0, 1.0, 3);
    Field one = Field::constant(d, 1.0);
    Field zero = Field::zeros(d);
    CHECK(inner_H(one, one) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(inner_H(one, zero) == 0.0);
}

TEST_CASE("inner_H of sin^2 recovers L/2 per ray") {
    // exact integral of sin^2(pi (x-eta)/L) over the segment is L/2; the
    // trapezoid sum is exact here (full-period cosine), so the quadrature
    // error sits at round-off, well inside the O(h^2) budget
    const double L = 1.0;
    for (int n : {17, 33, 65}) {
        auto d = make_domain(1.0, L, n);
        Field u = Field::zeros(d);
        for (int i = 0; i < n; ++i)
            u[i] = std::sin(std::numbers::pi * (d->nodes[i] - d->eta) / L);
        CHECK(inner_H(u, u) == doctest::Approx(2.0 * (L / 2.0)).epsilon(1e-12));
    }
}

TEST_CASE("mismatched domains are a usage error") {
    auto d1 = make_domain(1.0, 1.0, 3);
    auto d2 = make_domain(1.0, 1.0, 5);
    CHECK_THROWS_AS(inner_H(Field::constant(d1, 1.0), Field::constant(d2, 1.0)),
                    std::invalid_argument);
}

TEST_CASE("norm_V of a constant is |c| sqrt(2L)") {
    auto d = make_domain(0.5, 3.0, 33);
    Field c = Field::constant(d, -2.5);
    CHECK(norm_V(c) == doctest::Approx(2.5 * std::sqrt(2.0 * 3.0)).epsilon(1e-13));
}

TEST_CASE("norm_V of a spike is finite and dominates norm_H") {
    auto d = make_domain(0.5, 3.0, 33);
    Field u = Field::zeros(d);
    u[16] = 1.0;
    CHECK(std::isfinite(norm_V(u)));
    CHECK(norm_V(u) >= norm_H(u));
}

TEST_CASE("norm_V of cosine modes matches (1 + mu_k) * ||u||_H^2 at order 2") {
    const double L = 12.0;
    for (int k : {1, 3, 7}) {
        const int n = 769;
        auto d = make_domain(0.04, L, n);
        Field u = Field::zeros(d);
        for (int i = 0; i < n; ++i)
            u[i] = std::cos(k * std::numbers::pi * (d->nodes[i] - d->eta) / L);
        const double mu_k = std::pow(k * std::numbers::pi / L, 2);
        const double lhs = inner_V(u, u);
        const double rhs = (1.0 + mu_k) * inner_H(u, u);
        CHECK(lhs == doctest::Approx(rhs).epsilon(5e-4 * k * k));
    }
}

TEST_CASE("inner_H bilinear symmetric positive definite") {
    auto d = make_domain(0.7, 2.0, 41);
    std::mt19937_64 rng(7);
    auto draw = [&] {
        Field f = Field::zeros(d);
        for (auto& x : f.v) x = 2.0 * (double(rng() >> 11) * 0x1.0p-53) - 1.0;
        return f;
    };
    for (int rep = 0; rep < 20; ++rep) {
        Field u = draw(), v = draw(), w = draw();
        CHECK(inner_H(u, v) == doctest::Approx(inner_H(v, u)).epsilon(1e-14));
        const double a = 1.7, b = -0.3;
        CHECK(inner_H(a * u + b * v, w) ==
              doctest::Approx(a * inner_H(u, w) + b * inner_H(v, w)).epsilon(1e-12));
        CHECK(inner_H(u, u) > 0.0);
        CHECK(norm_H(u) <= norm_V(u) + 1e-15);
    }
}

TEST_CASE("quadrature of a cubic converges at order 2") {
    // int_1^3 x^3 dx = 20
    double errs[3];
    for (int k = 0; k < 3; ++k) {
        const int n = 9 * (1 << k) + 1;
        auto d = make_domain(1.0, 2.0, n);
        Field u = Field::zeros(d), one = Field::constant(d, 1.0);
        for (int i = 0; i < n; ++i) u[i] = std::pow(d->nodes[i], 3);
        errs[k] = std::fabs(0.5 * inner_H(u, one) - 20.0);
    }
    const double order = std::log2(errs[0] / errs[1]);
    const double order2 = std::log2(errs[1] / errs[2]);
    CHECK(order == doctest::Approx(2.0).epsilon(0.1));
    CHECK(order2 == doctest::Approx(2.0).epsilon(0.1));
}
