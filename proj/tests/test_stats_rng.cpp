#include "funbayes/rng.hpp"
#include "funbayes/stats.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

using namespace funbayes;

TEST_CASE("normal density and cdf reference values") {
    CHECK(normal_pdf(0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-14));
    CHECK(normal_pdf(1.0) == doctest::Approx(0.24197072451914337).epsilon(1e-14));
    CHECK(normal_pdf(-1.0) == doctest::Approx(normal_pdf(1.0)).epsilon(1e-15));
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(normal_cdf(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-14));
    CHECK(normal_cdf(-1.0) + normal_cdf(1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(normal_cdf(-40.0) == doctest::Approx(0.0).epsilon(1e-300));
}

TEST_CASE("inverse normal cdf matches reference quantiles") {
    CHECK(inv_normal_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(inv_normal_cdf(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-13));
    CHECK(inv_normal_cdf(0.025) == doctest::Approx(-1.9599639845400545).epsilon(1e-13));
    CHECK(inv_normal_cdf(0.3) == doctest::Approx(-0.5244005127080409).epsilon(1e-13));
    CHECK(inv_normal_cdf(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-12));

    // Round trip over a wide range of probabilities.
    for (double p : {1e-12, 1e-6, 0.01, 0.2, 0.5, 0.8, 0.99, 1.0 - 1e-6}) {
        CHECK(normal_cdf(inv_normal_cdf(p)) == doctest::Approx(p).epsilon(1e-11));
    }
}

TEST_CASE("moment helpers") {
    const std::vector<double> xs{1.0, 2.0, 3.0, 4.0, 5.0};
    CHECK(mean(xs) == doctest::Approx(3.0));
    CHECK(sample_variance(xs) == doctest::Approx(2.5));
    CHECK(sample_sd(xs) == doctest::Approx(std::sqrt(2.5)));
}

TEST_CASE("empirical quantile uses linear interpolation") {
    const std::vector<double> xs{4.0, 1.0, 3.0, 2.0};
    CHECK(quantile(xs, 0.0) == doctest::Approx(1.0));
    CHECK(quantile(xs, 1.0) == doctest::Approx(4.0));
    CHECK(quantile(xs, 0.5) == doctest::Approx(2.5));
    const std::vector<double> odd{1.0, 2.0, 3.0, 4.0, 5.0};
    CHECK(quantile(odd, 0.5) == doctest::Approx(3.0));
    CHECK(quantile(odd, 0.25) == doctest::Approx(2.0));
}

TEST_CASE("logsumexp is shift-stable") {
    const std::vector<double> a{-1000.0, -1000.0};
    CHECK(logsumexp(a) == doctest::Approx(-1000.0 + std::log(2.0)).epsilon(1e-14));
    const std::vector<double> b{0.0};
    CHECK(logsumexp(b) == doctest::Approx(0.0));
    const std::vector<double> c{-std::numeric_limits<double>::infinity(), 1.0};
    CHECK(logsumexp(c) == doctest::Approx(1.0));
}

TEST_CASE("quadrature rules") {
    std::vector<double> x(11), y(11);
    for (int i = 0; i <= 10; ++i) {
        x[static_cast<std::size_t>(i)] = i / 10.0;
        y[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)];
    }
    CHECK(trapezoid(x, y) == doctest::Approx(0.5).epsilon(1e-14));

    // Simpson integrates cubics exactly.
    const auto cubic = [](double t) { return t * t * t; };
    CHECK(simpson(cubic, 0.0, 1.0, 11) == doctest::Approx(0.25).epsilon(1e-14));
    const auto quartic = [](double t) { return t * t * t * t; };
    CHECK(simpson(quartic, 0.0, 1.0, 1001) == doctest::Approx(0.2).epsilon(1e-10));
}

TEST_CASE("van der Corput sequence") {
    CHECK(halton(1, 2) == doctest::Approx(0.5));
    CHECK(halton(2, 2) == doctest::Approx(0.25));
    CHECK(halton(3, 2) == doctest::Approx(0.75));
    CHECK(halton(4, 2) == doctest::Approx(0.125));
    CHECK(halton(1, 3) == doctest::Approx(1.0 / 3.0));
    CHECK(halton(2, 3) == doctest::Approx(2.0 / 3.0));
    CHECK(halton(3, 3) == doctest::Approx(1.0 / 9.0));
}

TEST_CASE("rng determinism and substreams") {
    Rng a(7), b(7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng base(7);
    Rng s1 = base.derive(1);
    Rng s2 = base.derive(2);
    Rng s1_again = base.derive(1);
    bool all_equal = true;
    for (int i = 0; i < 50; ++i) {
        const std::uint64_t v1 = s1.next_u64();
        const std::uint64_t v2 = s2.next_u64();
        CHECK(v1 == s1_again.next_u64());
        if (v1 != v2) all_equal = false;
    }
    CHECK_FALSE(all_equal);
}

TEST_CASE("uniform01 stays inside the open interval") {
    Rng rng(123);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform01();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo > 0.0);
    CHECK(hi < 1.0);
}

TEST_CASE("normal draws have the right moments") {
    Rng rng(99);
    const std::size_t n = 200000;
    std::vector<double> draws(n);
    for (auto& d : draws) d = rng.normal();
    CHECK(std::abs(mean(draws)) < 0.01);
    CHECK(sample_sd(draws) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("exponential draws have the right mean") {
    Rng rng(5);
    const std::size_t n = 200000;
    std::vector<double> draws(n);
    for (auto& d : draws) d = rng.exponential(1.0);
    CHECK(mean(draws) == doctest::Approx(1.0).epsilon(0.012));
    for (auto& d : draws) d = rng.exponential(2.0);
    CHECK(mean(draws) == doctest::Approx(0.5).epsilon(0.012));
}

TEST_CASE("uniform_int covers its range uniformly") {
    Rng rng(11);
    std::vector<int> counts(6, 0);
    const int n = 60000;
    for (int i = 0; i < n; ++i) {
        const auto v = rng.uniform_int(0, 5);
        REQUIRE(v >= 0);
        REQUIRE(v <= 5);
        ++counts[static_cast<std::size_t>(v)];
    }
    for (const int c : counts) CHECK(std::abs(c - n / 6) < 500);
}
