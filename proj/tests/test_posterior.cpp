#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "funbayes/errdensity.hpp"
#include "funbayes/posterior.hpp"
#include "funbayes/rng.hpp"
#include "funbayes/stats.hpp"

using namespace funbayes;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> pi_grid(int m = 40) {
    std::vector<double> g(m);
    for (int i = 0; i < m; ++i) g[i] = kPi * i / (m - 1);
    return g;
}

// p = 1, q = 1 (unordered binary) fixture
Dataset posterior_fixture(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    const auto grid = pi_grid();
    Dataset ds;
    ds.kinds = {DiscreteKind::unordered(2)};
    for (std::size_t i = 0; i < n; ++i) {
        MixedObservation o;
        const double a = rng.normal();
        o.curve.grid = grid;
        for (double t : grid) o.curve.values.push_back(a * std::cos(2 * t));
        o.xc = {rng.normal()};
        o.xd = {static_cast<int>(rng.uniform_int(0, 1))};
        o.y = a + 0.3 * o.xc[0] + 0.2 * rng.normal();
        ds.obs.push_back(std::move(o));
    }
    return ds;
}

BandwidthParams fixture_bw(double b = 0.5, double tau = 0.3) {
    BandwidthParams bw;
    bw.delta = 1.5;
    bw.h = {0.9};
    bw.lambda = {0.2};
    bw.b = b;
    bw.tau = tau;
    return bw;
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

} // namespace

TEST_CASE("prior specifications parse, print and validate") {
    const PriorSpec ig = PriorSpec::parse("ig:1:0.05");
    CHECK(ig.family == PriorSpec::Family::InverseGamma);
    CHECK(ig.alpha == 1.0);
    CHECK(ig.beta == 0.05);
    CHECK(ig.describe() == "ig:1:0.05");

    const PriorSpec hc = PriorSpec::parse("cauchy");
    CHECK(hc.family == PriorSpec::Family::HalfCauchy);
    CHECK(hc.scale == 1.0);
    CHECK(hc.describe() == "cauchy");
    CHECK(PriorSpec::parse("cauchy:2.5").describe() == "cauchy:2.5");

    CHECK_THROWS_AS(PriorSpec::parse("ig:1"), std::invalid_argument);
    CHECK_THROWS_AS(PriorSpec::parse("ig:a:b"), std::invalid_argument);
    CHECK_THROWS_AS(PriorSpec::parse("cauchy:1:2"), std::invalid_argument);
    CHECK_THROWS_AS(PriorSpec::parse("gauss"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(PriorSpec::parse("ig:0:1"),
                         "prior: inverse-gamma parameters must be positive",
                         std::invalid_argument);
}

TEST_CASE("inverse-gamma log density matches reference values and peaks at its mode") {
    const PriorSpec ig = PriorSpec::parse("ig:1:0.05");
    CHECK(ig.log_density_sq(0.05) == doctest::Approx(1.995732273553991).epsilon(1e-14));
    CHECK(std::exp(ig.log_density_sq(0.05)) ==
          doctest::Approx(7.357588823428847).epsilon(1e-13));
    CHECK(std::exp(ig.log_density_sq(0.01)) ==
          doctest::Approx(3.3689734995427334).epsilon(1e-13));
    // mode at beta / (alpha + 1) = 0.025
    CHECK(std::exp(ig.log_density_sq(0.025)) ==
          doctest::Approx(10.826822658929016).epsilon(1e-13));
    CHECK(ig.log_density_sq(0.025) > ig.log_density_sq(0.05));
    CHECK(ig.log_density_sq(0.05) > ig.log_density_sq(0.01));
    CHECK(ig.log_density_sq(0.0) == -kInf);
    CHECK(ig.log_density_sq(-1.0) == -kInf);

    const PriorSpec hc = PriorSpec::parse("cauchy");
    CHECK(hc.log_density_sq(1.0) == doctest::Approx(-1.1447298858494002).epsilon(1e-14));
}

TEST_CASE("inverse-gamma mass concentrates on small squared bandwidths") {
    // closed form for shape 1: P(V <= x) = exp(-beta / x)
    const PriorSpec ig = PriorSpec::parse("ig:1:0.05");
    const double below = simpson([&](double v) { return std::exp(ig.log_density_sq(v)); },
                                 1e-9, 0.5, 100001);
    CHECK(below == doctest::Approx(std::exp(-0.1)).epsilon(1e-3));
    const double above = simpson([&](double v) { return std::exp(ig.log_density_sq(v)); },
                                 0.5, 2000.0, 400001);
    CHECK(below > 5.0 * above);
    CHECK(below + above == doctest::Approx(1.0).epsilon(2e-3));
}

TEST_CASE("each transformed prior coordinate still integrates to one") {
    const PriorSpec ig = PriorSpec::parse("ig:1:0.05");
    const double ig_mass = simpson(
        [&](double u) { return std::exp(ig.log_density_sq(std::exp(u)) + u); }, -30.0, 30.0,
        40001);
    CHECK(ig_mass == doctest::Approx(1.0).epsilon(1e-3));

    const PriorSpec hc = PriorSpec::parse("cauchy");
    const double hc_mass = simpson(
        [&](double u) { return std::exp(hc.log_density_sq(std::exp(u)) + u); }, -40.0, 40.0,
        40001);
    CHECK(hc_mass == doctest::Approx(1.0).epsilon(1e-3));

    // uniform-on-[0, bound] coordinate: density times jacobian is the
    // logistic bump regardless of the bound
    const double lam_mass = simpson(
        [&](double v) { return sigmoid(v) * (1.0 - sigmoid(v)); }, -40.0, 40.0, 40001);
    CHECK(lam_mass == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("parameter layout names, dimensions and round trips") {
    const Dataset ds = posterior_fixture(5, 3);
    const ParamLayout local = ParamLayout::infer(ds, true);
    CHECK(local.dim() == 5);
    CHECK(local.names() == std::vector<std::string>{"delta", "h1", "lambda1", "b", "tau"});
    CHECK(local.lambda_bounds == std::vector<double>{0.5});

    const ParamLayout global = ParamLayout::infer(ds, false);
    CHECK(global.dim() == 4);
    CHECK(global.names() == std::vector<std::string>{"delta", "h1", "lambda1", "b"});

    const BandwidthParams bw = fixture_bw();
    const auto u = local.to_unconstrained(bw);
    const BandwidthParams back = local.from_unconstrained(u);
    CHECK(back.delta == doctest::Approx(bw.delta).epsilon(1e-12));
    CHECK(back.h[0] == doctest::Approx(bw.h[0]).epsilon(1e-12));
    CHECK(back.lambda[0] == doctest::Approx(bw.lambda[0]).epsilon(1e-12));
    CHECK(back.b == doctest::Approx(bw.b).epsilon(1e-12));
    CHECK(back.tau == doctest::Approx(bw.tau).epsilon(1e-12));

    const std::vector<double> u2 = {0.3, -1.2, 0.7, -0.4, 1.1};
    const auto u2_back = local.to_unconstrained(local.from_unconstrained(u2));
    for (std::size_t k = 0; k < u2.size(); ++k)
        CHECK(u2_back[k] == doctest::Approx(u2[k]).epsilon(1e-9));

    CHECK_THROWS_AS(local.from_unconstrained(std::vector<double>{1.0, 2.0}),
                    std::invalid_argument);
    BandwidthParams wrong = bw;
    wrong.h.clear();
    CHECK_THROWS_AS(local.to_unconstrained(wrong), std::invalid_argument);
}

TEST_CASE("log jacobian matches numerical derivatives of the natural coordinates") {
    Dataset ds = posterior_fixture(5, 9);
    ds.kinds.push_back(DiscreteKind::ordered(6));
    for (auto& o : ds.obs) o.xd.push_back(2);
    const ParamLayout layout = ParamLayout::infer(ds, true);
    REQUIRE(layout.dim() == 6);

    const std::vector<double> u = {0.4, -0.9, 0.6, -1.3, 0.2, 0.8};
    // natural vector carrying the prior: (delta^2, h^2, lambda, b^2, tau)
    const auto natural = [&](std::span<const double> uu) {
        const BandwidthParams bw = layout.from_unconstrained(uu);
        return std::vector<double>{bw.delta * bw.delta, bw.h[0] * bw.h[0], bw.lambda[0],
                                   bw.lambda[1], bw.b * bw.b, bw.tau};
    };
    const double eps = 1e-6;
    double log_jac_num = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        auto up = u, dn = u;
        up[k] += eps;
        dn[k] -= eps;
        log_jac_num += std::log((natural(up)[k] - natural(dn)[k]) / (2 * eps));
    }
    CHECK(layout.log_jacobian(u) == doctest::Approx(log_jac_num).epsilon(1e-6));
}

TEST_CASE("posterior decomposes into likelihood, prior and jacobian") {
    const Dataset ds = posterior_fixture(8, 21);
    const FitContext ctx = FitContext::build(ds, SemiMetricSpec::deriv(2, 8));
    const ParamLayout layout = ParamLayout::infer(ds, true);
    const Posterior post(ctx, layout, PriorSpec::parse("ig:1:0.05"));

    const BandwidthParams bw = fixture_bw();
    const auto u = layout.to_unconstrained(bw);
    const BandwidthParams bw_u = layout.from_unconstrained(u);

    const double ll = post.log_kernel_likelihood(bw_u);
    const double lp = post.log_prior_natural(bw_u);
    const double lj = layout.log_jacobian(u);
    CHECK(std::isfinite(ll));
    CHECK(post.log_density_u(u) == doctest::Approx(ll + lp + lj).epsilon(1e-12));

    // prior splits into inverse-gamma terms plus the uniform lambda constant
    const PriorSpec& pr = post.prior();
    const double expect_prior = pr.log_density_sq(bw_u.delta * bw_u.delta) +
                                pr.log_density_sq(bw_u.h[0] * bw_u.h[0]) +
                                pr.log_density_sq(bw_u.b * bw_u.b) + std::log(2.0);
    CHECK(lp == doctest::Approx(expect_prior).epsilon(1e-12));
}

TEST_CASE("kernel likelihood is the sum of log leave-one-out residual densities") {
    const Dataset ds = posterior_fixture(8, 33);
    const FitContext ctx = FitContext::build(ds, SemiMetricSpec::deriv(2, 8));
    const Posterior post(ctx, ParamLayout::infer(ds, true), PriorSpec::parse("ig:1:0.05"));

    const BandwidthParams bw = fixture_bw();
    const auto resid = post.residuals_at(bw);
    REQUIRE(resid.size() == ds.n());

    double by_hand = 0.0;
    for (std::size_t i = 0; i < resid.size(); ++i)
        by_hand += std::log(loo_kde(resid, i, resid[i], bw.b, bw.tau));
    CHECK(post.log_kernel_likelihood(bw) == doctest::Approx(by_hand).epsilon(1e-13));

    // shifting every response leaves the residuals, hence the likelihood, alone
    Dataset shifted = ds;
    for (auto& o : shifted.obs) o.y += 11.0;
    const FitContext ctx2 = FitContext::build(shifted, SemiMetricSpec::deriv(2, 8));
    const Posterior post2(ctx2, ParamLayout::infer(shifted, true), PriorSpec::parse("ig:1:0.05"));
    CHECK(post2.log_kernel_likelihood(bw) ==
          doctest::Approx(post.log_kernel_likelihood(bw)).epsilon(1e-9));

    // a wildly oversmoothed residual bandwidth destroys the likelihood
    CHECK(post.log_kernel_likelihood(fixture_bw(1e6)) <
          post.log_kernel_likelihood(fixture_bw(0.5)) - 10.0);
}

TEST_CASE("degenerate and non-finite inputs map to -inf, never exceptions") {
    const Dataset ds = posterior_fixture(6, 41);
    const FitContext ctx = FitContext::build(ds, SemiMetricSpec::deriv(2, 8));
    const ParamLayout layout = ParamLayout::infer(ds, true);
    const Posterior post(ctx, layout, PriorSpec::parse("ig:1:0.05"));

    std::vector<double> u = layout.to_unconstrained(fixture_bw());
    CHECK(std::isfinite(post.log_density_u(u)));

    auto nan_u = u;
    nan_u[2] = std::numeric_limits<double>::quiet_NaN();
    CHECK(post.log_density_u(nan_u) == -kInf);

    auto inf_u = u;
    inf_u[0] = kInf;
    CHECK(post.log_density_u(inf_u) == -kInf);

    // functional bandwidth far below the distance scale: weights vanish
    auto tiny = u;
    tiny[0] = -1400.0;
    CHECK(post.log_density_u(tiny) == -kInf);

    // layout / context mismatch is rejected up front
    CHECK_THROWS_AS(Posterior(ctx, ParamLayout{}, PriorSpec{}), std::invalid_argument);
}
