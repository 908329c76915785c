#include <doctest.h>

#include <cmath>
#include <vector>

#include "funbayes/experiments.hpp"
#include "funbayes/rng.hpp"
#include "funbayes/stats.hpp"

using namespace funbayes;

TEST_CASE("curve family evaluates its three building blocks") {
    const std::vector<double> grid = {0.0, kPi / 8.0, kPi / 2.0, kPi};

    const Curve cos_part = make_curve({1.0, 0.0, 0.0}, grid);
    CHECK(cos_part.values[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cos_part.values[2] == doctest::Approx(-1.0).epsilon(1e-15)); // cos(pi)
    CHECK(cos_part.values[3] == doctest::Approx(1.0).epsilon(1e-12));  // cos(2 pi)

    const Curve sin_part = make_curve({0.0, 1.0, 0.0}, grid);
    CHECK(sin_part.values[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(sin_part.values[1] == doctest::Approx(1.0).epsilon(1e-12)); // sin(pi/2)
    CHECK(sin_part.values[3] == doctest::Approx(0.0).epsilon(1e-12)); // sin(4 pi)

    const Curve quad_part = make_curve({0.0, 0.0, 1.0}, grid);
    CHECK(quad_part.values[0] == doctest::Approx(2.193245422464302).epsilon(1e-14));

    const Curve zero = make_curve({0.0, 0.0, 0.0}, grid);
    for (double v : zero.values) CHECK(v == 0.0);

    const auto sg = sim_grid();
    REQUIRE(sg.size() == 100);
    CHECK(sg.front() == 0.0);
    CHECK(sg.back() == doctest::Approx(kPi).epsilon(1e-15));
    CHECK(sg[1] - sg[0] == doctest::Approx(kPi / 99.0).epsilon(1e-14));
}

TEST_CASE("weighted derivative integral reproduces quadrature references") {
    CHECK(functional_integral({1.0, 0.0, 0.0}) ==
          doctest::Approx(-3.6977777777777776).epsilon(1e-9));
    CHECK(functional_integral({0.0, 0.0, 0.0}) == 0.0);
    CHECK(functional_integral({0.3, 0.6, 0.9}) ==
          doctest::Approx(-17.709950947141632).epsilon(1e-9));
    CHECK(functional_integral({0.0, 0.0, 1.0}) ==
          doctest::Approx(-11.217626406536153).epsilon(1e-9));
    CHECK(functional_integral({0.0, 1.0, 0.0}) ==
          doctest::Approx(-16.262030738221203).epsilon(1e-9));
}

TEST_CASE("regression truth composes the functional term with the covariates") {
    const CurveCoef coef{0.3, 0.6, 0.9};
    const double base = functional_integral(coef);
    CHECK(true_regression(1, coef, 0.7, 0.0, 1, 0) ==
          doctest::Approx(base + 0.7 + 1.0).epsilon(1e-12));
    // the second model adds the exponential and ordered terms on top
    CHECK(true_regression(2, coef, 0.7, 1.3, 1, 4) -
              true_regression(1, coef, 0.7, 0.0, 1, 0) ==
          doctest::Approx(1.3 + 4.0).epsilon(1e-12));
    CHECK_THROWS_AS(true_regression(3, coef, 0, 0, 0, 0), std::invalid_argument);
}

TEST_CASE("error mixtures match closed-form densities and moments") {
    CHECK(error_pdf(ErrorLaw::Trimodal, 0.0) ==
          doctest::Approx(0.2405633619303552).epsilon(1e-13));
    CHECK(error_pdf(ErrorLaw::Trimodal, 1.2) ==
          doctest::Approx(0.2993086674900346).epsilon(1e-13));
    CHECK(error_pdf(ErrorLaw::Claw, 0.0) ==
          doctest::Approx(0.5984163940411785).epsilon(1e-13));

    for (double x : {0.3, 1.1, 2.7}) {
        CHECK(error_pdf(ErrorLaw::Trimodal, x) ==
              doctest::Approx(error_pdf(ErrorLaw::Trimodal, -x)).epsilon(1e-15));
        CHECK(error_pdf(ErrorLaw::Claw, x) ==
              doctest::Approx(error_pdf(ErrorLaw::Claw, -x)).epsilon(1e-15));
    }

    for (ErrorLaw law : {ErrorLaw::Trimodal, ErrorLaw::Claw}) {
        const double mass =
            simpson([&](double x) { return error_pdf(law, x); }, -9.0, 9.0, 4001);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    }

    Rng rng(2);
    const std::size_t n = 1000000;
    double acc = 0.0, acc2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = draw_error(ErrorLaw::Trimodal, rng);
        acc += e;
        acc2 += e * e;
    }
    const double m1 = acc / static_cast<double>(n);
    const double m2 = acc2 / static_cast<double>(n) - m1 * m1;
    CHECK(m1 == doctest::Approx(0.0).epsilon(0.005));
    CHECK(m2 == doctest::Approx(1.62625).epsilon(0.01));
}

TEST_CASE("simulated datasets carry the declared shape and exact decomposition") {
    SimConfig cfg;
    cfg.n = 20;
    cfg.model = 1;
    cfg.seed = 5;
    auto [ds1, truth1] = simulate_dataset(cfg, 0);
    CHECK(ds1.n() == 20);
    CHECK(ds1.p() == 1);
    CHECK(ds1.q() == 1);
    CHECK(ds1.kinds[0] == DiscreteKind::unordered(2));
    REQUIRE(truth1.m.size() == 20);
    for (std::size_t i = 0; i < ds1.n(); ++i)
        CHECK(ds1.obs[i].y == truth1.m[i] + truth1.eps[i]); // exact: same addition

    cfg.model = 2;
    cfg.law = ErrorLaw::Claw;
    auto [ds2, truth2] = simulate_dataset(cfg, 3);
    CHECK(ds2.p() == 2);
    CHECK(ds2.q() == 2);
    CHECK(ds2.kinds[1] == DiscreteKind::ordered(6));
    for (const auto& o : ds2.obs) {
        CHECK(o.xc[1] >= 0.0); // exponential regressor
        CHECK(o.xd[1] >= 0);
        CHECK(o.xd[1] <= 5);
    }

    // replication stream is reproducible and replication-indexed
    auto [ds1_again, truth1_again] = simulate_dataset(SimConfig{20, 1, ErrorLaw::Trimodal, 20, 5}, 0);
    CHECK(ds1_again.responses() == ds1.responses());
    CHECK(truth1_again.m == truth1.m);
    auto [ds_other, truth_other] = simulate_dataset(SimConfig{20, 1, ErrorLaw::Trimodal, 20, 5}, 1);
    CHECK(ds_other.responses() != ds1.responses());
    CHECK(truth_other.m.size() == 20);

    SimConfig bad;
    bad.n = 5;
    CHECK_THROWS_AS(simulate_dataset(bad, 0), std::invalid_argument);
}

TEST_CASE("fit-error aggregation over replications") {
    // perfect fit
    const std::vector<std::vector<double>> truth = {{1.0, 2.0}, {3.0, -1.0}};
    CHECK(mase(truth, truth).mean == 0.0);
    CHECK(mase(truth, truth).sd == 0.0);

    // single replication with errors (1, -1): mean squared error 1, no spread
    const AggMetric single = mase({{1.0, 2.0}}, {{0.0, 3.0}});
    CHECK(single.mean == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(single.sd == 0.0);

    // two replications with per-replication errors 1 and 3
    const AggMetric both = mase({{1.0, 2.0}, {0.0, 0.0}}, {{0.0, 3.0}, {1.0, std::sqrt(5.0)}});
    CHECK(both.mean == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(both.sd == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    CHECK_THROWS_AS(mase({{1.0}}, {{1.0, 2.0}}), std::invalid_argument);
    CHECK_THROWS_AS(mase({}, {}), std::invalid_argument);
}

TEST_CASE("density-error aggregation against the generating mixture") {
    const GridSpec grid{-5.0, 5.0, 1001};
    const auto pts = grid.points();

    // feeding back the true density gives zero
    std::vector<double> exact(pts.size());
    for (std::size_t g = 0; g < pts.size(); ++g) exact[g] = error_pdf(ErrorLaw::Trimodal, pts[g]);
    CHECK(mise(ErrorLaw::Trimodal, {exact}, grid).mean == 0.0);

    // an all-zero estimate integrates the squared truth
    const std::vector<std::vector<double>> zero = {std::vector<double>(pts.size(), 0.0)};
    const AggMetric worst = mise(ErrorLaw::Trimodal, zero, grid);
    CHECK(worst.mean == doctest::Approx(0.2250590529590257).epsilon(1e-12));
    // close to the exact integral of the squared density, 0.2252841120119849,
    // and stable when the grid is refined
    CHECK(worst.mean == doctest::Approx(0.2252841120119849).epsilon(0.005));
    const GridSpec fine{-5.0, 5.0, 2001};
    const std::vector<std::vector<double>> zero_fine = {std::vector<double>(2001, 0.0)};
    CHECK(mise(ErrorLaw::Trimodal, zero_fine, fine).mean ==
          doctest::Approx(worst.mean).epsilon(0.01));

    CHECK_THROWS_AS(mise(ErrorLaw::Trimodal, {std::vector<double>(7, 0.0)}, grid),
                    std::invalid_argument);
}

TEST_CASE("forecast metrics and interval coverage") {
    const std::vector<double> y = {3.0, 0.0};
    const std::vector<double> pred = {0.0, 4.0}; // errors 3 and -4
    const ForecastMetrics fm = msfe_mafe(y, pred);
    CHECK(fm.msfe == doctest::Approx(12.5).epsilon(1e-15));
    CHECK(fm.mafe == doctest::Approx(3.5).epsilon(1e-15));
    CHECK(fm.sd_sq == doctest::Approx(std::sqrt(24.5)).epsilon(1e-12));
    CHECK(fm.sd_abs == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));

    const ForecastMetrics one = msfe_mafe(std::vector<double>{2.0}, std::vector<double>{1.0});
    CHECK(one.msfe == 1.0);
    CHECK(one.sd_sq == 0.0);
    CHECK_THROWS_AS(msfe_mafe(y, std::vector<double>{1.0}), std::invalid_argument);

    const std::vector<double> lo = {0.0, -1.0, 1.0};
    const std::vector<double> hi = {1.0, 1.0, 2.0};
    CHECK(coverage(std::vector<double>{0.5, 0.0, 1.5}, lo, hi) == 1.0);
    CHECK(coverage(std::vector<double>{2.0, 3.0, -1.0}, lo, hi) == 0.0);
    // closed intervals: endpoints count as covered
    CHECK(coverage(std::vector<double>{1.0, -1.0, 2.5}, lo, hi) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(coverage(lo, lo, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("single-fit pipeline exposes point estimates for each method") {
    SimConfig sim;
    sim.n = 20;
    sim.seed = 31;
    auto [ds, truth] = simulate_dataset(sim, 0);
    const FitContext ctx =
        FitContext::build(std::move(ds), SemiMetricSpec{SemiMetricSpec::Kind::Deriv, 2, 0});

    McmcConfig mcmc;
    mcmc.burn_in = 200;
    mcmc.n_record = 1000;
    mcmc.seed = 9;

    const FitResult cv = fit_model(ctx, FitMethod::Cv, PriorSpec{}, mcmc);
    CHECK(method_name(cv.method) == "cv");
    CHECK(cv.bw.b == 1.0);
    CHECK(cv.bw.tau == 0.0);
    CHECK_FALSE(cv.chain.has_value());
    CHECK(cv.fitted.size() == 20);
    CHECK(cv.residuals.size() == 20);

    const FitResult local = fit_model(ctx, FitMethod::BayesLocal, PriorSpec::parse("ig:1:0.05"),
                                      mcmc);
    CHECK(method_name(local.method) == "bayes-local");
    REQUIRE(local.summary.has_value());
    REQUIRE(local.chain.has_value());
    CHECK(local.bw.delta > 0.0);
    CHECK(local.bw.h.size() == 1);
    CHECK(local.bw.lambda.size() == 1);
    CHECK(local.bw.tau > 0.0);
    CHECK(local.bw.tau < 1.0);
    CHECK(local.summary->params.size() == 5);

    const FitResult global = fit_model(ctx, FitMethod::BayesGlobal, PriorSpec::parse("ig:1:0.05"),
                                       mcmc);
    CHECK(global.bw.tau == 0.0);
    CHECK(global.summary->params.size() == 4);
}

TEST_CASE("replicated study aggregates all requested methods") {
    StudyConfig cfg;
    cfg.sim.n = 15;
    cfg.sim.n_replications = 2;
    cfg.sim.seed = 77;
    cfg.prior = PriorSpec::parse("ig:1:0.05");
    cfg.mcmc.burn_in = 150;
    cfg.mcmc.n_record = 1000;
    cfg.methods = {FitMethod::BayesLocal, FitMethod::Cv};
    cfg.cv_budget = 300;
    cfg.jobs = 2;

    const StudyResult result = run_simulation_study(cfg);
    REQUIRE(result.methods.size() == 2);

    const MethodStudy& bayes = result.methods[0];
    CHECK(bayes.true_m.size() == 2);
    CHECK(bayes.fitted[0].size() == 15);
    CHECK(bayes.density[0].size() == 1001);
    CHECK(bayes.mase_value.mean > 0.0);
    CHECK(bayes.mise_value.mean > 0.0);
    CHECK(bayes.mise_value.mean < 0.2250590529590257); // beats the zero estimate

    const MethodStudy& cv = result.methods[1];
    CHECK(cv.density[0].empty());
    CHECK(cv.mise_value.mean == 0.0);
    CHECK(cv.mase_value.mean > 0.0);
    CHECK(cv.bw[0].b == 1.0);

    // same configuration, serial execution: replication seeds do not depend
    // on scheduling
    StudyConfig serial = cfg;
    serial.jobs = 1;
    const StudyResult again = run_simulation_study(serial);
    CHECK(again.methods[0].mase_value.mean == bayes.mase_value.mean);
    CHECK(again.methods[1].bw[1].delta == cv.bw[1].delta);
}

TEST_CASE("irrelevant-regressor study reports per-parameter medians") {
    IrrelevantConfig cfg;
    cfg.n = 30;
    cfg.n_replications = 2;
    cfg.seed = 4;
    cfg.prior = PriorSpec::parse("ig:1:0.05");
    cfg.mcmc.burn_in = 150;
    cfg.mcmc.n_record = 1000;
    cfg.jobs = 2;

    const IrrelevantResult result = run_irrelevant_study(cfg);
    CHECK(result.names ==
          std::vector<std::string>{"delta", "h1", "h2", "lambda1", "lambda2", "b"});
    REQUIRE(result.rep_medians.size() == 2);
    CHECK(result.rep_medians[0].size() == 6);
    for (double v : result.median) CHECK(v > 0.0);
    CHECK(result.median[3] < 0.5);  // unordered kernel bound
    CHECK(result.median[4] <= 1.0); // ordered kernel bound
    CHECK(result.irrelevant_cont_sd == doctest::Approx(1.0).epsilon(0.4));
}

TEST_CASE("surrogate spectra behave like a lab dataset") {
    const Dataset ds = make_surrogate(1);
    CHECK(ds.n() == 215);
    CHECK(ds.p() == 2);
    CHECK(ds.q() == 0);
    CHECK(ds.grid().size() == 100);
    CHECK(ds.grid().front() == 0.0);
    CHECK(ds.grid().back() == 1.0);
    CHECK_NOTHROW(ds.validate());

    const auto y = ds.responses();
    const double sd = sample_sd(y);
    CHECK(sd > 3.0);
    CHECK(sd < 30.0);
    for (double v : y) {
        CHECK(v >= 1.5);
        CHECK(v <= 52.0);
    }

    const Dataset again = make_surrogate(1);
    CHECK(again.responses() == y);
    CHECK(make_surrogate(2).responses() != y);

    // thresholding the response yields the binary group used downstream
    const Dataset grouped = derive_binary_group(ds, 20.0);
    CHECK(grouped.q() == 1);
    std::size_t lean = 0;
    for (const auto& o : grouped.obs) lean += o.xd[0] == 0;
    CHECK(lean > 40);
    CHECK(lean < 175);
}

TEST_CASE("application pipeline forecasts a held-out block with intervals") {
    ApplicationConfig cfg;
    cfg.full = derive_binary_group(make_surrogate(3), 20.0);
    cfg.n_train = 160;
    cfg.prior = PriorSpec::parse("ig:1:0.05");
    cfg.localized = true;
    cfg.mcmc.burn_in = 200;
    cfg.mcmc.n_record = 1000;
    cfg.mcmc.seed = 11;
    cfg.compute_evidence = false;

    const ApplicationResult result = run_application(cfg);
    REQUIRE(result.pred.size() == 55);
    CHECK_FALSE(result.evidence.has_value());
    CHECK(result.summary.params.size() == 6); // delta, h1, h2, lambda1, b, tau
    for (std::size_t i = 0; i < result.pred.size(); ++i) {
        CHECK(result.lower[i] < result.pred[i]);
        CHECK(result.pred[i] < result.upper[i]);
    }
    CHECK(result.forecast.msfe > 0.0);
    CHECK(result.forecast.mafe > 0.0);
    CHECK(result.coverage_rate >= 0.0);
    CHECK(result.coverage_rate <= 1.0);
    CHECK(result.coverage_rate > 0.5); // intervals are not vacuous
}
