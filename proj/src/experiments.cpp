#include "funbayes/experiments.hpp"

#include "funbayes/rng.hpp"
#include "funbayes/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace funbayes {

namespace {

struct Mixture {
    std::vector<double> w, mu, sigma;
};

const Mixture& mixture_for(ErrorLaw law) {
    static const Mixture trimodal{
        {0.45, 0.45, 0.10}, {-1.2, 1.2, 0.0}, {0.6, 0.6, 0.25}};
    static const Mixture claw{
        {0.5, 0.1, 0.1, 0.1, 0.1, 0.1}, {0.0, -1.0, -0.5, 0.0, 0.5, 1.0},
        {1.0, 0.1, 0.1, 0.1, 0.1, 0.1}};
    return law == ErrorLaw::Trimodal ? trimodal : claw;
}

} // namespace

double error_pdf(ErrorLaw law, double x) {
    const Mixture& mix = mixture_for(law);
    double f = 0.0;
    for (std::size_t k = 0; k < mix.w.size(); ++k)
        f += mix.w[k] * normal_pdf((x - mix.mu[k]) / mix.sigma[k]) / mix.sigma[k];
    return f;
}

double draw_error(ErrorLaw law, Rng& rng) {
    const Mixture& mix = mixture_for(law);
    const double u = rng.uniform01();
    double cum = 0.0;
    std::size_t pick = mix.w.size() - 1;
    for (std::size_t k = 0; k < mix.w.size(); ++k) {
        cum += mix.w[k];
        if (u < cum) {
            pick = k;
            break;
        }
    }
    return mix.mu[pick] + mix.sigma[pick] * rng.normal();
}

std::vector<double> sim_grid() {
    std::vector<double> grid(100);
    for (std::size_t v = 0; v < 100; ++v)
        grid[v] = kPi * static_cast<double>(v) / 99.0;
    return grid;
}

Curve make_curve(const CurveCoef& coef, std::span<const double> grid) {
    Curve curve;
    curve.grid.assign(grid.begin(), grid.end());
    curve.values.resize(grid.size());
    for (std::size_t v = 0; v < grid.size(); ++v) {
        const double t = grid[v];
        curve.values[v] = coef.a * std::cos(2.0 * t) + coef.b * std::sin(4.0 * t) +
                          coef.c * (t * t - kPi * t + 2.0 * kPi * kPi / 9.0);
    }
    return curve;
}

std::vector<CurveCoef> gen_coefs(std::size_t n, Rng& rng) {
    std::vector<CurveCoef> coefs(n);
    for (auto& c : coefs) {
        c.a = rng.uniform01();
        c.b = rng.uniform01();
        c.c = rng.uniform01();
    }
    return coefs;
}

double functional_integral(const CurveCoef& coef) {
    const auto integrand = [&coef](double t) {
        const double deriv = -2.0 * coef.a * std::sin(2.0 * t) +
                             4.0 * coef.b * std::cos(4.0 * t) +
                             coef.c * (2.0 * t - kPi);
        return t * std::cos(t) * deriv * deriv;
    };
    return simpson(integrand, 0.0, kPi, 1001);
}

double true_regression(int model, const CurveCoef& coef, double eta, double omega, int gamma,
                       int beta) {
    if (model != 1 && model != 2) throw std::invalid_argument("model must be 1 or 2");
    double m = functional_integral(coef) + eta + static_cast<double>(gamma);
    if (model == 2) m += omega + static_cast<double>(beta);
    return m;
}

void SimConfig::validate() const {
    if (n < 10) throw std::invalid_argument("simulation: n must be at least 10");
    if (model != 1 && model != 2) throw std::invalid_argument("simulation: model must be 1 or 2");
    if (n_replications == 0)
        throw std::invalid_argument("simulation: need at least one replication");
}

std::pair<Dataset, SimTruth> simulate_dataset(const SimConfig& cfg, std::size_t replication) {
    cfg.validate();
    Rng rng = Rng(cfg.seed).derive(replication);
    const std::vector<double> grid = sim_grid();

    Dataset ds;
    ds.kinds.push_back(DiscreteKind::unordered(2));
    if (cfg.model == 2) ds.kinds.push_back(DiscreteKind::ordered(6));
    SimTruth truth;
    ds.obs.reserve(cfg.n);
    truth.m.reserve(cfg.n);
    truth.eps.reserve(cfg.n);

    for (std::size_t i = 0; i < cfg.n; ++i) {
        CurveCoef coef{rng.uniform01(), rng.uniform01(), rng.uniform01()};
        const double eta = rng.normal();
        const double omega = cfg.model == 2 ? rng.exponential(1.0) : 0.0;
        const int gamma = static_cast<int>(rng.uniform_int(0, 1));
        const int beta = cfg.model == 2 ? static_cast<int>(rng.uniform_int(0, 5)) : 0;
        const double eps = draw_error(cfg.law, rng);

        MixedObservation row;
        row.curve = make_curve(coef, grid);
        row.xc.push_back(eta);
        if (cfg.model == 2) row.xc.push_back(omega);
        row.xd.push_back(gamma);
        if (cfg.model == 2) row.xd.push_back(beta);
        const double m = true_regression(cfg.model, coef, eta, omega, gamma, beta);
        row.y = m + eps;
        ds.obs.push_back(std::move(row));
        truth.m.push_back(m);
        truth.eps.push_back(eps);
    }
    ds.validate();
    return {std::move(ds), std::move(truth)};
}

namespace {

AggMetric aggregate(std::span<const double> per_rep) {
    AggMetric agg;
    agg.mean = mean(per_rep);
    agg.sd = per_rep.size() >= 2 ? sample_sd(per_rep) : 0.0;
    return agg;
}

} // namespace

AggMetric mase(const std::vector<std::vector<double>>& true_m,
               const std::vector<std::vector<double>>& fitted) {
    if (true_m.size() != fitted.size() || true_m.empty())
        throw std::invalid_argument("mase: need matching, nonempty replication lists");
    std::vector<double> per_rep(true_m.size());
    for (std::size_t r = 0; r < true_m.size(); ++r) {
        if (true_m[r].size() != fitted[r].size() || true_m[r].empty())
            throw std::invalid_argument("mase: replication length mismatch");
        double acc = 0.0;
        for (std::size_t i = 0; i < true_m[r].size(); ++i) {
            const double e = true_m[r][i] - fitted[r][i];
            acc += e * e;
        }
        per_rep[r] = acc / static_cast<double>(true_m[r].size());
    }
    return aggregate(per_rep);
}

AggMetric mise(ErrorLaw law, const std::vector<std::vector<double>>& fitted_density,
               const GridSpec& grid) {
    if (fitted_density.empty()) throw std::invalid_argument("mise: no replications");
    const auto pts = grid.points();
    const double factor = (grid.hi - grid.lo) / static_cast<double>(grid.count);
    std::vector<double> per_rep(fitted_density.size());
    for (std::size_t r = 0; r < fitted_density.size(); ++r) {
        if (fitted_density[r].size() != pts.size())
            throw std::invalid_argument("mise: density not evaluated on the grid");
        double acc = 0.0;
        for (std::size_t g = 0; g < pts.size(); ++g) {
            const double e = error_pdf(law, pts[g]) - fitted_density[r][g];
            acc += e * e;
        }
        per_rep[r] = factor * acc;
    }
    return aggregate(per_rep);
}

ForecastMetrics msfe_mafe(std::span<const double> y_test, std::span<const double> y_pred) {
    if (y_test.size() != y_pred.size() || y_test.empty())
        throw std::invalid_argument("forecast metrics: need matching nonempty vectors");
    std::vector<double> sq(y_test.size()), ab(y_test.size());
    for (std::size_t i = 0; i < y_test.size(); ++i) {
        const double e = y_test[i] - y_pred[i];
        sq[i] = e * e;
        ab[i] = std::abs(e);
    }
    ForecastMetrics metrics;
    metrics.msfe = mean(sq);
    metrics.mafe = mean(ab);
    metrics.sd_sq = sq.size() >= 2 ? sample_sd(sq) : 0.0;
    metrics.sd_abs = ab.size() >= 2 ? sample_sd(ab) : 0.0;
    return metrics;
}

double coverage(std::span<const double> y, std::span<const double> lo,
                std::span<const double> hi) {
    if (y.size() != lo.size() || y.size() != hi.size() || y.empty())
        throw std::invalid_argument("coverage: need matching nonempty vectors");
    std::size_t inside = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] >= lo[i] && y[i] <= hi[i]) ++inside;
    return static_cast<double>(inside) / static_cast<double>(y.size());
}

std::string method_name(FitMethod method) {
    switch (method) {
    case FitMethod::BayesLocal: return "bayes-local";
    case FitMethod::BayesGlobal: return "bayes-global";
    case FitMethod::Cv: return "cv";
    }
    return "unknown";
}

FitResult fit_model(const FitContext& ctx, FitMethod method, const PriorSpec& prior,
                    const McmcConfig& mcmc, std::size_t cv_budget) {
    FitResult res;
    res.method = method;
    if (method == FitMethod::Cv) {
        const CvResult cv = cv_minimize(ctx, default_cv_bounds(ctx), cv_budget, mcmc.seed);
        res.bw = cv.bw;
    } else {
        const bool localized = method == FitMethod::BayesLocal;
        Posterior post(ctx, ParamLayout::infer(ctx.data(), localized), prior);
        Chain chain = run_chain(post, mcmc);
        ChainSummary summary = summarize(post, chain);
        BandwidthParams bw;
        std::size_t c = 0;
        bw.delta = summary.params[c++].mean;
        bw.h.resize(ctx.p());
        for (std::size_t k = 0; k < ctx.p(); ++k) bw.h[k] = summary.params[c++].mean;
        bw.lambda.resize(ctx.q());
        for (std::size_t s = 0; s < ctx.q(); ++s) bw.lambda[s] = summary.params[c++].mean;
        bw.b = summary.params[c++].mean;
        bw.tau = localized ? summary.params[c++].mean : 0.0;
        res.bw = std::move(bw);
        res.summary = std::move(summary);
        res.chain = std::move(chain);
    }
    NwEvaluator eval(ctx);
    if (eval.fitted(res.bw, res.fitted) >= 0 || eval.loo_residuals(res.bw, res.residuals) >= 0)
        throw std::runtime_error("fit: degenerate weights at the selected bandwidths");
    return res;
}

namespace {

std::uint64_t derive_seed(std::uint64_t base, std::size_t replication, std::size_t salt) {
    Rng rng = Rng(base).derive(replication).derive(salt);
    return rng.next_u64();
}

void run_replications(std::size_t n_reps, std::size_t jobs,
                      const std::function<void(std::size_t)>& body) {
    if (jobs <= 1 || n_reps <= 1) {
        for (std::size_t r = 0; r < n_reps; ++r) body(r);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const std::size_t workers = std::min(jobs, n_reps);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&]() {
            try {
                for (std::size_t r = next.fetch_add(1); r < n_reps; r = next.fetch_add(1))
                    body(r);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n_reps); // stop handing out work
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

} // namespace

StudyResult run_simulation_study(const StudyConfig& cfg) {
    cfg.sim.validate();
    cfg.mcmc.validate();
    if (cfg.methods.empty()) throw std::invalid_argument("study: no methods requested");
    const std::size_t n_reps = cfg.sim.n_replications;
    const auto grid_pts = cfg.density_grid.points();

    StudyResult result;
    result.methods.resize(cfg.methods.size());
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        MethodStudy& ms = result.methods[mi];
        ms.method = cfg.methods[mi];
        ms.true_m.resize(n_reps);
        ms.fitted.resize(n_reps);
        ms.residuals.resize(n_reps);
        ms.density.resize(n_reps);
        ms.bw.resize(n_reps);
    }

    run_replications(n_reps, cfg.jobs, [&](std::size_t r) {
        auto [ds, truth] = simulate_dataset(cfg.sim, r);
        const FitContext ctx =
            FitContext::build(std::move(ds), SemiMetricSpec{SemiMetricSpec::Kind::Deriv, 2, 0});
        for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
            McmcConfig mcmc = cfg.mcmc;
            mcmc.seed = derive_seed(cfg.mcmc.seed, r, mi + 1);
            FitResult fit = fit_model(ctx, cfg.methods[mi], cfg.prior, mcmc, cfg.cv_budget);
            MethodStudy& ms = result.methods[mi];
            ms.true_m[r] = truth.m;
            ms.fitted[r] = std::move(fit.fitted);
            ms.bw[r] = fit.bw;
            if (cfg.methods[mi] != FitMethod::Cv)
                ms.density[r] =
                    error_density_grid(fit.residuals, fit.bw.b, fit.bw.tau, grid_pts);
            ms.residuals[r] = std::move(fit.residuals);
        }
    });

    for (auto& ms : result.methods) {
        ms.mase_value = mase(ms.true_m, ms.fitted);
        if (ms.method != FitMethod::Cv) ms.mise_value = mise(cfg.sim.law, ms.density, cfg.density_grid);
    }
    return result;
}

IrrelevantResult run_irrelevant_study(const IrrelevantConfig& cfg) {
    if (cfg.n < 10) throw std::invalid_argument("irrelevant study: n must be at least 10");
    if (cfg.n_replications == 0)
        throw std::invalid_argument("irrelevant study: need at least one replication");
    cfg.mcmc.validate();
    const std::vector<double> grid = sim_grid();
    const std::size_t n_reps = cfg.n_replications;

    IrrelevantResult result;
    result.rep_medians.resize(n_reps);
    result.rep_residuals.resize(n_reps);
    std::vector<double> rep_sd(n_reps);

    run_replications(n_reps, cfg.jobs, [&](std::size_t r) {
        Rng rng = Rng(cfg.seed).derive(r);
        Dataset ds;
        ds.kinds.push_back(DiscreteKind::unordered(2)); // relevant
        ds.kinds.push_back(DiscreteKind::ordered(6));   // irrelevant
        std::vector<double> noise_col(cfg.n);
        for (std::size_t i = 0; i < cfg.n; ++i) {
            CurveCoef coef{rng.uniform01(), rng.uniform01(), rng.uniform01()};
            const double eta = rng.normal();
            const int gamma = static_cast<int>(rng.uniform_int(0, 1));
            const double eps = draw_error(ErrorLaw::Trimodal, rng);
            const double x_noise = rng.normal();
            const int d_noise = static_cast<int>(rng.uniform_int(0, 5));
            MixedObservation row;
            row.curve = make_curve(coef, grid);
            row.xc = {eta, x_noise};
            row.xd = {gamma, d_noise};
            row.y = true_regression(1, coef, eta, 0.0, gamma, 0) + eps;
            noise_col[i] = x_noise;
            ds.obs.push_back(std::move(row));
        }
        ds.validate();
        rep_sd[r] = sample_sd(noise_col);

        const FitContext ctx =
            FitContext::build(std::move(ds), SemiMetricSpec{SemiMetricSpec::Kind::Deriv, 2, 0});
        Posterior post(ctx, ParamLayout::infer(ctx.data(), false), cfg.prior);
        McmcConfig mcmc = cfg.mcmc;
        mcmc.seed = derive_seed(cfg.mcmc.seed, r, 7);
        const Chain chain = run_chain(post, mcmc);
        const Eigen::MatrixXd nat = natural_draws(post.layout(), chain);
        std::vector<double> medians(static_cast<std::size_t>(nat.cols()));
        std::vector<double> col(static_cast<std::size_t>(nat.rows()));
        for (std::size_t c = 0; c < medians.size(); ++c) {
            for (std::size_t row_i = 0; row_i < col.size(); ++row_i)
                col[row_i] = nat(static_cast<Eigen::Index>(row_i), static_cast<Eigen::Index>(c));
            medians[c] = quantile(col, 0.5);
        }
        BandwidthParams bw_med;
        bw_med.delta = medians[0];
        bw_med.h = {medians[1], medians[2]};
        bw_med.lambda = {medians[3], medians[4]};
        bw_med.b = medians[5];
        result.rep_residuals[r] = post.residuals_at(bw_med);
        result.rep_medians[r] = std::move(medians);
    });

    result.names = {"delta", "h1", "h2", "lambda1", "lambda2", "b"};
    const std::size_t n_params = result.names.size();
    if (result.rep_medians.front().size() != n_params)
        throw std::logic_error("irrelevant study: unexpected parameter count");
    result.median.resize(n_params);
    result.p10.resize(n_params);
    result.p90.resize(n_params);
    std::vector<double> across(n_reps);
    for (std::size_t c = 0; c < n_params; ++c) {
        for (std::size_t r = 0; r < n_reps; ++r) across[r] = result.rep_medians[r][c];
        result.median[c] = quantile(across, 0.5);
        result.p10[c] = quantile(across, 0.10);
        result.p90[c] = quantile(across, 0.90);
    }
    result.irrelevant_cont_sd = mean(rep_sd);
    return result;
}

ApplicationResult run_application(const ApplicationConfig& cfg) {
    cfg.mcmc.validate();
    if (!(cfg.interval > 0.0 && cfg.interval < 1.0))
        throw std::invalid_argument("application: interval width must lie in (0, 1)");
    auto [train, test] = split(cfg.full, cfg.n_train);
    const FitContext ctx = FitContext::build(std::move(train), cfg.metric);
    Posterior post(ctx, ParamLayout::infer(ctx.data(), cfg.localized), cfg.prior);
    Chain chain = run_chain(post, cfg.mcmc);

    ApplicationResult result;
    result.summary = summarize(post, chain);
    std::size_t c = 0;
    result.bw.delta = result.summary.params[c++].mean;
    result.bw.h.resize(ctx.p());
    for (std::size_t k = 0; k < ctx.p(); ++k) result.bw.h[k] = result.summary.params[c++].mean;
    result.bw.lambda.resize(ctx.q());
    for (std::size_t s = 0; s < ctx.q(); ++s)
        result.bw.lambda[s] = result.summary.params[c++].mean;
    result.bw.b = result.summary.params[c++].mean;
    result.bw.tau = cfg.localized ? result.summary.params[c++].mean : 0.0;

    if (cfg.compute_evidence)
        result.evidence = marginal_likelihood(post, chain, cfg.evidence_draws, cfg.mcmc.seed + 1);

    result.pred = predict(ctx, result.bw, test);
    result.residuals = post.residuals_at(result.bw);
    const std::vector<double>& resid = result.residuals;
    if (resid.empty())
        throw std::runtime_error("application: degenerate weights at the posterior mean");
    const double tail = 0.5 * (1.0 - cfg.interval);
    const double q_lo =
        error_cdf_inverse(resid, result.bw.b, result.bw.tau, tail, cfg.quantile_grid);
    const double q_hi =
        error_cdf_inverse(resid, result.bw.b, result.bw.tau, 1.0 - tail, cfg.quantile_grid);
    result.lower.resize(result.pred.size());
    result.upper.resize(result.pred.size());
    for (std::size_t i = 0; i < result.pred.size(); ++i) {
        result.lower[i] = result.pred[i] + q_lo;
        result.upper[i] = result.pred[i] + q_hi;
    }
    const std::vector<double> y_test = test.responses();
    result.forecast = msfe_mafe(y_test, result.pred);
    result.coverage_rate = coverage(y_test, result.lower, result.upper);
    return result;
}

Dataset make_surrogate(std::uint64_t seed) {
    constexpr std::size_t kRows = 215;
    constexpr std::size_t kGrid = 100;
    Rng rng(seed);
    std::vector<double> grid(kGrid);
    for (std::size_t v = 0; v < kGrid; ++v)
        grid[v] = static_cast<double>(v) / static_cast<double>(kGrid - 1);

    Dataset ds;
    ds.obs.reserve(kRows);
    for (std::size_t i = 0; i < kRows; ++i) {
        // Response: bimodal "content" value, like a lean/fatty split.
        double fat = rng.uniform01() < 0.55 ? 10.0 + 3.5 * rng.normal()
                                            : 27.0 + 7.0 * rng.normal();
        fat = std::clamp(fat, 1.5, 52.0);
        // The curves and covariates see a noisy version of the response, so
        // the distortion scale below is the irreducible forecast error.
        const double latent = fat + 1.05 * rng.normal();
        const double moisture = 76.0 - 0.85 * latent + 1.2 * rng.normal();
        const double protein = 20.0 - 0.18 * latent + 1.0 * rng.normal();
        const double idio = rng.normal();

        MixedObservation row;
        row.curve.grid = grid;
        row.curve.values.resize(kGrid);
        for (std::size_t v = 0; v < kGrid; ++v) {
            const double t = grid[v];
            const double base = 2.6 + 0.45 * t + 0.30 * std::sin(2.6 * t + 0.4);
            const double bump1 = std::exp(-0.5 * (t - 0.55) * (t - 0.55) / (0.12 * 0.12));
            const double bump2 = std::exp(-0.5 * (t - 0.25) * (t - 0.25) / (0.15 * 0.15));
            const double wave = std::cos(5.5 * t + 1.1);
            row.curve.values[v] = base + 0.012 * latent * bump1 +
                                  0.004 * (moisture - 60.0) * bump2 + 0.015 * idio * wave;
        }
        row.xc = {moisture, protein};
        row.y = fat;
        ds.obs.push_back(std::move(row));
    }
    ds.validate();
    return ds;
}

} // namespace funbayes
