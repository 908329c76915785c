#include "funbayes/regression.hpp"

#include "funbayes/rng.hpp"
#include "funbayes/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace funbayes {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

} // namespace

FitContext FitContext::build(Dataset ds, const SemiMetricSpec& spec) {
    ds.validate();
    FitContext ctx;
    ctx.metric_ = SemiMetric::fit(spec, ds);
    ctx.dists_ = pairwise(ctx.metric_, ds);
    ctx.data_ = std::move(ds);
    const std::size_t n = ctx.data_.n();
    ctx.y_ = ctx.data_.responses();

    ctx.d2_.resize(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double d = ctx.dists_.entries(i, j);
            ctx.d2_[i * n + j] = d * d;
        }

    ctx.cdiff2_.resize(ctx.data_.p());
    for (std::size_t k = 0; k < ctx.data_.p(); ++k) {
        auto& table = ctx.cdiff2_[k];
        table.resize(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double diff = ctx.data_.obs[j].xc[k] - ctx.data_.obs[i].xc[k];
                table[i * n + j] = diff * diff;
            }
    }

    ctx.ddiff_.resize(ctx.data_.q());
    for (std::size_t s = 0; s < ctx.data_.q(); ++s) {
        auto& table = ctx.ddiff_[s];
        table.resize(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const int diff = std::abs(ctx.data_.obs[j].xd[s] - ctx.data_.obs[i].xd[s]);
                table[i * n + j] = static_cast<std::uint8_t>(diff);
            }
    }
    return ctx;
}

namespace {

// Shared weighted-average core. The exponent q_j and discrete factor disc_j
// must already be filled for every training index; sums run in ascending j so
// the batched and single-point paths agree to the last bit.
std::optional<double> weighted_average(std::span<const double> q, std::span<const double> disc,
                                       std::span<const double> y, std::ptrdiff_t exclude) {
    const std::size_t n = y.size();
    double q_min = kInf;
    for (std::size_t j = 0; j < n; ++j) {
        if (static_cast<std::ptrdiff_t>(j) == exclude) continue;
        q_min = std::min(q_min, q[j]);
    }
    if (!std::isfinite(q_min)) return std::nullopt;
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (static_cast<std::ptrdiff_t>(j) == exclude) continue;
        const double w = std::exp(-0.5 * (q[j] - q_min)) * disc[j];
        num += w * y[j];
        den += w;
    }
    if (den <= 0.0 || !std::isfinite(den)) return std::nullopt;
    return num / den;
}

// lambda_pow[s][a] = kernel value at absolute code distance a; the sequence of
// multiplications matches li_racine so a table lookup reproduces the direct
// computation exactly.
void fill_lambda_tables(const std::vector<DiscreteKind>& kinds, std::span<const double> lambda,
                        std::vector<std::vector<double>>& tables) {
    tables.resize(kinds.size());
    for (std::size_t s = 0; s < kinds.size(); ++s) {
        const int levels = kinds[s].levels;
        auto& t = tables[s];
        t.assign(static_cast<std::size_t>(levels), 0.0);
        if (kinds[s].order == DiscreteKind::Order::Unordered) {
            t[0] = 1.0 - lambda[s];
            for (int a = 1; a < levels; ++a) t[static_cast<std::size_t>(a)] = lambda[s];
        } else {
            t[0] = 1.0;
            for (int a = 1; a < levels; ++a)
                t[static_cast<std::size_t>(a)] = t[static_cast<std::size_t>(a - 1)] * lambda[s];
        }
    }
}

} // namespace

std::optional<double> nw_estimate(const FitContext& ctx, const BandwidthParams& bw,
                                  std::span<const double> dists_to_train,
                                  std::span<const double> xc_target,
                                  std::span<const int> xd_target, std::ptrdiff_t exclude) {
    const std::size_t n = ctx.n();
    bw.validate(ctx.data().kinds);
    if (dists_to_train.size() != n)
        throw std::invalid_argument("nw_estimate: distance vector length mismatch");
    if (xc_target.size() != ctx.p() || xd_target.size() != ctx.q())
        throw std::invalid_argument("nw_estimate: target regressor dimension mismatch");

    const double inv_d2 = 1.0 / (bw.delta * bw.delta);
    std::vector<double> inv_h2(ctx.p());
    for (std::size_t k = 0; k < ctx.p(); ++k) inv_h2[k] = 1.0 / (bw.h[k] * bw.h[k]);
    std::vector<std::vector<double>> lambda_pow;
    fill_lambda_tables(ctx.data().kinds, bw.lambda, lambda_pow);

    std::vector<double> q(n), disc(n, 1.0);
    for (std::size_t j = 0; j < n; ++j) q[j] = dists_to_train[j] * dists_to_train[j] * inv_d2;
    for (std::size_t k = 0; k < ctx.p(); ++k) {
        const double inv = inv_h2[k];
        const double target = xc_target[k];
        for (std::size_t j = 0; j < n; ++j) {
            const double diff = ctx.data().obs[j].xc[k] - target;
            q[j] += diff * diff * inv;
        }
    }
    for (std::size_t s = 0; s < ctx.q(); ++s) {
        const auto& table = lambda_pow[s];
        const int target = xd_target[s];
        for (std::size_t j = 0; j < n; ++j) {
            const int a = std::abs(ctx.data().obs[j].xd[s] - target);
            disc[j] *= table[static_cast<std::size_t>(a)];
        }
    }
    return weighted_average(q, disc, ctx.responses(), exclude);
}

NwEvaluator::NwEvaluator(const FitContext& ctx) : ctx_(&ctx) {
    q_.resize(ctx.n());
    disc_.resize(ctx.n());
    inv_h2_.resize(ctx.p());
}

std::ptrdiff_t NwEvaluator::fitted_impl(const BandwidthParams& bw, bool leave_one_out,
                                        std::vector<double>& out) {
    const FitContext& ctx = *ctx_;
    const std::size_t n = ctx.n();
    bw.validate(ctx.data().kinds);
    out.resize(n);

    const double inv_d2 = 1.0 / (bw.delta * bw.delta);
    for (std::size_t k = 0; k < ctx.p(); ++k) inv_h2_[k] = 1.0 / (bw.h[k] * bw.h[k]);
    fill_lambda_tables(ctx.data().kinds, bw.lambda, lambda_pow_);

    const std::span<const double> y = ctx.responses();
    for (std::size_t i = 0; i < n; ++i) {
        const double* d2_row = ctx.dist_sq().data() + i * n;
        for (std::size_t j = 0; j < n; ++j) q_[j] = d2_row[j] * inv_d2;
        for (std::size_t k = 0; k < ctx.p(); ++k) {
            const double* cd_row = ctx.cont_diff_sq(k).data() + i * n;
            const double inv = inv_h2_[k];
            for (std::size_t j = 0; j < n; ++j) q_[j] += cd_row[j] * inv;
        }
        std::fill(disc_.begin(), disc_.end(), 1.0);
        for (std::size_t s = 0; s < ctx.q(); ++s) {
            const std::uint8_t* dd_row = ctx.disc_absdiff(s).data() + i * n;
            const auto& table = lambda_pow_[s];
            for (std::size_t j = 0; j < n; ++j) disc_[j] *= table[dd_row[j]];
        }
        const std::ptrdiff_t exclude = leave_one_out ? static_cast<std::ptrdiff_t>(i) : -1;
        const auto value = weighted_average(q_, disc_, y, exclude);
        if (!value) return static_cast<std::ptrdiff_t>(i);
        out[i] = *value;
    }
    return -1;
}

std::ptrdiff_t NwEvaluator::loo_fitted(const BandwidthParams& bw, std::vector<double>& out) {
    return fitted_impl(bw, true, out);
}

std::ptrdiff_t NwEvaluator::fitted(const BandwidthParams& bw, std::vector<double>& out) {
    return fitted_impl(bw, false, out);
}

std::ptrdiff_t NwEvaluator::loo_residuals(const BandwidthParams& bw, std::vector<double>& out) {
    const std::ptrdiff_t bad = fitted_impl(bw, true, out);
    if (bad >= 0) return bad;
    const std::span<const double> y = ctx_->responses();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = y[i] - out[i];
    return -1;
}

LooFit nw_loo_fitted(const FitContext& ctx, const BandwidthParams& bw) {
    LooFit fit;
    NwEvaluator eval(ctx);
    fit.bad_index = eval.loo_fitted(bw, fit.values);
    return fit;
}

LooFit residuals(const FitContext& ctx, const BandwidthParams& bw) {
    LooFit fit;
    NwEvaluator eval(ctx);
    fit.bad_index = eval.loo_residuals(bw, fit.values);
    return fit;
}

double cv_objective(const FitContext& ctx, const BandwidthParams& bw) {
    const LooFit res = residuals(ctx, bw);
    if (!res.ok()) return kInf;
    double sum = 0.0;
    for (const double r : res.values) sum += r * r;
    return sum;
}

CvBounds default_cv_bounds(const FitContext& ctx) {
    CvBounds bounds;
    std::vector<double> positive;
    const std::size_t n = ctx.n();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = ctx.distances().entries(i, j);
            if (d > 0.0) positive.push_back(d);
        }
    if (positive.empty()) {
        bounds.delta_lo = 1e-3;
        bounds.delta_hi = 1.0;
    } else {
        bounds.delta_lo = std::max(1e-8, 0.05 * quantile(positive, 0.25));
        bounds.delta_hi = 4.0 * *std::max_element(positive.begin(), positive.end());
    }
    bounds.h.resize(ctx.p());
    for (std::size_t k = 0; k < ctx.p(); ++k) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = ctx.data().obs[i].xc[k];
        const double sd = sample_sd(col);
        if (sd > 0.0)
            bounds.h[k] = {std::max(1e-8, 0.02 * sd), 50.0 * sd};
        else
            bounds.h[k] = {1e-3, 10.0};
    }
    return bounds;
}

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

double logit(double u) { return std::log(u / (1.0 - u)); }

// Search coordinates: log delta, log h_k, logit(lambda_s / bound).
BandwidthParams decode_point(const FitContext& ctx, std::span<const double> x) {
    BandwidthParams bw;
    bw.delta = std::exp(x[0]);
    bw.h.resize(ctx.p());
    for (std::size_t k = 0; k < ctx.p(); ++k) bw.h[k] = std::exp(x[1 + k]);
    bw.lambda.resize(ctx.q());
    for (std::size_t s = 0; s < ctx.q(); ++s) {
        const double bound = ctx.data().kinds[s].lambda_bound();
        double lam = bound * sigmoid(x[1 + ctx.p() + s]);
        lam = std::clamp(lam, 1e-12, bound - 1e-12);
        bw.lambda[s] = lam;
    }
    bw.b = 1.0;
    bw.tau = 0.0;
    return bw;
}

struct NelderMead {
    const FitContext& ctx;
    std::size_t evals = 0;
    std::size_t max_evals;

    double eval(std::span<const double> x) {
        ++evals;
        const double f = cv_objective(ctx, decode_point(ctx, x));
        return std::isnan(f) ? kInf : f;
    }

    // Standard simplex iteration; returns best (f, x) found from the start.
    std::pair<double, std::vector<double>> run(std::vector<double> start) {
        const std::size_t d = start.size();
        std::vector<std::vector<double>> simplex(d + 1, start);
        std::vector<double> f(d + 1);
        for (std::size_t i = 0; i < d; ++i) simplex[i + 1][i] += 0.5;
        for (std::size_t i = 0; i <= d; ++i) f[i] = eval(simplex[i]);

        std::vector<std::size_t> order(d + 1);
        std::vector<double> centroid(d), xr(d), xe(d), xc(d);
        while (evals < max_evals) {
            for (std::size_t i = 0; i <= d; ++i) order[i] = i;
            std::sort(order.begin(), order.end(),
                      [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
            const std::size_t best = order[0], worst = order[d], second = order[d - 1];
            if (std::isfinite(f[best]) && std::isfinite(f[worst]) &&
                f[worst] - f[best] < 1e-10 * (1.0 + std::abs(f[best])))
                break;

            std::fill(centroid.begin(), centroid.end(), 0.0);
            for (std::size_t i = 0; i <= d; ++i) {
                if (i == worst) continue;
                for (std::size_t k = 0; k < d; ++k) centroid[k] += simplex[i][k];
            }
            for (std::size_t k = 0; k < d; ++k) centroid[k] /= static_cast<double>(d);

            for (std::size_t k = 0; k < d; ++k) xr[k] = 2.0 * centroid[k] - simplex[worst][k];
            const double fr = eval(xr);
            if (fr < f[order[0]]) {
                for (std::size_t k = 0; k < d; ++k) xe[k] = 3.0 * centroid[k] - 2.0 * simplex[worst][k];
                const double fe = eval(xe);
                if (fe < fr) {
                    simplex[worst] = xe;
                    f[worst] = fe;
                } else {
                    simplex[worst] = xr;
                    f[worst] = fr;
                }
            } else if (fr < f[second]) {
                simplex[worst] = xr;
                f[worst] = fr;
            } else {
                const bool outside = fr < f[worst];
                for (std::size_t k = 0; k < d; ++k)
                    xc[k] = outside ? 0.5 * (centroid[k] + xr[k])
                                    : 0.5 * (centroid[k] + simplex[worst][k]);
                const double fc = eval(xc);
                if (fc < std::min(fr, f[worst])) {
                    simplex[worst] = xc;
                    f[worst] = fc;
                } else {
                    for (std::size_t i = 0; i <= d; ++i) {
                        if (i == best) continue;
                        for (std::size_t k = 0; k < d; ++k)
                            simplex[i][k] = 0.5 * (simplex[best][k] + simplex[i][k]);
                        f[i] = eval(simplex[i]);
                        if (evals >= max_evals) break;
                    }
                }
            }
        }
        std::size_t best = 0;
        for (std::size_t i = 1; i <= d; ++i)
            if (f[i] < f[best]) best = i;
        return {f[best], simplex[best]};
    }
};

} // namespace

CvResult cv_minimize(const FitContext& ctx, const CvBounds& bounds, std::size_t budget,
                     std::uint64_t seed) {
    if (budget < 50) throw std::invalid_argument("cv_minimize: budget must be at least 50");
    if (bounds.h.size() != ctx.p())
        throw std::invalid_argument("cv_minimize: bounds dimension mismatch");
    const std::size_t d = 1 + ctx.p() + ctx.q();
    constexpr std::size_t kRestarts = 5;
    constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

    // Quasi-random starting points with a seeded rotation, so restarts cover
    // the box but the whole search stays deterministic under the seed.
    Rng rng(seed);
    std::vector<double> shift(d);
    for (std::size_t k = 0; k < d; ++k) shift[k] = rng.uniform01();

    NelderMead solver{ctx, 0, budget};
    double best_f = kInf;
    std::vector<double> best_x;
    for (std::size_t r = 0; r < kRestarts && solver.evals < budget; ++r) {
        std::vector<double> start(d);
        for (std::size_t k = 0; k < d; ++k) {
            const int base = kPrimes[k % std::size(kPrimes)];
            double u = halton(r + 1, base) + shift[k];
            u -= std::floor(u);
            u = 0.02 + 0.96 * u;
            if (k == 0) {
                start[k] = std::log(bounds.delta_lo) +
                           u * (std::log(bounds.delta_hi) - std::log(bounds.delta_lo));
            } else if (k < 1 + ctx.p()) {
                const auto [lo, hi] = bounds.h[k - 1];
                start[k] = std::log(lo) + u * (std::log(hi) - std::log(lo));
            } else {
                start[k] = logit(u);
            }
        }
        auto [f, x] = solver.run(std::move(start));
        if (f < best_f) {
            best_f = f;
            best_x = std::move(x);
        }
    }
    if (best_x.empty() || !std::isfinite(best_f))
        throw std::runtime_error("cv_minimize: no finite objective value found");
    CvResult result;
    result.bw = decode_point(ctx, best_x);
    result.objective = best_f;
    result.evals = solver.evals;
    return result;
}

std::vector<double> predict(const FitContext& ctx, const BandwidthParams& bw,
                            const Dataset& test) {
    if (test.p() != ctx.p() || test.q() != ctx.q())
        throw std::invalid_argument("predict: test set regressor dimensions mismatch");
    std::vector<double> out(test.n());
    for (std::size_t i = 0; i < test.n(); ++i) {
        const auto dists = ctx.metric().distances_to(ctx.data(), test.obs[i].curve);
        const auto value = nw_estimate(ctx, bw, dists, test.obs[i].xc, test.obs[i].xd);
        if (!value)
            throw std::runtime_error("predict: degenerate weights at test observation " +
                                     std::to_string(i));
        out[i] = *value;
    }
    return out;
}

} // namespace funbayes
