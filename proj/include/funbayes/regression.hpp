#pragma once

#include "funbayes/kernels.hpp"
#include "funbayes/semimetric.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace funbayes {

/// Training data bound to a fitted semi-metric, the precomputed pairwise
/// distance matrix and flattened pair tables for the weight computations.
/// Immutable after build; safe to share.
class FitContext {
public:
    static FitContext build(Dataset ds, const SemiMetricSpec& spec);

    const Dataset& data() const { return data_; }
    const SemiMetric& metric() const { return metric_; }
    const DistanceMatrix& distances() const { return dists_; }
    std::size_t n() const { return data_.n(); }
    std::size_t p() const { return data_.p(); }
    std::size_t q() const { return data_.q(); }
    std::span<const double> responses() const { return y_; }

    // pair tables, row-major n*n
    std::span<const double> dist_sq() const { return d2_; }
    std::span<const double> cont_diff_sq(std::size_t k) const { return cdiff2_[k]; }
    std::span<const std::uint8_t> disc_absdiff(std::size_t s) const { return ddiff_[s]; }

private:
    Dataset data_;
    SemiMetric metric_;
    DistanceMatrix dists_;
    std::vector<double> y_;
    std::vector<double> d2_;
    std::vector<std::vector<double>> cdiff2_;
    std::vector<std::vector<std::uint8_t>> ddiff_;
};

/// Functional Nadaraya-Watson estimate at one predictor point. Empty when
/// all weights are numerically zero (degenerate); callers translate that to
/// -inf log-likelihood or an infinite objective.
std::optional<double> nw_estimate(const FitContext& ctx, const BandwidthParams& bw,
                                  std::span<const double> dists_to_train,
                                  std::span<const double> xc_target,
                                  std::span<const int> xd_target,
                                  std::ptrdiff_t exclude = -1);

/// Result of a batched leave-one-out pass; bad_index names the first
/// observation whose weights degenerated, -1 if none.
struct LooFit {
    std::vector<double> values;
    std::ptrdiff_t bad_index = -1;

    bool ok() const { return bad_index < 0; }
};

/// Reusable evaluator holding scratch buffers for repeated bandwidth
/// evaluations on one context (the sampler's hot path).
class NwEvaluator {
public:
    explicit NwEvaluator(const FitContext& ctx);

    /// Leave-one-out fitted values; returns the first degenerate index or -1.
    std::ptrdiff_t loo_fitted(const BandwidthParams& bw, std::vector<double>& out);

    /// y_i minus the leave-one-out fit.
    std::ptrdiff_t loo_residuals(const BandwidthParams& bw, std::vector<double>& out);

    /// In-sample fit (self term included).
    std::ptrdiff_t fitted(const BandwidthParams& bw, std::vector<double>& out);

private:
    std::ptrdiff_t fitted_impl(const BandwidthParams& bw, bool leave_one_out,
                               std::vector<double>& out);

    const FitContext* ctx_;
    std::vector<double> q_, disc_, inv_h2_;
    std::vector<std::vector<double>> lambda_pow_;
};

LooFit nw_loo_fitted(const FitContext& ctx, const BandwidthParams& bw);
LooFit residuals(const FitContext& ctx, const BandwidthParams& bw);

/// Sum of squared leave-one-out errors; +inf when any component degenerates.
double cv_objective(const FitContext& ctx, const BandwidthParams& bw);

/// Box bounds for the cross-validation search (lambda is implicitly bounded
/// by its kernel).
struct CvBounds {
    double delta_lo = 1e-3, delta_hi = 10.0;
    std::vector<std::pair<double, double>> h;
};

CvBounds default_cv_bounds(const FitContext& ctx);

struct CvResult {
    BandwidthParams bw; // b fixed at 1, tau at 0: CV does not estimate them
    double objective = 0.0;
    std::size_t evals = 0;
};

/// Nelder-Mead over (log delta, log h, scaled-logit lambda) restarted from
/// five quasi-random points inside the bounds; deterministic under seed.
CvResult cv_minimize(const FitContext& ctx, const CvBounds& bounds, std::size_t budget,
                     std::uint64_t seed);

/// Point predictions for a test set through the stored semi-metric fit.
/// Throws on degenerate weights.
std::vector<double> predict(const FitContext& ctx, const BandwidthParams& bw,
                            const Dataset& test);

} // namespace funbayes
