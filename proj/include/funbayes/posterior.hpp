#pragma once

#include "funbayes/errdensity.hpp"
#include "funbayes/regression.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace funbayes {

/// Prior family for the squared bandwidths (delta^2, h_k^2, b^2).
struct PriorSpec {
    enum class Family { InverseGamma, HalfCauchy };

    Family family = Family::InverseGamma;
    double alpha = 1.0; // inverse-gamma shape
    double beta = 0.05; // inverse-gamma scale
    double scale = 1.0; // half-Cauchy scale

    /// Accepts "ig:<alpha>:<beta>", "cauchy" or "cauchy:<scale>".
    static PriorSpec parse(const std::string& text);
    std::string describe() const;
    void validate() const;

    /// Log density at a squared-bandwidth value v > 0.
    double log_density_sq(double v) const;
};

/// Shape of the parameter vector and the bijection between natural
/// bandwidths and the unconstrained sampling coordinates u:
///   u = [log delta^2, log h_k^2 ..., logit(lambda_s/bound) ..., log b^2, logit tau]
/// with the trailing logit(tau) present only for localized error bandwidths.
struct ParamLayout {
    std::size_t p = 0;
    std::size_t q = 0;
    bool localized = false;
    std::vector<double> lambda_bounds;

    static ParamLayout infer(const Dataset& data, bool localized);

    std::size_t dim() const { return 2 + p + q + (localized ? 1 : 0); }
    std::vector<std::string> names() const;

    std::vector<double> to_unconstrained(const BandwidthParams& bw) const;
    BandwidthParams from_unconstrained(std::span<const double> u) const;

    /// log |d(natural)/d(u)| so that a prior stated on the natural scale can
    /// be evaluated in u-space.
    double log_jacobian(std::span<const double> u) const;
};

/// The unnormalized posterior over bandwidths for one fitted context:
/// kernel likelihood of the leave-one-out residuals times the priors, with
/// evaluation carried out in unconstrained coordinates.
class Posterior {
public:
    Posterior(const FitContext& ctx, ParamLayout layout, PriorSpec prior);

    /// Sum over observations of the log leave-one-out residual density.
    /// -inf when the regression weights or any density value degenerate.
    double log_kernel_likelihood(const BandwidthParams& bw) const;

    /// Priors on squared bandwidths plus the uniform terms for lambda, tau.
    double log_prior_natural(const BandwidthParams& bw) const;

    /// Unnormalized log posterior density in u-space (includes the Jacobian).
    double log_density_u(std::span<const double> u) const;

    /// Leave-one-out residuals at the given bandwidths (empty on degeneracy).
    std::vector<double> residuals_at(const BandwidthParams& bw) const;

    const FitContext& context() const { return *ctx_; }
    const ParamLayout& layout() const { return layout_; }
    const PriorSpec& prior() const { return prior_; }

private:
    const FitContext* ctx_;
    ParamLayout layout_;
    PriorSpec prior_;
    mutable NwEvaluator eval_;
    mutable std::vector<double> resid_;
};

} // namespace funbayes
