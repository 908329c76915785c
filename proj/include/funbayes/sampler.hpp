#pragma once

#include "funbayes/posterior.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace funbayes {

struct McmcConfig {
    std::size_t burn_in = 1000;
    std::size_t n_record = 10000;
    std::uint64_t seed = 0;
    double target_accept = 0.234;
    double adapt_decay = 0.6;
    std::vector<double> init_u; // empty: automatic starting point
    double init_step = 0.0;     // <= 0: 2.38 / sqrt(dim)

    void validate() const;
};

/// Log density up to a constant, evaluated in unconstrained coordinates.
/// Synthetic-target tests drive the sampler through this without a model.
using LogDensity = std::function<double(std::span<const double>)>;

struct Chain {
    Eigen::MatrixXd draws;                  // n_record x dim, u-space
    std::vector<std::uint8_t> accept_trace; // burn-in + recorded iterations
    std::vector<double> log_post_trace;     // recorded iterations
    std::size_t burn_in = 0;
    double final_step = 0.0;

    std::size_t dim() const { return static_cast<std::size_t>(draws.cols()); }
    std::size_t n_record() const { return static_cast<std::size_t>(draws.rows()); }
    double accept_rate_recorded() const;
};

/// Adaptive random-walk Metropolis on an arbitrary target: one joint block,
/// Robbins-Monro step-size adaptation during burn-in only, deterministic
/// under the seed.
Chain run_chain_target(const LogDensity& target, std::size_t dim, const McmcConfig& cfg);

Chain run_chain(const Posterior& post, const McmcConfig& cfg);

struct ParamSummary {
    std::string name;
    double mean = 0.0;
    double lo95 = 0.0; // 2.5% empirical quantile
    double hi95 = 0.0; // 97.5% empirical quantile
    double total_se = 0.0;
    double batch_se = 0.0;
    double sif = 0.0; // simulation inefficiency factor from batch means
};

/// Column-wise summaries of an arbitrary draw matrix.
std::vector<ParamSummary> summarize_matrix(const Eigen::MatrixXd& draws,
                                           const std::vector<std::string>& names,
                                           std::size_t batch_size = 100);

/// Recorded u-draws mapped back to natural bandwidths, one column per
/// parameter in layout order.
Eigen::MatrixXd natural_draws(const ParamLayout& layout, const Chain& chain);

struct ChainSummary {
    std::vector<ParamSummary> params;
    std::vector<double> geweke_z;
    double accept_rate = 0.0;
    double final_step = 0.0;
};

ChainSummary summarize(const Posterior& post, const Chain& chain, std::size_t batch_size = 100);

/// Geweke convergence z-scores per column: first frac_a of the draws against
/// the last frac_b, segment standard errors from 20 batch means each.
std::vector<double> geweke_matrix(const Eigen::MatrixXd& draws, double frac_a = 0.1,
                                  double frac_b = 0.5);

/// Autocorrelation at lags 0..max_lag (lag 0 is exactly 1).
std::vector<double> autocorrelation(std::span<const double> values, std::size_t max_lag);

struct Evidence {
    double log_evidence = 0.0;
    double log_target_at_point = 0.0; // unnormalized log posterior at u*
    double log_ordinate = 0.0;        // log posterior density estimate at u*
    double log_numerator = 0.0;
    double log_denominator = 0.0;
    std::vector<double> u_star;
};

/// Chib-Jeliazkov single-block marginal likelihood from a recorded chain and
/// its frozen proposal scale. Throws on denominator underflow.
Evidence marginal_likelihood_target(const LogDensity& target, const Chain& chain,
                                    std::size_t n_proposal_draws, std::uint64_t seed);

Evidence marginal_likelihood(const Posterior& post, const Chain& chain,
                             std::size_t n_proposal_draws = 2000, std::uint64_t seed = 1);

/// One row per recorded draw: acceptance flag, log posterior, u-space and
/// natural-scale coordinates. `manifest` becomes a leading comment line.
void save_chain_csv(const std::string& path, const ParamLayout& layout, const Chain& chain,
                    const std::string& manifest = "");

struct ChainTable {
    std::vector<std::string> names; // natural-scale column names
    Eigen::MatrixXd natural;
    Eigen::MatrixXd u;
    std::vector<double> log_post;
    std::vector<std::uint8_t> accepts;
};

ChainTable load_chain_csv(const std::string& path);

} // namespace funbayes
