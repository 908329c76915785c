#include "funbayes/sampler.hpp"

#include "funbayes/rng.hpp"
#include "funbayes/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace funbayes {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

} // namespace

void McmcConfig::validate() const {
    if (burn_in < 100) throw std::invalid_argument("mcmc: burn_in must be at least 100");
    if (n_record < 1000) throw std::invalid_argument("mcmc: n_record must be at least 1000");
    if (!(target_accept > 0.0 && target_accept < 1.0))
        throw std::invalid_argument("mcmc: target acceptance rate must lie in (0, 1)");
    if (!(adapt_decay > 0.0 && adapt_decay <= 1.0))
        throw std::invalid_argument("mcmc: adaptation decay must lie in (0, 1]");
}

double Chain::accept_rate_recorded() const {
    if (accept_trace.size() <= burn_in) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = burn_in; i < accept_trace.size(); ++i) hits += accept_trace[i];
    return static_cast<double>(hits) / static_cast<double>(accept_trace.size() - burn_in);
}

Chain run_chain_target(const LogDensity& target, std::size_t dim, const McmcConfig& cfg) {
    cfg.validate();
    if (dim == 0) throw std::invalid_argument("mcmc: dimension must be positive");
    Rng rng(cfg.seed);

    std::vector<double> u(dim, 0.0);
    if (!cfg.init_u.empty()) {
        if (cfg.init_u.size() != dim)
            throw std::invalid_argument("mcmc: init vector dimension mismatch");
        u = cfg.init_u;
    }
    double lp = target(u);
    for (int attempt = 0; attempt < 50 && !std::isfinite(lp); ++attempt) {
        std::vector<double> candidate(dim);
        for (std::size_t k = 0; k < dim; ++k)
            candidate[k] = (cfg.init_u.empty() ? 0.0 : cfg.init_u[k]) + rng.normal();
        const double cand_lp = target(candidate);
        if (std::isfinite(cand_lp)) {
            u = std::move(candidate);
            lp = cand_lp;
        }
    }
    if (!std::isfinite(lp))
        throw std::runtime_error(
            "mcmc: no starting point with finite posterior density after 50 retries");

    double log_step = std::log(cfg.init_step > 0.0 ? cfg.init_step
                                                   : 2.38 / std::sqrt(static_cast<double>(dim)));

    const std::size_t total = cfg.burn_in + cfg.n_record;
    Chain chain;
    chain.burn_in = cfg.burn_in;
    chain.draws.resize(static_cast<Eigen::Index>(cfg.n_record), static_cast<Eigen::Index>(dim));
    chain.accept_trace.resize(total, 0);
    chain.log_post_trace.resize(cfg.n_record);

    std::vector<double> proposal(dim);
    for (std::size_t i = 0; i < total; ++i) {
        const double step = std::exp(log_step);
        for (std::size_t k = 0; k < dim; ++k) proposal[k] = u[k] + step * rng.normal();
        const double prop_lp = target(proposal);
        const double log_alpha = prop_lp - lp; // may be -inf
        const double alpha = std::isfinite(log_alpha)
                                 ? std::min(1.0, std::exp(log_alpha))
                                 : (log_alpha > 0.0 ? 1.0 : 0.0);
        // The uniform is consumed every iteration to keep the random stream
        // aligned regardless of early-out opportunities.
        const double coin = rng.uniform01();
        if (coin < alpha) {
            u = proposal;
            lp = prop_lp;
            chain.accept_trace[i] = 1;
        }
        if (i < cfg.burn_in) {
            const double gain = std::pow(static_cast<double>(i + 1), -cfg.adapt_decay);
            log_step += gain * (alpha - cfg.target_accept);
        }
        if (i >= cfg.burn_in) {
            const std::size_t r = i - cfg.burn_in;
            for (std::size_t k = 0; k < dim; ++k)
                chain.draws(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = u[k];
            chain.log_post_trace[r] = lp;
        }
    }
    chain.final_step = std::exp(log_step);
    return chain;
}

Chain run_chain(const Posterior& post, const McmcConfig& cfg) {
    McmcConfig local = cfg;
    if (local.init_u.empty()) {
        // Moderate bandwidths: squared scales 0.25, discrete and localized
        // parameters at the middle of their ranges.
        BandwidthParams bw;
        bw.delta = 0.5;
        bw.h.assign(post.layout().p, 0.5);
        bw.lambda.resize(post.layout().q);
        for (std::size_t s = 0; s < post.layout().q; ++s)
            bw.lambda[s] = 0.5 * post.layout().lambda_bounds[s];
        bw.b = 0.5;
        bw.tau = 0.5;
        local.init_u = post.layout().to_unconstrained(bw);
    }
    const auto target = [&post](std::span<const double> u) { return post.log_density_u(u); };
    return run_chain_target(target, post.layout().dim(), local);
}

std::vector<ParamSummary> summarize_matrix(const Eigen::MatrixXd& draws,
                                           const std::vector<std::string>& names,
                                           std::size_t batch_size) {
    const std::size_t n = static_cast<std::size_t>(draws.rows());
    const std::size_t dim = static_cast<std::size_t>(draws.cols());
    if (names.size() != dim)
        throw std::invalid_argument("summarize: name count does not match columns");
    if (batch_size < 2) throw std::invalid_argument("summarize: batch size must be at least 2");
    const std::size_t n_batches = n / batch_size;
    if (n_batches < 2)
        throw std::invalid_argument("summarize: need at least two full batches of draws");

    std::vector<ParamSummary> out(dim);
    std::vector<double> col(n), batch_means(n_batches);
    for (std::size_t c = 0; c < dim; ++c) {
        for (std::size_t r = 0; r < n; ++r)
            col[r] = draws(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        ParamSummary& s = out[c];
        s.name = names[c];
        s.mean = mean(col);
        s.lo95 = quantile(col, 0.025);
        s.hi95 = quantile(col, 0.975);
        const double var = sample_variance(col);
        for (std::size_t b = 0; b < n_batches; ++b) {
            double acc = 0.0;
            for (std::size_t r = 0; r < batch_size; ++r) acc += col[b * batch_size + r];
            batch_means[b] = acc / static_cast<double>(batch_size);
        }
        const double var_bm = sample_variance(batch_means);
        if (var > 0.0) {
            s.sif = static_cast<double>(batch_size) * var_bm / var;
            s.batch_se = std::sqrt(var_bm / static_cast<double>(n_batches));
            s.total_se = std::sqrt(var / static_cast<double>(n)) * std::sqrt(s.sif);
        }
    }
    return out;
}

Eigen::MatrixXd natural_draws(const ParamLayout& layout, const Chain& chain) {
    if (chain.dim() != layout.dim())
        throw std::invalid_argument("chain dimension does not match the layout");
    const std::size_t n = chain.n_record();
    const auto names = layout.names();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(names.size()));
    std::vector<double> u(layout.dim());
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t k = 0; k < u.size(); ++k)
            u[k] = chain.draws(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k));
        const BandwidthParams bw = layout.from_unconstrained(u);
        std::size_t c = 0;
        out(static_cast<Eigen::Index>(r), c++) = bw.delta;
        for (std::size_t k = 0; k < layout.p; ++k) out(static_cast<Eigen::Index>(r), c++) = bw.h[k];
        for (std::size_t s = 0; s < layout.q; ++s)
            out(static_cast<Eigen::Index>(r), c++) = bw.lambda[s];
        out(static_cast<Eigen::Index>(r), c++) = bw.b;
        if (layout.localized) out(static_cast<Eigen::Index>(r), c++) = bw.tau;
    }
    return out;
}

ChainSummary summarize(const Posterior& post, const Chain& chain, std::size_t batch_size) {
    const Eigen::MatrixXd nat = natural_draws(post.layout(), chain);
    ChainSummary summary;
    summary.params = summarize_matrix(nat, post.layout().names(), batch_size);
    summary.geweke_z = geweke_matrix(nat);
    summary.accept_rate = chain.accept_rate_recorded();
    summary.final_step = chain.final_step;
    return summary;
}

namespace {

// Mean and batch-mean standard error of one segment, 20 batches.
std::pair<double, double> segment_stats(std::span<const double> seg) {
    constexpr std::size_t kBatches = 20;
    const std::size_t batch = seg.size() / kBatches;
    std::vector<double> bm(kBatches);
    for (std::size_t b = 0; b < kBatches; ++b) {
        double acc = 0.0;
        for (std::size_t r = 0; r < batch; ++r) acc += seg[b * batch + r];
        bm[b] = acc / static_cast<double>(batch);
    }
    const double se = std::sqrt(sample_variance(bm) / static_cast<double>(kBatches));
    return {mean(seg), se};
}

} // namespace

std::vector<double> geweke_matrix(const Eigen::MatrixXd& draws, double frac_a, double frac_b) {
    const std::size_t n = static_cast<std::size_t>(draws.rows());
    const std::size_t na = static_cast<std::size_t>(std::floor(frac_a * static_cast<double>(n)));
    const std::size_t nb = static_cast<std::size_t>(std::floor(frac_b * static_cast<double>(n)));
    if (na < 40 || nb < 40)
        throw std::invalid_argument("geweke: each segment needs at least 40 draws");
    std::vector<double> z(static_cast<std::size_t>(draws.cols()));
    std::vector<double> col_a(na), col_b(nb);
    for (std::size_t c = 0; c < z.size(); ++c) {
        for (std::size_t r = 0; r < na; ++r)
            col_a[r] = draws(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        for (std::size_t r = 0; r < nb; ++r)
            col_b[r] = draws(static_cast<Eigen::Index>(n - nb + r), static_cast<Eigen::Index>(c));
        const auto [mean_a, se_a] = segment_stats(col_a);
        const auto [mean_b, se_b] = segment_stats(col_b);
        const double denom = std::sqrt(se_a * se_a + se_b * se_b);
        z[c] = denom > 0.0 ? (mean_a - mean_b) / denom : 0.0;
    }
    return z;
}

std::vector<double> autocorrelation(std::span<const double> values, std::size_t max_lag) {
    const std::size_t n = values.size();
    if (n < 2) throw std::invalid_argument("autocorrelation: need at least two values");
    if (max_lag >= n) max_lag = n - 1;
    const double m = mean(values);
    double denom = 0.0;
    for (const double v : values) denom += (v - m) * (v - m);
    std::vector<double> acf(max_lag + 1, 0.0);
    acf[0] = 1.0;
    if (denom <= 0.0) return acf;
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        double acc = 0.0;
        for (std::size_t t = 0; t + lag < n; ++t)
            acc += (values[t] - m) * (values[t + lag] - m);
        acf[lag] = acc / denom;
    }
    return acf;
}

Evidence marginal_likelihood_target(const LogDensity& target, const Chain& chain,
                                    std::size_t n_proposal_draws, std::uint64_t seed) {
    if (n_proposal_draws < 1000)
        throw std::invalid_argument("evidence: need at least 1000 proposal draws");
    const std::size_t n = chain.n_record();
    const std::size_t dim = chain.dim();
    if (n == 0 || dim == 0) throw std::invalid_argument("evidence: empty chain");
    const double step = chain.final_step;
    if (!(step > 0.0)) throw std::invalid_argument("evidence: chain has no proposal scale");

    Evidence ev;
    ev.u_star.resize(dim);
    for (std::size_t k = 0; k < dim; ++k)
        ev.u_star[k] = chain.draws.col(static_cast<Eigen::Index>(k)).mean();
    ev.log_target_at_point = target(ev.u_star);
    if (!std::isfinite(ev.log_target_at_point))
        throw std::runtime_error("evidence: posterior mean has non-finite target density");

    // Numerator: average over the recorded draws of the acceptance
    // probability toward u* times the proposal density at u*.
    const double log_norm = -0.5 * static_cast<double>(dim) *
                            std::log(2.0 * kPi * step * step);
    const double inv_2s2 = 1.0 / (2.0 * step * step);
    std::vector<double> terms(n);
    for (std::size_t g = 0; g < n; ++g) {
        double sq = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            const double d = ev.u_star[k] -
                             chain.draws(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(k));
            sq += d * d;
        }
        const double log_alpha = std::min(0.0, ev.log_target_at_point - chain.log_post_trace[g]);
        terms[g] = log_alpha + log_norm - sq * inv_2s2;
    }
    ev.log_numerator = logsumexp(terms) - std::log(static_cast<double>(n));

    // Denominator: average acceptance probability of fresh proposals from u*.
    Rng rng(seed);
    std::vector<double> alpha_terms(n_proposal_draws);
    std::vector<double> u(dim);
    for (std::size_t j = 0; j < n_proposal_draws; ++j) {
        for (std::size_t k = 0; k < dim; ++k) u[k] = ev.u_star[k] + step * rng.normal();
        const double lp = target(u);
        alpha_terms[j] = std::isfinite(lp) ? std::min(0.0, lp - ev.log_target_at_point) : kNegInf;
    }
    ev.log_denominator = logsumexp(alpha_terms) - std::log(static_cast<double>(n_proposal_draws));
    if (!std::isfinite(ev.log_denominator)) {
        std::ostringstream msg;
        msg << "evidence: denominator underflow (all " << n_proposal_draws
            << " proposals rejected; step=" << step
            << ", log target at point=" << ev.log_target_at_point << ")";
        throw std::runtime_error(msg.str());
    }

    ev.log_ordinate = ev.log_numerator - ev.log_denominator;
    ev.log_evidence = ev.log_target_at_point - ev.log_ordinate;
    return ev;
}

Evidence marginal_likelihood(const Posterior& post, const Chain& chain,
                             std::size_t n_proposal_draws, std::uint64_t seed) {
    const auto target = [&post](std::span<const double> u) { return post.log_density_u(u); };
    return marginal_likelihood_target(target, chain, n_proposal_draws, seed);
}

void save_chain_csv(const std::string& path, const ParamLayout& layout, const Chain& chain,
                    const std::string& manifest) {
    if (chain.dim() != layout.dim())
        throw std::invalid_argument("chain dimension does not match the layout");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_chain_csv: cannot open " + path);
    if (!manifest.empty()) out << "# " << manifest << "\n";
    const auto names = layout.names();
    out << "accepted,log_post";
    for (const auto& n : names) out << ",u_" << n;
    for (const auto& n : names) out << "," << n;
    out << "\n";
    const Eigen::MatrixXd nat = natural_draws(layout, chain);
    char buf[64];
    for (std::size_t r = 0; r < chain.n_record(); ++r) {
        out << static_cast<int>(chain.accept_trace[chain.burn_in + r]);
        std::snprintf(buf, sizeof(buf), ",%.17g", chain.log_post_trace[r]);
        out << buf;
        for (std::size_t c = 0; c < chain.dim(); ++c) {
            std::snprintf(buf, sizeof(buf), ",%.17g",
                          chain.draws(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
            out << buf;
        }
        for (std::size_t c = 0; c < chain.dim(); ++c) {
            std::snprintf(buf, sizeof(buf), ",%.17g",
                          nat(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
            out << buf;
        }
        out << "\n";
    }
}

ChainTable load_chain_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_chain_csv: cannot open " + path);
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) header.push_back(cell);
        break;
    }
    if (header.size() < 3 || header[0] != "accepted" || header[1] != "log_post")
        throw std::runtime_error("load_chain_csv: unrecognized header in " + path);
    std::size_t n_u = 0;
    while (2 + n_u < header.size() && header[2 + n_u].rfind("u_", 0) == 0) ++n_u;
    const std::size_t n_nat = header.size() - 2 - n_u;
    if (n_nat == 0 || (n_u != 0 && n_u != n_nat))
        throw std::runtime_error("load_chain_csv: inconsistent column groups in " + path);

    ChainTable table;
    table.names.assign(header.begin() + static_cast<std::ptrdiff_t>(2 + n_u), header.end());
    std::vector<std::vector<double>> rows;
    std::vector<std::uint8_t> accepts;
    std::vector<double> log_post;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::vector<double> row;
        for (std::string cell; std::getline(ss, cell, ',');) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::runtime_error("load_chain_csv: bad number at line " +
                                         std::to_string(line_no));
            }
        }
        if (row.size() != header.size())
            throw std::runtime_error("load_chain_csv: wrong field count at line " +
                                     std::to_string(line_no));
        accepts.push_back(row[0] != 0.0);
        log_post.push_back(row[1]);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("load_chain_csv: no draws in " + path);
    table.accepts = std::move(accepts);
    table.log_post = std::move(log_post);
    table.u.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n_u));
    table.natural.resize(static_cast<Eigen::Index>(rows.size()),
                         static_cast<Eigen::Index>(n_nat));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < n_u; ++c)
            table.u(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][2 + c];
        for (std::size_t c = 0; c < n_nat; ++c)
            table.natural(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                rows[r][2 + n_u + c];
    }
    return table;
}

} // namespace funbayes
