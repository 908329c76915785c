#include "funbayes/posterior.hpp"

#include "funbayes/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace funbayes {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double softplus(double v) {
    if (v > 35.0) return v;
    return std::log1p(std::exp(v));
}

} // namespace

PriorSpec PriorSpec::parse(const std::string& text) {
    PriorSpec spec;
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
    if (parts.empty()) throw std::invalid_argument("prior: empty specification");
    if (parts[0] == "ig") {
        if (parts.size() != 3)
            throw std::invalid_argument("prior: expected ig:<shape>:<scale>, got '" + text + "'");
        spec.family = Family::InverseGamma;
        try {
            spec.alpha = std::stod(parts[1]);
            spec.beta = std::stod(parts[2]);
        } catch (const std::exception&) {
            throw std::invalid_argument("prior: bad numeric field in '" + text + "'");
        }
    } else if (parts[0] == "cauchy") {
        if (parts.size() > 2)
            throw std::invalid_argument("prior: expected cauchy[:<scale>], got '" + text + "'");
        spec.family = Family::HalfCauchy;
        if (parts.size() == 2) {
            try {
                spec.scale = std::stod(parts[1]);
            } catch (const std::exception&) {
                throw std::invalid_argument("prior: bad numeric field in '" + text + "'");
            }
        }
    } else {
        throw std::invalid_argument("prior: unknown family '" + parts[0] + "'");
    }
    spec.validate();
    return spec;
}

std::string PriorSpec::describe() const {
    std::ostringstream out;
    if (family == Family::InverseGamma)
        out << "ig:" << alpha << ":" << beta;
    else if (scale == 1.0)
        out << "cauchy";
    else
        out << "cauchy:" << scale;
    return out.str();
}

void PriorSpec::validate() const {
    if (family == Family::InverseGamma) {
        if (!(alpha > 0.0) || !(beta > 0.0))
            throw std::invalid_argument("prior: inverse-gamma parameters must be positive");
    } else if (!(scale > 0.0)) {
        throw std::invalid_argument("prior: half-Cauchy scale must be positive");
    }
}

double PriorSpec::log_density_sq(double v) const {
    if (!(v > 0.0)) return kNegInf;
    if (family == Family::InverseGamma)
        return alpha * std::log(beta) - std::lgamma(alpha) - (alpha + 1.0) * std::log(v) -
               beta / v;
    const double r = v / scale;
    return std::log(2.0) - std::log(kPi) - std::log(scale) - std::log1p(r * r);
}

ParamLayout ParamLayout::infer(const Dataset& data, bool localized) {
    ParamLayout layout;
    layout.p = data.p();
    layout.q = data.q();
    layout.localized = localized;
    layout.lambda_bounds.resize(layout.q);
    for (std::size_t s = 0; s < layout.q; ++s)
        layout.lambda_bounds[s] = data.kinds[s].lambda_bound();
    return layout;
}

std::vector<std::string> ParamLayout::names() const {
    std::vector<std::string> out;
    out.push_back("delta");
    for (std::size_t k = 0; k < p; ++k) out.push_back("h" + std::to_string(k + 1));
    for (std::size_t s = 0; s < q; ++s) out.push_back("lambda" + std::to_string(s + 1));
    out.push_back("b");
    if (localized) out.push_back("tau");
    return out;
}

std::vector<double> ParamLayout::to_unconstrained(const BandwidthParams& bw) const {
    if (bw.h.size() != p || bw.lambda.size() != q)
        throw std::invalid_argument("layout: bandwidth dimensions mismatch");
    std::vector<double> u(dim());
    u[0] = 2.0 * std::log(bw.delta);
    for (std::size_t k = 0; k < p; ++k) u[1 + k] = 2.0 * std::log(bw.h[k]);
    for (std::size_t s = 0; s < q; ++s) {
        const double frac =
            std::clamp(bw.lambda[s] / lambda_bounds[s], 1e-12, 1.0 - 1e-12);
        u[1 + p + s] = std::log(frac / (1.0 - frac));
    }
    u[1 + p + q] = 2.0 * std::log(bw.b);
    if (localized) {
        const double t = std::clamp(bw.tau, 1e-12, 1.0 - 1e-12);
        u[2 + p + q] = std::log(t / (1.0 - t));
    }
    return u;
}

BandwidthParams ParamLayout::from_unconstrained(std::span<const double> u) const {
    if (u.size() != dim()) throw std::invalid_argument("layout: u dimension mismatch");
    BandwidthParams bw;
    bw.delta = std::exp(0.5 * u[0]);
    bw.h.resize(p);
    for (std::size_t k = 0; k < p; ++k) bw.h[k] = std::exp(0.5 * u[1 + k]);
    bw.lambda.resize(q);
    for (std::size_t s = 0; s < q; ++s) {
        const double bound = lambda_bounds[s];
        const double lam = bound / (1.0 + std::exp(-u[1 + p + s]));
        bw.lambda[s] = std::clamp(lam, 1e-12, bound - 1e-12);
    }
    bw.b = std::exp(0.5 * u[1 + p + q]);
    bw.tau = localized ? 1.0 / (1.0 + std::exp(-u[2 + p + q])) : 0.0;
    return bw;
}

double ParamLayout::log_jacobian(std::span<const double> u) const {
    if (u.size() != dim()) throw std::invalid_argument("layout: u dimension mismatch");
    // log-coordinates contribute u (dv/du = v = e^u); logit coordinates
    // contribute log(bound) + log sigmoid(v) + log(1 - sigmoid(v)).
    double sum = u[0];
    for (std::size_t k = 0; k < p; ++k) sum += u[1 + k];
    for (std::size_t s = 0; s < q; ++s) {
        const double v = u[1 + p + s];
        sum += std::log(lambda_bounds[s]) - softplus(-v) - softplus(v);
    }
    sum += u[1 + p + q];
    if (localized) {
        const double v = u[2 + p + q];
        sum += -softplus(-v) - softplus(v);
    }
    return sum;
}

Posterior::Posterior(const FitContext& ctx, ParamLayout layout, PriorSpec prior)
    : ctx_(&ctx), layout_(std::move(layout)), prior_(std::move(prior)), eval_(ctx) {
    prior_.validate();
    if (layout_.p != ctx.p() || layout_.q != ctx.q())
        throw std::invalid_argument("posterior: layout does not match the context");
    if (ctx.n() < 3)
        throw std::invalid_argument("posterior: need at least three observations");
}

double Posterior::log_kernel_likelihood(const BandwidthParams& bw) const {
    const std::ptrdiff_t bad = eval_.loo_residuals(bw, resid_);
    if (bad >= 0) return kNegInf;
    const std::size_t n = resid_.size();
    // Per-term bandwidths depend only on the contributing residual, so they
    // are shared across all evaluation points.
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double bj = bw.b * (1.0 + bw.tau * std::abs(resid_[j]));
            sum += normal_pdf((resid_[i] - resid_[j]) / bj) / bj;
        }
        const double f = sum / static_cast<double>(n - 1);
        if (!(f > 0.0) || !std::isfinite(f)) return kNegInf;
        total += std::log(f);
    }
    return total;
}

double Posterior::log_prior_natural(const BandwidthParams& bw) const {
    double sum = prior_.log_density_sq(bw.delta * bw.delta);
    for (std::size_t k = 0; k < layout_.p; ++k)
        sum += prior_.log_density_sq(bw.h[k] * bw.h[k]);
    sum += prior_.log_density_sq(bw.b * bw.b);
    for (std::size_t s = 0; s < layout_.q; ++s) {
        const double bound = layout_.lambda_bounds[s];
        if (bw.lambda[s] < 0.0 || bw.lambda[s] > bound) return kNegInf;
        sum -= std::log(bound); // uniform on [0, bound]
    }
    if (layout_.localized && (bw.tau < 0.0 || bw.tau > 1.0)) return kNegInf;
    return sum;
}

double Posterior::log_density_u(std::span<const double> u) const {
    for (const double v : u)
        if (!std::isfinite(v)) return kNegInf;
    const BandwidthParams bw = layout_.from_unconstrained(u);
    const double lp = log_prior_natural(bw);
    if (!std::isfinite(lp)) return kNegInf;
    const double ll = log_kernel_likelihood(bw);
    if (!std::isfinite(ll)) return kNegInf;
    return ll + lp + layout_.log_jacobian(u);
}

std::vector<double> Posterior::residuals_at(const BandwidthParams& bw) const {
    std::vector<double> out;
    if (eval_.loo_residuals(bw, out) >= 0) return {};
    return out;
}

} // namespace funbayes
