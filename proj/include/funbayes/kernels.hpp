#pragma once

#include "funbayes/dataset.hpp"
#include "funbayes/stats.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace funbayes {

/// The sampled bandwidth vector: functional delta, continuous h, discrete
/// lambda, residual b and the localization coefficient tau (0 in global mode).
struct BandwidthParams {
    double delta = 1.0;
    std::vector<double> h;
    std::vector<double> lambda;
    double b = 1.0;
    double tau = 0.0;

    void validate(std::span<const DiscreteKind> kinds) const;
};

/// Gaussian kernel for the functional regressor: phi(d / delta) / delta.
inline double functional_kernel(double d, double delta) {
    return normal_pdf(d / delta) / delta;
}

/// Product Gaussian kernel over continuous regressors; empty product is 1.
inline double continuous_kernel(std::span<const double> diff, std::span<const double> h) {
    double w = 1.0;
    for (std::size_t j = 0; j < diff.size(); ++j) w *= normal_pdf(diff[j] / h[j]) / h[j];
    return w;
}

/// Aitchison-Aitken kernel for unordered categories, lambda in [0, 0.5].
inline double aitchison_aitken(int xi, int x, double lambda) {
    return xi == x ? 1.0 - lambda : lambda;
}

/// Li-Racine kernel for ordered categories, lambda in [0, 1].
inline double li_racine(int xi, int x, double lambda) {
    if (xi == x) return 1.0;
    double w = 1.0;
    for (int k = std::abs(xi - x); k > 0; --k) w *= lambda;
    return w;
}

inline double discrete_kernel(const DiscreteKind& kind, int xi, int x, double lambda) {
    return kind.order == DiscreteKind::Order::Unordered ? aitchison_aitken(xi, x, lambda)
                                                        : li_racine(xi, x, lambda);
}

/// Generalized product weight W: functional times continuous times discrete
/// factors for one training observation against a target predictor point.
double product_weight(double dist, std::span<const double> xc_i, std::span<const double> xc_t,
                      std::span<const int> xd_i, std::span<const int> xd_t,
                      std::span<const DiscreteKind> kinds, const BandwidthParams& bw);

} // namespace funbayes
