#include "funbayes/kernels.hpp"

#include <stdexcept>

namespace funbayes {

void BandwidthParams::validate(std::span<const DiscreteKind> kinds) const {
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw std::invalid_argument("BandwidthParams: delta must be positive and finite");
    for (double v : h)
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument("BandwidthParams: h must be positive and finite");
    if (lambda.size() != kinds.size())
        throw std::invalid_argument("BandwidthParams: lambda length must match discrete kinds");
    for (std::size_t s = 0; s < lambda.size(); ++s) {
        const double bound = kinds[s].lambda_bound();
        if (!(lambda[s] >= 0.0 && lambda[s] <= bound))
            throw std::invalid_argument("BandwidthParams: lambda outside [0, bound]");
    }
    if (!(b > 0.0) || !std::isfinite(b))
        throw std::invalid_argument("BandwidthParams: b must be positive and finite");
    if (!(tau >= 0.0 && tau <= 1.0))
        throw std::invalid_argument("BandwidthParams: tau outside [0, 1]");
}

double product_weight(double dist, std::span<const double> xc_i, std::span<const double> xc_t,
                      std::span<const int> xd_i, std::span<const int> xd_t,
                      std::span<const DiscreteKind> kinds, const BandwidthParams& bw) {
    if (xc_i.size() != bw.h.size() || xc_t.size() != bw.h.size())
        throw std::invalid_argument("product_weight: continuous dimensions disagree");
    if (xd_i.size() != kinds.size() || xd_t.size() != kinds.size())
        throw std::invalid_argument("product_weight: discrete dimensions disagree");

    double w = functional_kernel(dist, bw.delta);
    for (std::size_t j = 0; j < xc_i.size(); ++j)
        w *= normal_pdf((xc_i[j] - xc_t[j]) / bw.h[j]) / bw.h[j];
    for (std::size_t s = 0; s < kinds.size(); ++s)
        w *= discrete_kernel(kinds[s], xd_i[s], xd_t[s], bw.lambda[s]);
    return w;
}

} // namespace funbayes
