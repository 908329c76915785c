#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace funbayes {

inline constexpr double kPi = 3.14159265358979323846264338;
inline constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;

/// Standard normal density.
double normal_pdf(double x);

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal quantile function (Wichura's AS 241, full double precision).
double inv_normal_cdf(double p);

double mean(std::span<const double> xs);

/// Unbiased sample variance (ddof = 1). Requires at least two values.
double sample_variance(std::span<const double> xs);

double sample_sd(std::span<const double> xs);

/// Empirical quantile with linear interpolation between order statistics
/// (the common "type 7" convention). p in [0, 1].
double quantile(std::vector<double> xs, double p);

double logsumexp(std::span<const double> xs);

/// Trapezoid rule over possibly non-equispaced abscissae.
double trapezoid(std::span<const double> x, std::span<const double> y);

/// Composite Simpson on an equispaced grid; n_points must be odd and >= 3.
template <typename F>
double simpson(F&& f, double a, double b, std::size_t n_points) {
    const std::size_t n = n_points;
    const double h = (b - a) / static_cast<double>(n - 1);
    double sum = f(a) + f(b);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double w = (i % 2 == 1) ? 4.0 : 2.0;
        sum += w * f(a + static_cast<double>(i) * h);
    }
    return sum * h / 3.0;
}

/// Element `index` (1-based) of the van der Corput sequence in the given base.
double halton(std::size_t index, std::size_t base);

} // namespace funbayes
