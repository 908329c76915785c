#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace funbayes {

/// Equispaced evaluation grid, parsed from "lo:hi:count" on the command line.
struct GridSpec {
    double lo = -5.0;
    double hi = 5.0;
    std::size_t count = 1001;

    void validate() const;
    std::vector<double> points() const;
    static GridSpec parse(const std::string& text);
};

/// Leave-one-out kernel density of the residuals evaluated at `at`, skipping
/// index `exclude` (pass the residual count or larger to keep every term).
/// Per-point bandwidth b_j = b * (1 + tau * |resid_j|); tau = 0 recovers the
/// fixed-bandwidth estimator.
double loo_kde(std::span<const double> resid, std::size_t exclude, double at, double b,
               double tau = 0.0);

/// Full-sample mixture density over a grid (1/n sum of scaled normals).
std::vector<double> error_density_grid(std::span<const double> resid, double b, double tau,
                                       std::span<const double> grid);

/// Full-sample mixture CDF over a grid.
std::vector<double> error_cdf_grid(std::span<const double> resid, double b, double tau,
                                   std::span<const double> grid);

/// Grid value whose mixture CDF is closest to `prob`; ties pick the lower
/// value. Throws when `prob` falls outside the CDF range spanned by the grid.
double error_cdf_inverse(std::span<const double> resid, double b, double tau, double prob,
                         const GridSpec& grid);

void save_grid_csv(const std::string& path, std::span<const double> grid,
                   std::span<const double> values, const std::string& value_name);

} // namespace funbayes
