#include "funbayes/errdensity.hpp"

#include "funbayes/stats.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace funbayes {

void GridSpec::validate() const {
    if (!(lo < hi)) throw std::invalid_argument("grid: lo must be below hi");
    if (count < 2) throw std::invalid_argument("grid: need at least two points");
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw std::invalid_argument("grid: endpoints must be finite");
}

std::vector<double> GridSpec::points() const {
    validate();
    std::vector<double> pts(count);
    const double step = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) pts[i] = lo + step * static_cast<double>(i);
    pts.back() = hi;
    return pts;
}

GridSpec GridSpec::parse(const std::string& text) {
    GridSpec spec;
    const auto first = text.find(':');
    const auto second = text.find(':', first == std::string::npos ? first : first + 1);
    if (first == std::string::npos || second == std::string::npos)
        throw std::invalid_argument("grid: expected lo:hi:count, got '" + text + "'");
    try {
        spec.lo = std::stod(text.substr(0, first));
        spec.hi = std::stod(text.substr(first + 1, second - first - 1));
        const long long count = std::stoll(text.substr(second + 1));
        if (count < 2) throw std::invalid_argument("count");
        spec.count = static_cast<std::size_t>(count);
    } catch (const std::exception&) {
        throw std::invalid_argument("grid: expected lo:hi:count, got '" + text + "'");
    }
    spec.validate();
    return spec;
}

namespace {

void check_kde_args(std::span<const double> resid, double b, double tau) {
    if (resid.size() < 2) throw std::invalid_argument("kde: need at least two residuals");
    if (!(b > 0.0)) throw std::invalid_argument("kde: bandwidth must be positive");
    if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("kde: tau must lie in [0, 1]");
}

} // namespace

double loo_kde(std::span<const double> resid, std::size_t exclude, double at, double b,
               double tau) {
    check_kde_args(resid, b, tau);
    double sum = 0.0;
    std::size_t terms = 0;
    for (std::size_t j = 0; j < resid.size(); ++j) {
        if (j == exclude) continue;
        const double bj = b * (1.0 + tau * std::abs(resid[j]));
        sum += normal_pdf((at - resid[j]) / bj) / bj;
        ++terms;
    }
    if (terms == 0) throw std::invalid_argument("kde: no terms left after exclusion");
    return sum / static_cast<double>(terms);
}

std::vector<double> error_density_grid(std::span<const double> resid, double b, double tau,
                                       std::span<const double> grid) {
    check_kde_args(resid, b, tau);
    std::vector<double> out(grid.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(resid.size());
    for (std::size_t j = 0; j < resid.size(); ++j) {
        const double bj = b * (1.0 + tau * std::abs(resid[j]));
        const double inv_bj = 1.0 / bj;
        for (std::size_t g = 0; g < grid.size(); ++g)
            out[g] += normal_pdf((grid[g] - resid[j]) * inv_bj) * inv_bj;
    }
    for (double& v : out) v *= inv_n;
    return out;
}

std::vector<double> error_cdf_grid(std::span<const double> resid, double b, double tau,
                                   std::span<const double> grid) {
    check_kde_args(resid, b, tau);
    std::vector<double> out(grid.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(resid.size());
    for (std::size_t j = 0; j < resid.size(); ++j) {
        const double bj = b * (1.0 + tau * std::abs(resid[j]));
        const double inv_bj = 1.0 / bj;
        for (std::size_t g = 0; g < grid.size(); ++g)
            out[g] += normal_cdf((grid[g] - resid[j]) * inv_bj);
    }
    for (double& v : out) v *= inv_n;
    return out;
}

double error_cdf_inverse(std::span<const double> resid, double b, double tau, double prob,
                         const GridSpec& grid) {
    if (!(prob > 0.0 && prob < 1.0))
        throw std::invalid_argument("quantile: probability must lie strictly in (0, 1)");
    const auto pts = grid.points();
    const auto cdf = error_cdf_grid(resid, b, tau, pts);
    if (prob < cdf.front() || prob > cdf.back())
        throw std::runtime_error("quantile: grid range too narrow for requested probability");
    std::size_t best = 0;
    double best_gap = std::abs(cdf[0] - prob);
    for (std::size_t g = 1; g < pts.size(); ++g) {
        const double gap = std::abs(cdf[g] - prob);
        if (gap < best_gap) { // strict: ties keep the lower grid value
            best_gap = gap;
            best = g;
        }
    }
    return pts[best];
}

void save_grid_csv(const std::string& path, std::span<const double> grid,
                   std::span<const double> values, const std::string& value_name) {
    if (grid.size() != values.size())
        throw std::invalid_argument("save_grid_csv: grid and value lengths differ");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_grid_csv: cannot open " + path);
    out << "x," << value_name << "\n";
    char buf[64];
    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", grid[i], values[i]);
        out << buf;
    }
}

} // namespace funbayes
