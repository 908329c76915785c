#pragma once

#include "funbayes/dataset.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace funbayes {

/// Choice of curve distance: a derivative-based seminorm computed through a
/// cubic B-spline fit, or Euclidean distance between leading FPCA scores.
struct SemiMetricSpec {
    enum class Kind { Deriv, Fpca };

    Kind kind = Kind::Deriv;
    int order = 2;        // Deriv: derivative order, 0..2
    int n_basis = 0;      // Deriv: 0 means min(20, grid_length / 2)
    int n_components = 0; // Fpca

    static SemiMetricSpec deriv(int order = 2, int n_basis = 0);
    static SemiMetricSpec fpca(int n_components);

    void validate() const;
    std::string describe() const;
};

/// Cubic B-spline basis on equispaced interior knots with an ordinary
/// least-squares projector from curve values to basis coefficients, plus
/// derivative Gram matrices integrated by Gauss-Legendre quadrature (exact
/// for the piecewise-polynomial integrands).
class BasisFit {
public:
    static BasisFit fit(const std::vector<double>& grid, int n_basis);

    Eigen::VectorXd coefficients(const std::vector<double>& values) const;
    const Eigen::MatrixXd& gram(int deriv_order) const;
    const std::vector<double>& grid() const { return grid_; }
    int n_basis() const { return n_basis_; }

    /// All basis functions' der-th derivative evaluated at x (test hook).
    Eigen::VectorXd basis_at(double x, int der) const;

private:
    std::vector<double> grid_;
    std::vector<double> knots_;
    int n_basis_ = 0;
    Eigen::MatrixXd projector_; // n_basis x grid_length
    Eigen::MatrixXd gram_[3];
};

/// Mean curve, trapezoid-orthonormal eigenfunctions and score projector of
/// the empirical covariance of curve values.
class FpcaFit {
public:
    static FpcaFit fit(const Dataset& train, int n_components);

    Eigen::VectorXd scores(const std::vector<double>& values) const;
    const Eigen::VectorXd& mean_curve() const { return mean_; }
    const Eigen::MatrixXd& eigenfunctions() const { return eigenfunctions_; }
    const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }

private:
    Eigen::VectorXd mean_;
    Eigen::VectorXd weights_; // trapezoid quadrature weights
    Eigen::MatrixXd eigenfunctions_; // grid_length x n_components
    Eigen::VectorXd eigenvalues_;
};

/// Pairwise semi-metric distances; symmetric with zero diagonal.
struct DistanceMatrix {
    Eigen::MatrixXd entries;

    std::size_t n() const { return static_cast<std::size_t>(entries.rows()); }
    double operator()(std::size_t i, std::size_t j) const { return entries(i, j); }
    void validate() const;
};

/// A spec bound to its fitted machinery; computes curve distances in and out
/// of sample.
class SemiMetric {
public:
    static SemiMetric fit(const SemiMetricSpec& spec, const Dataset& train);

    double distance(const Curve& a, const Curve& b) const;

    /// Basis coefficients (Deriv) or score vector (Fpca) for one curve.
    Eigen::VectorXd representation(const Curve& c) const;
    double distance_between(const Eigen::VectorXd& ra, const Eigen::VectorXd& rb) const;

    /// Distances from every training curve to a new target curve.
    std::vector<double> distances_to(const Dataset& train, const Curve& target) const;

    const SemiMetricSpec& spec() const { return spec_; }
    const BasisFit& basis() const;
    const FpcaFit& fpca() const;

private:
    SemiMetricSpec spec_;
    std::vector<BasisFit> basis_; // at most one entry
    std::vector<FpcaFit> fpca_;   // at most one entry
};

DistanceMatrix pairwise(const SemiMetric& metric, const Dataset& ds);

void save_distance_csv(const DistanceMatrix& dm, const std::string& path);

} // namespace funbayes
