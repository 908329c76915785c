#include "funbayes/semimetric.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace funbayes {

SemiMetricSpec SemiMetricSpec::deriv(int order, int n_basis) {
    SemiMetricSpec s;
    s.kind = Kind::Deriv;
    s.order = order;
    s.n_basis = n_basis;
    s.validate();
    return s;
}

SemiMetricSpec SemiMetricSpec::fpca(int n_components) {
    SemiMetricSpec s;
    s.kind = Kind::Fpca;
    s.n_components = n_components;
    s.validate();
    return s;
}

void SemiMetricSpec::validate() const {
    if (kind == Kind::Deriv) {
        if (order < 0 || order > 2)
            throw std::invalid_argument("SemiMetricSpec: derivative order must be 0, 1 or 2");
        if (n_basis != 0 && n_basis < order + 4)
            throw std::invalid_argument("SemiMetricSpec: n_basis must be at least order + 4");
    } else {
        if (n_components < 1)
            throw std::invalid_argument("SemiMetricSpec: n_components must be positive");
    }
}

std::string SemiMetricSpec::describe() const {
    if (kind == Kind::Deriv)
        return "deriv" + std::to_string(order) +
               (n_basis ? ":" + std::to_string(n_basis) : "");
    return "fpca:" + std::to_string(n_components);
}

namespace {

constexpr int kOrder = 4; // cubic

// 5-point Gauss-Legendre on [-1, 1]
const double kGlNodes[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                            0.5384693101056831, 0.9061798459386640};
const double kGlWeights[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                              0.4786286704993665, 0.2369268850561891};

// Values of all order-m B-splines at x, m = 1..kOrder. vals[m-1] has
// length n_knots - m. The right endpoint is treated as a limit from the left.
std::vector<std::vector<double>> basis_orders(const std::vector<double>& knots, double x) {
    const std::size_t nk = knots.size();
    std::vector<std::vector<double>> vals(kOrder);
    vals[0].assign(nk - 1, 0.0);

    std::size_t span = nk; // index j with knots[j] <= x < knots[j+1]
    if (x >= knots.back()) {
        for (std::size_t j = nk - 1; j-- > 0;)
            if (knots[j] < knots[j + 1]) {
                span = j;
                break;
            }
    } else {
        for (std::size_t j = 0; j + 1 < nk; ++j)
            if (knots[j] <= x && x < knots[j + 1]) {
                span = j;
                break;
            }
    }
    if (span < nk - 1) vals[0][span] = 1.0;

    for (int m = 2; m <= kOrder; ++m) {
        const std::size_t cnt = nk - static_cast<std::size_t>(m);
        vals[m - 1].assign(cnt, 0.0);
        for (std::size_t j = 0; j < cnt; ++j) {
            double v = 0.0;
            const double dl = knots[j + m - 1] - knots[j];
            if (dl > 0.0) v += (x - knots[j]) / dl * vals[m - 2][j];
            const double dr = knots[j + m] - knots[j + 1];
            if (dr > 0.0) v += (knots[j + m] - x) / dr * vals[m - 2][j + 1];
            vals[m - 1][j] = v;
        }
    }
    return vals;
}

// d/dx of order-m values given order-(m-1) values.
std::vector<double> derivative_step(const std::vector<double>& lower,
                                    const std::vector<double>& knots, int m) {
    const std::size_t cnt = knots.size() - static_cast<std::size_t>(m);
    std::vector<double> out(cnt, 0.0);
    for (std::size_t j = 0; j < cnt; ++j) {
        double v = 0.0;
        const double dl = knots[j + m - 1] - knots[j];
        if (dl > 0.0) v += lower[j] / dl;
        const double dr = knots[j + m] - knots[j + 1];
        if (dr > 0.0) v -= lower[j + 1] / dr;
        out[j] = static_cast<double>(m - 1) * v;
    }
    return out;
}

Eigen::VectorXd basis_derivatives(const std::vector<double>& knots, int n_basis, double x,
                                  int der) {
    const auto vals = basis_orders(knots, x);
    std::vector<double> v;
    if (der == 0) {
        v = vals[kOrder - 1];
    } else if (der == 1) {
        v = derivative_step(vals[kOrder - 2], knots, kOrder);
    } else {
        auto d1_order3 = derivative_step(vals[kOrder - 3], knots, kOrder - 1);
        v = derivative_step(d1_order3, knots, kOrder);
    }
    return Eigen::Map<const Eigen::VectorXd>(v.data(), n_basis);
}

} // namespace

BasisFit BasisFit::fit(const std::vector<double>& grid, int n_basis) {
    const auto m = static_cast<int>(grid.size());
    if (n_basis < 4) throw std::invalid_argument("BasisFit: n_basis must be at least 4");
    if (m < n_basis)
        throw std::invalid_argument("BasisFit: grid length must be at least n_basis");
    for (int i = 0; i + 1 < m; ++i)
        if (!(grid[i] < grid[i + 1]))
            throw std::invalid_argument("BasisFit: grid must be strictly increasing");

    BasisFit f;
    f.grid_ = grid;
    f.n_basis_ = n_basis;

    const double lo = grid.front(), hi = grid.back();
    const int n_interior = n_basis - kOrder;
    f.knots_.assign(kOrder, lo);
    for (int j = 1; j <= n_interior; ++j)
        f.knots_.push_back(lo + (hi - lo) * static_cast<double>(j) /
                                    static_cast<double>(n_interior + 1));
    f.knots_.insert(f.knots_.end(), kOrder, hi);

    Eigen::MatrixXd design(m, n_basis);
    for (int i = 0; i < m; ++i)
        design.row(i) = basis_derivatives(f.knots_, n_basis, grid[i], 0).transpose();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < n_basis)
        throw std::invalid_argument(
            "BasisFit: rank-deficient design matrix (too many basis functions for this grid)");
    f.projector_ = qr.solve(Eigen::MatrixXd::Identity(m, m));

    // Gram matrices of basis derivatives, one Gauss-Legendre panel per knot span
    for (auto& g : f.gram_) g = Eigen::MatrixXd::Zero(n_basis, n_basis);
    const int n_spans = n_interior + 1;
    for (int l = 0; l < n_spans; ++l) {
        const double a = f.knots_[kOrder - 1 + l];
        const double b = f.knots_[kOrder + l];
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        for (int node = 0; node < 5; ++node) {
            const double x = mid + half * kGlNodes[node];
            const double w = half * kGlWeights[node];
            for (int der = 0; der <= 2; ++der) {
                const Eigen::VectorXd bv = basis_derivatives(f.knots_, n_basis, x, der);
                f.gram_[der].noalias() += w * bv * bv.transpose();
            }
        }
    }
    return f;
}

Eigen::VectorXd BasisFit::coefficients(const std::vector<double>& values) const {
    if (static_cast<int>(values.size()) != static_cast<int>(grid_.size()))
        throw std::invalid_argument("BasisFit: curve values do not match the fitted grid");
    return projector_ * Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                          static_cast<long>(values.size()));
}

const Eigen::MatrixXd& BasisFit::gram(int deriv_order) const {
    if (deriv_order < 0 || deriv_order > 2)
        throw std::invalid_argument("BasisFit: derivative order must be 0, 1 or 2");
    return gram_[deriv_order];
}

Eigen::VectorXd BasisFit::basis_at(double x, int der) const {
    return basis_derivatives(knots_, n_basis_, x, der);
}

FpcaFit FpcaFit::fit(const Dataset& train, int n_components) {
    const auto n = static_cast<long>(train.n());
    const auto& grid = train.grid();
    const auto m = static_cast<long>(grid.size());
    if (n < 2) throw std::invalid_argument("FpcaFit: need at least 2 curves");
    if (n_components > std::min(n - 1, m))
        throw std::invalid_argument("FpcaFit: n_components exceeds available rank");

    FpcaFit f;
    f.weights_.resize(m);
    f.weights_(0) = 0.5 * (grid[1] - grid[0]);
    for (long i = 1; i + 1 < m; ++i) f.weights_(i) = 0.5 * (grid[i + 1] - grid[i - 1]);
    f.weights_(m - 1) = 0.5 * (grid[m - 1] - grid[m - 2]);

    Eigen::MatrixXd x(n, m);
    for (long i = 0; i < n; ++i)
        x.row(i) = Eigen::Map<const Eigen::VectorXd>(train.obs[static_cast<std::size_t>(i)]
                                                         .curve.values.data(),
                                                     m)
                       .transpose();
    f.mean_ = x.colwise().mean();
    x.rowwise() -= f.mean_.transpose();

    // Symmetrized problem: eigenvectors of W^1/2 C W^1/2 give eigenfunctions
    // orthonormal under the trapezoid inner product.
    const Eigen::VectorXd sw = f.weights_.array().sqrt();
    Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);
    cov = sw.asDiagonal() * cov * sw.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw std::runtime_error("FpcaFit: eigensolver failed");

    f.eigenfunctions_.resize(m, n_components);
    f.eigenvalues_.resize(n_components);
    for (int k = 0; k < n_components; ++k) {
        const long idx = m - 1 - k; // eigenvalues come sorted ascending
        f.eigenvalues_(k) = std::max(eig.eigenvalues()(idx), 0.0);
        f.eigenfunctions_.col(k) = eig.eigenvectors().col(idx).array() / sw.array();
    }
    return f;
}

Eigen::VectorXd FpcaFit::scores(const std::vector<double>& values) const {
    if (static_cast<long>(values.size()) != mean_.size())
        throw std::invalid_argument("FpcaFit: curve values do not match the fitted grid");
    const Eigen::VectorXd centered =
        Eigen::Map<const Eigen::VectorXd>(values.data(), mean_.size()) - mean_;
    return eigenfunctions_.transpose() * (weights_.asDiagonal() * centered);
}

void DistanceMatrix::validate() const {
    const long m = entries.rows();
    if (entries.cols() != m) throw std::invalid_argument("DistanceMatrix: not square");
    for (long i = 0; i < m; ++i) {
        if (entries(i, i) != 0.0) throw std::invalid_argument("DistanceMatrix: nonzero diagonal");
        for (long j = 0; j < m; ++j) {
            const double v = entries(i, j);
            if (!(v >= 0.0) || !std::isfinite(v))
                throw std::invalid_argument("DistanceMatrix: invalid entry");
            if (entries(j, i) != v) throw std::invalid_argument("DistanceMatrix: not symmetric");
        }
    }
}

SemiMetric SemiMetric::fit(const SemiMetricSpec& spec, const Dataset& train) {
    spec.validate();
    SemiMetric sm;
    sm.spec_ = spec;
    if (spec.kind == SemiMetricSpec::Kind::Deriv) {
        int nb = spec.n_basis;
        if (nb == 0)
            nb = std::min<int>(20, static_cast<int>(train.grid().size()) / 2);
        sm.spec_.n_basis = nb;
        sm.basis_.push_back(BasisFit::fit(train.grid(), nb));
    } else {
        sm.fpca_.push_back(FpcaFit::fit(train, spec.n_components));
    }
    return sm;
}

const BasisFit& SemiMetric::basis() const {
    if (basis_.empty()) throw std::logic_error("SemiMetric: no spline basis fitted");
    return basis_.front();
}

const FpcaFit& SemiMetric::fpca() const {
    if (fpca_.empty()) throw std::logic_error("SemiMetric: no FPCA fit present");
    return fpca_.front();
}

Eigen::VectorXd SemiMetric::representation(const Curve& c) const {
    if (spec_.kind == SemiMetricSpec::Kind::Deriv) return basis().coefficients(c.values);
    return fpca().scores(c.values);
}

double SemiMetric::distance_between(const Eigen::VectorXd& ra, const Eigen::VectorXd& rb) const {
    const Eigen::VectorXd d = ra - rb;
    if (spec_.kind == SemiMetricSpec::Kind::Fpca) return d.norm();
    const double q = d.dot(basis().gram(spec_.order) * d);
    return q > 0.0 ? std::sqrt(q) : 0.0;
}

double SemiMetric::distance(const Curve& a, const Curve& b) const {
    return distance_between(representation(a), representation(b));
}

std::vector<double> SemiMetric::distances_to(const Dataset& train, const Curve& target) const {
    const Eigen::VectorXd rt = representation(target);
    std::vector<double> out;
    out.reserve(train.n());
    for (const auto& o : train.obs) out.push_back(distance_between(representation(o.curve), rt));
    return out;
}

DistanceMatrix pairwise(const SemiMetric& metric, const Dataset& ds) {
    const auto n = static_cast<long>(ds.n());
    std::vector<Eigen::VectorXd> reps;
    reps.reserve(ds.n());
    for (const auto& o : ds.obs) reps.push_back(metric.representation(o.curve));

    DistanceMatrix dm;
    dm.entries = Eigen::MatrixXd::Zero(n, n);
    for (long i = 0; i < n; ++i)
        for (long j = i + 1; j < n; ++j) {
            const double d = metric.distance_between(reps[static_cast<std::size_t>(i)],
                                                     reps[static_cast<std::size_t>(j)]);
            dm.entries(i, j) = d;
            dm.entries(j, i) = d;
        }
    return dm;
}

void save_distance_csv(const DistanceMatrix& dm, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write: " + path);
    const long n = dm.entries.rows();
    char buf[40];
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j < n; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", dm.entries(i, j));
            out << (j ? "," : "") << buf;
        }
        out << "\n";
    }
}

} // namespace funbayes
