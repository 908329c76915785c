#pragma once

#include "funbayes/sampler.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace funbayes {

class Rng;

// ---------------------------------------------------------------------------
// Synthetic data generation
// ---------------------------------------------------------------------------

enum class ErrorLaw { Trimodal, Claw };

double error_pdf(ErrorLaw law, double x);
double draw_error(ErrorLaw law, Rng& rng);

struct CurveCoef {
    double a = 0.0, b = 0.0, c = 0.0;
};

/// 100 equispaced points on [0, pi].
std::vector<double> sim_grid();

Curve make_curve(const CurveCoef& coef, std::span<const double> grid);

/// a, b, c i.i.d. Uniform[0, 1].
std::vector<CurveCoef> gen_coefs(std::size_t n, Rng& rng);

/// Composite-Simpson value (1001 points) of t cos(t) T'(t)^2 over [0, pi]
/// using the analytic derivative of the generated curve.
double functional_integral(const CurveCoef& coef);

/// Model 1 adds eta + gamma to the functional term; model 2 additionally
/// omega + beta. Discrete codes enter as their numeric values.
double true_regression(int model, const CurveCoef& coef, double eta, double omega, int gamma,
                       int beta);

struct SimConfig {
    std::size_t n = 50;
    int model = 1;
    ErrorLaw law = ErrorLaw::Trimodal;
    std::size_t n_replications = 20;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SimTruth {
    std::vector<double> m;   // true regression values
    std::vector<double> eps; // true errors
};

/// One replication's dataset; the RNG stream is derived from (seed,
/// replication) so replications are independent and order-free.
std::pair<Dataset, SimTruth> simulate_dataset(const SimConfig& cfg, std::size_t replication);

// ---------------------------------------------------------------------------
// Evaluation metrics
// ---------------------------------------------------------------------------

struct AggMetric {
    double mean = 0.0;
    double sd = 0.0; // across replications; 0 with a single replication
};

/// Mean over replications of the average squared fit error.
AggMetric mase(const std::vector<std::vector<double>>& true_m,
               const std::vector<std::vector<double>>& fitted);

/// Mean over replications of the integrated squared density error on the
/// grid (Riemann sum with factor (hi-lo)/count).
AggMetric mise(ErrorLaw law, const std::vector<std::vector<double>>& fitted_density,
               const GridSpec& grid);

struct ForecastMetrics {
    double msfe = 0.0;
    double mafe = 0.0;
    double sd_sq = 0.0;  // sample sd of squared errors
    double sd_abs = 0.0; // sample sd of absolute errors
};

ForecastMetrics msfe_mafe(std::span<const double> y_test, std::span<const double> y_pred);

/// Fraction of responses inside the closed intervals.
double coverage(std::span<const double> y, std::span<const double> lo,
                std::span<const double> hi);

// ---------------------------------------------------------------------------
// Model fitting pipeline
// ---------------------------------------------------------------------------

enum class FitMethod { BayesLocal, BayesGlobal, Cv };

std::string method_name(FitMethod method);

struct FitResult {
    FitMethod method = FitMethod::Cv;
    BandwidthParams bw;            // point estimates: posterior means or CV argmin
    std::vector<double> fitted;    // in-sample regression fit at the point estimates
    std::vector<double> residuals; // leave-one-out residuals at the point estimates
    std::optional<ChainSummary> summary;
    std::optional<Chain> chain;
};

FitResult fit_model(const FitContext& ctx, FitMethod method, const PriorSpec& prior,
                    const McmcConfig& mcmc, std::size_t cv_budget = 600);

// ---------------------------------------------------------------------------
// Simulation study
// ---------------------------------------------------------------------------

struct StudyConfig {
    SimConfig sim;
    std::vector<FitMethod> methods{FitMethod::BayesLocal, FitMethod::BayesGlobal,
                                   FitMethod::Cv};
    PriorSpec prior;
    McmcConfig mcmc;
    GridSpec density_grid{-5.0, 5.0, 1001};
    std::size_t cv_budget = 600;
    std::size_t jobs = 1;
};

struct MethodStudy {
    FitMethod method = FitMethod::Cv;
    std::vector<std::vector<double>> true_m;    // per replication
    std::vector<std::vector<double>> fitted;    // per replication
    std::vector<std::vector<double>> residuals; // per replication LOO residuals
    std::vector<std::vector<double>> density;   // per replication; empty for CV
    std::vector<BandwidthParams> bw;            // per replication point estimates
    AggMetric mase_value;
    AggMetric mise_value; // zero-filled for CV
};

struct StudyResult {
    std::vector<MethodStudy> methods;
};

StudyResult run_simulation_study(const StudyConfig& cfg);

// ---------------------------------------------------------------------------
// Irrelevant-regressor study
// ---------------------------------------------------------------------------

struct IrrelevantConfig {
    std::size_t n = 150;
    std::size_t n_replications = 10;
    std::uint64_t seed = 0;
    PriorSpec prior;
    McmcConfig mcmc;
    std::size_t jobs = 1;
};

struct IrrelevantResult {
    std::vector<std::string> names;               // delta, h1, h2, lambda1, lambda2, b
    std::vector<std::vector<double>> rep_medians; // per replication posterior medians
    std::vector<std::vector<double>> rep_residuals; // LOO residuals at those medians
    std::vector<double> median, p10, p90;         // across replications
    double irrelevant_cont_sd = 0.0;              // mean sample sd of the noise regressor
};

/// True responses follow model 1; the observed regressors additionally carry
/// an N(0,1) continuous column and a uniform ordered six-level column that do
/// not enter the regression function.
IrrelevantResult run_irrelevant_study(const IrrelevantConfig& cfg);

// ---------------------------------------------------------------------------
// Application pipeline (spectra -> response with holdout evaluation)
// ---------------------------------------------------------------------------

struct ApplicationConfig {
    Dataset full;
    std::size_t n_train = 160;
    SemiMetricSpec metric{SemiMetricSpec::Kind::Deriv, 2, 0};
    PriorSpec prior;
    bool localized = true;
    McmcConfig mcmc;
    GridSpec quantile_grid{-10.0, 10.0, 1001};
    double interval = 0.95;
    std::size_t evidence_draws = 2000;
    bool compute_evidence = true;
};

struct ApplicationResult {
    BandwidthParams bw;
    ChainSummary summary;
    std::optional<Evidence> evidence;
    std::vector<double> residuals; // training LOO residuals at the point estimates
    std::vector<double> pred, lower, upper;
    ForecastMetrics forecast;
    double coverage_rate = 0.0;
};

ApplicationResult run_application(const ApplicationConfig& cfg);

/// Spectroscopy-shaped synthetic benchmark: 215 rows, 100-point smooth
/// curves, two correlated continuous regressors and a response whose
/// irreducible noise is roughly unit scale.
Dataset make_surrogate(std::uint64_t seed);

} // namespace funbayes
