#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace funbayes {

/// Error raised on malformed input files or schema mismatches.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One discretized functional observation on a shared grid.
struct Curve {
    std::vector<double> grid;   // strictly increasing abscissae, length >= 4
    std::vector<double> values; // same length as grid, all finite

    void validate() const;
};

/// Whether a discrete regressor has a natural ordering. Unordered variables
/// use the Aitchison-Aitken kernel (lambda in [0, 0.5]); ordered ones use the
/// Li-Racine kernel (lambda in [0, 1]).
struct DiscreteKind {
    enum class Order { Unordered, Ordered };

    Order order = Order::Unordered;
    int levels = 2; // codes run 0..levels-1

    double lambda_bound() const { return order == Order::Unordered ? 0.5 : 1.0; }
    void validate() const;

    static DiscreteKind unordered(int levels) { return {Order::Unordered, levels}; }
    static DiscreteKind ordered(int levels) { return {Order::Ordered, levels}; }

    bool operator==(const DiscreteKind&) const = default;
};

/// Predictor tuple (curve, continuous vector, discrete vector) plus response.
struct MixedObservation {
    Curve curve;
    std::vector<double> xc; // p continuous regressors
    std::vector<int> xd;    // q discrete regressors, coded 0..levels-1
    double y = 0.0;
};

/// n mixed observations sharing one grid.
struct Dataset {
    std::vector<MixedObservation> obs;
    std::vector<DiscreteKind> kinds; // one per discrete regressor

    std::size_t n() const { return obs.size(); }
    std::size_t p() const { return obs.empty() ? 0 : obs.front().xc.size(); }
    std::size_t q() const { return kinds.size(); }
    const std::vector<double>& grid() const { return obs.front().curve.grid; }
    std::vector<double> responses() const;

    void validate() const;
};

/// Column roles for CSV ingestion. The grid defaults to equispaced [0, 1]
/// when not supplied.
struct CsvSchema {
    struct DiscreteCol {
        std::string name;
        DiscreteKind kind;
    };

    std::vector<std::string> curve_cols;
    std::vector<std::string> continuous_cols;
    std::vector<DiscreteCol> discrete_cols;
    std::string response_col;
    std::vector<double> grid; // optional

    static CsvSchema from_json_file(const std::string& path);
};

/// Reads a comma-separated file (one header row, '.' decimals, lines starting
/// with '#' ignored) into a Dataset. Reports the offending row and column on
/// malformed input.
Dataset load_csv(const std::string& path, const CsvSchema& schema);

/// Writes a Dataset back out under the schema's column names with enough
/// digits that load_csv(save_csv(ds)) reproduces ds bit-exactly.
void save_csv(const Dataset& ds, const std::string& path, const CsvSchema& schema,
              const std::string& manifest = "");

/// Appends one Unordered(2) regressor coded 0 when y < threshold, else 1.
Dataset derive_binary_group(const Dataset& ds, double threshold);

/// First n_train observations in order, remainder as test set.
std::pair<Dataset, Dataset> split(const Dataset& ds, std::size_t n_train);

/// n observations drawn i.i.d. uniformly with replacement, deterministic
/// under seed.
Dataset bootstrap_replicate(const Dataset& ds, std::uint64_t seed);

} // namespace funbayes
