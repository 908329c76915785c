#include "funbayes/dataset.hpp"

#include "funbayes/rng.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace funbayes {

void Curve::validate() const {
    if (grid.size() < 4) throw std::invalid_argument("Curve: grid needs at least 4 points");
    if (values.size() != grid.size())
        throw std::invalid_argument("Curve: values length must equal grid length");
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        if (!(grid[i] < grid[i + 1]))
            throw std::invalid_argument("Curve: grid must be strictly increasing");
    for (double v : grid)
        if (!std::isfinite(v)) throw std::invalid_argument("Curve: non-finite grid point");
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("Curve: non-finite value");
}

void DiscreteKind::validate() const {
    if (levels < 2) throw std::invalid_argument("DiscreteKind: levels must be >= 2");
}

std::vector<double> Dataset::responses() const {
    std::vector<double> ys;
    ys.reserve(obs.size());
    for (const auto& o : obs) ys.push_back(o.y);
    return ys;
}

void Dataset::validate() const {
    if (obs.size() < 3) throw std::invalid_argument("Dataset: need at least 3 observations");
    const auto& g = obs.front().curve.grid;
    const std::size_t p0 = obs.front().xc.size();
    for (const auto& o : obs) {
        o.curve.validate();
        if (o.curve.grid != g) throw std::invalid_argument("Dataset: curves must share one grid");
        if (o.xc.size() != p0) throw std::invalid_argument("Dataset: ragged continuous block");
        if (o.xd.size() != kinds.size())
            throw std::invalid_argument("Dataset: ragged discrete block");
        for (std::size_t s = 0; s < kinds.size(); ++s)
            if (o.xd[s] < 0 || o.xd[s] >= kinds[s].levels)
                throw std::invalid_argument("Dataset: discrete code out of range");
        for (double v : o.xc)
            if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite regressor");
        if (!std::isfinite(o.y)) throw std::invalid_argument("Dataset: non-finite response");
    }
    for (const auto& k : kinds) k.validate();
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& cell, std::size_t row, const std::string& col) {
    const std::string t = trim(cell);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(v))
        throw DataError("malformed value '" + cell + "' at row " + std::to_string(row) +
                        ", column '" + col + "'");
    return v;
}

int parse_code(const std::string& cell, std::size_t row, const CsvSchema::DiscreteCol& dc) {
    const std::string t = trim(cell);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size())
        throw DataError("malformed discrete code '" + cell + "' at row " + std::to_string(row) +
                        ", column '" + dc.name + "'");
    if (v < 0 || v >= dc.kind.levels)
        throw DataError("discrete code " + std::to_string(v) + " out of declared range [0," +
                        std::to_string(dc.kind.levels) + ") at row " + std::to_string(row) +
                        ", column '" + dc.name + "'");
    return v;
}

} // namespace

CsvSchema CsvSchema::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open schema file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError("invalid schema JSON in " + path + ": " + e.what());
    }

    CsvSchema s;
    if (j.contains("curve_cols")) {
        const auto& cc = j.at("curve_cols");
        if (cc.is_array()) {
            s.curve_cols = cc.get<std::vector<std::string>>();
        } else {
            // {"prefix": "x", "count": 100, "from": 1}
            const std::string prefix = cc.at("prefix").get<std::string>();
            const int count = cc.at("count").get<int>();
            const int from = cc.value("from", 1);
            for (int i = 0; i < count; ++i)
                s.curve_cols.push_back(prefix + std::to_string(from + i));
        }
    }
    if (j.contains("continuous_cols"))
        s.continuous_cols = j.at("continuous_cols").get<std::vector<std::string>>();
    if (j.contains("discrete_cols")) {
        for (const auto& dj : j.at("discrete_cols")) {
            DiscreteCol dc;
            dc.name = dj.at("name").get<std::string>();
            const std::string kind = dj.value("kind", "unordered");
            dc.kind.order = kind == "ordered" ? DiscreteKind::Order::Ordered
                                              : DiscreteKind::Order::Unordered;
            dc.kind.levels = dj.at("levels").get<int>();
            dc.kind.validate();
            s.discrete_cols.push_back(std::move(dc));
        }
    }
    s.response_col = j.at("response_col").get<std::string>();
    if (j.contains("grid")) s.grid = j.at("grid").get<std::vector<double>>();
    if (s.curve_cols.empty()) throw DataError("schema declares no curve columns");
    if (!s.grid.empty() && s.grid.size() != s.curve_cols.size())
        throw DataError("schema grid length does not match curve column count");
    return s;
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file: " + path);

    std::string line;
    // header (skipping manifest/comment lines)
    do {
        if (!std::getline(in, line)) throw DataError("empty file: " + path);
    } while (!line.empty() && line[0] == '#');

    const auto header = split_line(line);
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < header.size(); ++i) index[trim(header[i])] = i;

    auto col_index = [&](const std::string& name) {
        const auto it = index.find(name);
        if (it == index.end()) throw DataError("missing column '" + name + "' in " + path);
        return it->second;
    };

    std::vector<std::size_t> curve_idx, cont_idx, disc_idx;
    for (const auto& c : schema.curve_cols) curve_idx.push_back(col_index(c));
    for (const auto& c : schema.continuous_cols) cont_idx.push_back(col_index(c));
    for (const auto& c : schema.discrete_cols) disc_idx.push_back(col_index(c.name));
    const std::size_t resp_idx = col_index(schema.response_col);

    std::vector<double> grid = schema.grid;
    if (grid.empty()) {
        const std::size_t m = schema.curve_cols.size();
        grid.resize(m);
        for (std::size_t i = 0; i < m; ++i)
            grid[i] = static_cast<double>(i) / static_cast<double>(m - 1);
    }

    Dataset ds;
    for (const auto& c : schema.discrete_cols) ds.kinds.push_back(c.kind);

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        ++row;
        const auto cells = split_line(line);
        if (cells.size() != header.size())
            throw DataError("row " + std::to_string(row) + " has " +
                            std::to_string(cells.size()) + " columns, expected " +
                            std::to_string(header.size()));
        MixedObservation o;
        o.curve.grid = grid;
        o.curve.values.reserve(curve_idx.size());
        for (std::size_t k = 0; k < curve_idx.size(); ++k)
            o.curve.values.push_back(parse_double(cells[curve_idx[k]], row, schema.curve_cols[k]));
        for (std::size_t k = 0; k < cont_idx.size(); ++k)
            o.xc.push_back(parse_double(cells[cont_idx[k]], row, schema.continuous_cols[k]));
        for (std::size_t k = 0; k < disc_idx.size(); ++k)
            o.xd.push_back(parse_code(cells[disc_idx[k]], row, schema.discrete_cols[k]));
        o.y = parse_double(cells[resp_idx], row, schema.response_col);
        ds.obs.push_back(std::move(o));
    }
    ds.validate();
    return ds;
}

void save_csv(const Dataset& ds, const std::string& path, const CsvSchema& schema,
              const std::string& manifest) {
    if (schema.curve_cols.size() != ds.grid().size())
        throw DataError("save_csv: schema curve columns do not match grid length");
    if (schema.continuous_cols.size() != ds.p())
        throw DataError("save_csv: schema continuous columns do not match dataset");
    if (schema.discrete_cols.size() != ds.q())
        throw DataError("save_csv: schema discrete columns do not match dataset");

    std::ofstream out(path);
    if (!out) throw DataError("cannot write: " + path);
    if (!manifest.empty()) out << "# " << manifest << "\n";

    for (std::size_t i = 0; i < schema.curve_cols.size(); ++i)
        out << (i ? "," : "") << schema.curve_cols[i];
    for (const auto& c : schema.continuous_cols) out << "," << c;
    for (const auto& c : schema.discrete_cols) out << "," << c.name;
    out << "," << schema.response_col << "\n";

    char buf[40];
    auto put = [&](double v, bool lead_comma) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        if (lead_comma) out << ",";
        out << buf;
    };
    for (const auto& o : ds.obs) {
        for (std::size_t k = 0; k < o.curve.values.size(); ++k) put(o.curve.values[k], k > 0);
        for (double v : o.xc) put(v, true);
        for (int v : o.xd) out << "," << v;
        put(o.y, true);
        out << "\n";
    }
}

Dataset derive_binary_group(const Dataset& ds, double threshold) {
    Dataset out = ds;
    out.kinds.push_back(DiscreteKind::unordered(2));
    for (auto& o : out.obs) o.xd.push_back(o.y < threshold ? 0 : 1);
    return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, std::size_t n_train) {
    if (n_train < 3 || n_train >= ds.n())
        throw std::invalid_argument("split: n_train must satisfy 3 <= n_train < n");
    Dataset train, test;
    train.kinds = test.kinds = ds.kinds;
    train.obs.assign(ds.obs.begin(), ds.obs.begin() + static_cast<std::ptrdiff_t>(n_train));
    test.obs.assign(ds.obs.begin() + static_cast<std::ptrdiff_t>(n_train), ds.obs.end());
    return {std::move(train), std::move(test)};
}

Dataset bootstrap_replicate(const Dataset& ds, std::uint64_t seed) {
    if (ds.n() < 3) throw std::invalid_argument("bootstrap_replicate: need at least 3 observations");
    Rng rng(seed);
    Dataset out;
    out.kinds = ds.kinds;
    out.obs.reserve(ds.n());
    const auto n = static_cast<std::int64_t>(ds.n());
    for (std::size_t i = 0; i < ds.n(); ++i)
        out.obs.push_back(ds.obs[static_cast<std::size_t>(rng.uniform_int(0, n - 1))]);
    return out;
}

} // namespace funbayes
