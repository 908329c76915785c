// funbayes command-line tool: simulate benchmark studies, fit bandwidth
// posteriors, forecast with prediction intervals, diagnose chains and compare
// prior evidence. Exit codes: 0 ok, 2 usage, 3 data error, 4 numerical
// failure.

#include "funbayes/experiments.hpp"
#include "funbayes/rng.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

using nlohmann::json;
using namespace funbayes;

namespace {

constexpr const char* kVersion = "0.1.0";

/// Flag combinations and values the parser accepts but the command cannot use.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// FNV-1a over the canonical option rendering, so reruns with the same
/// configuration carry the same hash.
std::string config_hash(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string manifest_line(const CLI::App* cmd, std::uint64_t seed) {
    const std::string canon = cmd->get_name() + "\n" + cmd->config_to_str(true, false);
    return std::string("funbayes ") + kVersion + " config=" + config_hash(canon) +
           " seed=" + std::to_string(seed);
}

/// Every flag is also settable through the environment, e.g. --burnin via
/// FUNBAYES_BURNIN.
void add_env_names(CLI::App* app) {
    for (CLI::Option* opt : app->get_options()) {
        if (opt->get_lnames().empty()) continue;
        const std::string& lname = opt->get_lnames().front();
        if (lname == "help" || lname == "version") continue;
        std::string env = "FUNBAYES_";
        for (const char c : lname) env += c == '-' ? '_' : static_cast<char>(std::toupper(c));
        opt->envname(env);
    }
    for (CLI::App* sub : app->get_subcommands(nullptr)) add_env_names(sub);
}

/// File ingestion / option-object construction; any failure here is a data
/// error, not a numerical one.
template <typename F>
auto load_phase(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const DataError&) {
        throw;
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    return out;
}

// --- small parsers ---------------------------------------------------------

ErrorLaw parse_law(const std::string& text) {
    if (text == "trimodal") return ErrorLaw::Trimodal;
    if (text == "claw") return ErrorLaw::Claw;
    throw UsageError("unknown error law '" + text + "' (expected trimodal or claw)");
}

FitMethod parse_method(const std::string& text) {
    if (text == "bayes-local") return FitMethod::BayesLocal;
    if (text == "bayes-global") return FitMethod::BayesGlobal;
    if (text == "cv") return FitMethod::Cv;
    throw UsageError("unknown method '" + text +
                     "' (expected bayes-local, bayes-global or cv)");
}

/// Inverse of SemiMetricSpec::describe: deriv<order>[:<n_basis>] or fpca:<k>.
SemiMetricSpec parse_metric(const std::string& text) {
    auto parse_int = [&](const std::string& s) {
        int v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size())
            throw UsageError("malformed metric spec '" + text + "'");
        return v;
    };
    std::string head = text;
    std::string tail;
    if (const auto colon = text.find(':'); colon != std::string::npos) {
        head = text.substr(0, colon);
        tail = text.substr(colon + 1);
    }
    if (head == "fpca") {
        if (tail.empty()) throw UsageError("metric fpca needs a component count, e.g. fpca:3");
        return SemiMetricSpec::fpca(parse_int(tail));
    }
    if (head.rfind("deriv", 0) == 0 && head.size() == 6) {
        const SemiMetricSpec spec =
            SemiMetricSpec::deriv(parse_int(head.substr(5)), tail.empty() ? 0 : parse_int(tail));
        try {
            spec.validate();
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
        return spec;
    }
    throw UsageError("unknown metric '" + text + "' (expected derivN[:basis] or fpca:K)");
}

PriorSpec parse_prior(const std::string& text) {
    try {
        return PriorSpec::parse(text);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
}

GridSpec parse_grid(const std::string& text) {
    try {
        return GridSpec::parse(text);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
}

McmcConfig make_mcmc(std::size_t burnin, std::size_t iters, std::uint64_t seed) {
    McmcConfig mcmc;
    mcmc.burn_in = burnin;
    mcmc.n_record = iters;
    mcmc.seed = seed;
    try {
        mcmc.validate();
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    return mcmc;
}

// --- dataset <-> json ------------------------------------------------------

json kind_to_json(const DiscreteKind& k) {
    return {{"kind", k.order == DiscreteKind::Order::Unordered ? "unordered" : "ordered"},
            {"levels", k.levels}};
}

DiscreteKind kind_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    const int levels = j.at("levels").get<int>();
    return kind == "ordered" ? DiscreteKind::ordered(levels) : DiscreteKind::unordered(levels);
}

json dataset_to_json(const Dataset& ds) {
    json j;
    j["grid"] = ds.grid();
    j["kinds"] = json::array();
    for (const auto& k : ds.kinds) j["kinds"].push_back(kind_to_json(k));
    j["obs"] = json::array();
    for (const auto& o : ds.obs)
        j["obs"].push_back(
            {{"curve", o.curve.values}, {"xc", o.xc}, {"xd", o.xd}, {"y", o.y}});
    return j;
}

Dataset dataset_from_json(const json& j) {
    Dataset ds;
    const auto grid = j.at("grid").get<std::vector<double>>();
    for (const auto& kj : j.at("kinds")) ds.kinds.push_back(kind_from_json(kj));
    for (const auto& oj : j.at("obs")) {
        MixedObservation o;
        o.curve.grid = grid;
        o.curve.values = oj.at("curve").get<std::vector<double>>();
        o.xc = oj.at("xc").get<std::vector<double>>();
        o.xd = oj.at("xd").get<std::vector<int>>();
        o.y = oj.at("y").get<double>();
        ds.obs.push_back(std::move(o));
    }
    ds.validate();
    return ds;
}

json schema_to_json(const CsvSchema& s) {
    json j;
    j["curve_cols"] = s.curve_cols;
    j["continuous_cols"] = s.continuous_cols;
    j["discrete_cols"] = json::array();
    for (const auto& dc : s.discrete_cols) {
        json dj = kind_to_json(dc.kind);
        dj["name"] = dc.name;
        j["discrete_cols"].push_back(std::move(dj));
    }
    j["response_col"] = s.response_col;
    if (!s.grid.empty()) j["grid"] = s.grid;
    return j;
}

CsvSchema schema_from_json(const json& j) {
    CsvSchema s;
    s.curve_cols = j.at("curve_cols").get<std::vector<std::string>>();
    s.continuous_cols = j.at("continuous_cols").get<std::vector<std::string>>();
    for (const auto& dj : j.at("discrete_cols"))
        s.discrete_cols.push_back({dj.at("name").get<std::string>(), kind_from_json(dj)});
    s.response_col = j.at("response_col").get<std::string>();
    if (j.contains("grid")) s.grid = j.at("grid").get<std::vector<double>>();
    return s;
}

std::vector<std::string> bandwidth_names(std::size_t p, std::size_t q) {
    std::vector<std::string> names{"delta"};
    for (std::size_t k = 0; k < p; ++k) names.push_back("h" + std::to_string(k + 1));
    for (std::size_t s = 0; s < q; ++s) names.push_back("lambda" + std::to_string(s + 1));
    names.push_back("b");
    names.push_back("tau");
    return names;
}

/// True when the file's header row contains the named column; comment lines
/// are skipped the same way the loader skips them.
bool file_has_column(const std::string& path, const std::string& col) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file: " + path);
    std::string line;
    do {
        if (!std::getline(in, line)) throw DataError("empty file: " + path);
    } while (!line.empty() && line[0] == '#');
    std::string cell;
    for (const char ch : line + ",") {
        if (ch == ',') {
            const auto a = cell.find_first_not_of(" \t");
            const auto b = cell.find_last_not_of(" \t");
            if (a != std::string::npos && cell.substr(a, b - a + 1) == col) return true;
            cell.clear();
        } else if (ch != '\r') {
            cell.push_back(ch);
        }
    }
    return false;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOpts {
    int model = 1;
    std::size_t n = 50;
    std::string error_law = "trimodal";
    std::size_t reps = 20;
    std::uint64_t seed = 0;
    std::vector<std::string> methods;
    std::string prior = "ig:1:0.05";
    std::size_t burnin = 1000;
    std::size_t iters = 10000;
    std::size_t cv_budget = 600;
    std::string density_grid = "-5:5:1001";
    std::size_t jobs = 1;
    std::string out_dir;
};

void cmd_simulate(const SimulateOpts& o, const CLI::App* cmd) {
    if (o.model != 1 && o.model != 2) throw UsageError("--model must be 1 or 2");

    StudyConfig cfg;
    cfg.sim.model = o.model;
    cfg.sim.n = o.n;
    cfg.sim.law = parse_law(o.error_law);
    cfg.sim.n_replications = o.reps;
    cfg.sim.seed = o.seed;
    try {
        cfg.sim.validate();
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    cfg.methods.clear();
    for (const auto& m : o.methods.empty()
             ? std::vector<std::string>{"bayes-local", "bayes-global", "cv"}
             : o.methods)
        cfg.methods.push_back(parse_method(m));
    cfg.prior = parse_prior(o.prior);
    cfg.mcmc = make_mcmc(o.burnin, o.iters, o.seed);
    cfg.density_grid = parse_grid(o.density_grid);
    cfg.cv_budget = o.cv_budget;
    cfg.jobs = o.jobs == 0 ? 1 : o.jobs;

    std::error_code ec;
    std::filesystem::create_directories(o.out_dir, ec);
    if (ec) throw DataError("cannot create output directory: " + o.out_dir);

    const StudyResult result = run_simulation_study(cfg);

    const std::string manifest = manifest_line(cmd, o.seed);
    const auto dir = std::filesystem::path(o.out_dir);
    const std::size_t p = o.model == 2 ? 2 : 1;
    const std::size_t q = o.model == 2 ? 2 : 1;
    const auto names = bandwidth_names(p, q);

    {
        auto out = open_out((dir / "aggregate.csv").string());
        out << "# " << manifest << "\n";
        out << "method,mase,mase_sd,mise,mise_sd\n";
        for (const auto& ms : result.methods) {
            out << method_name(ms.method) << ',' << fmt(ms.mase_value.mean) << ','
                << fmt(ms.mase_value.sd) << ',';
            if (ms.method == FitMethod::Cv)
                out << ",";
            else
                out << fmt(ms.mise_value.mean) << ',' << fmt(ms.mise_value.sd);
            out << '\n';
        }
    }

    {
        auto out = open_out((dir / "replications.csv").string());
        out << "# " << manifest << "\n";
        out << "method,replication,avg_sq_fit_error";
        for (const auto& nm : names) out << ',' << nm;
        out << '\n';
        for (const auto& ms : result.methods) {
            for (std::size_t r = 0; r < ms.fitted.size(); ++r) {
                double sq = 0.0;
                for (std::size_t i = 0; i < ms.fitted[r].size(); ++i) {
                    const double e = ms.fitted[r][i] - ms.true_m[r][i];
                    sq += e * e;
                }
                sq /= static_cast<double>(ms.fitted[r].size());
                out << method_name(ms.method) << ',' << r << ',' << fmt(sq);
                const BandwidthParams& bw = ms.bw[r];
                out << ',' << fmt(bw.delta);
                for (const double h : bw.h) out << ',' << fmt(h);
                for (const double l : bw.lambda) out << ',' << fmt(l);
                if (ms.method == FitMethod::Cv)
                    out << ",,";
                else
                    out << ',' << fmt(bw.b) << ',' << fmt(bw.tau);
                out << '\n';
            }
        }
    }

    const auto grid_pts = cfg.density_grid.points();
    for (const auto& ms : result.methods) {
        if (ms.method == FitMethod::Cv) continue; // no error-density estimate without b, tau
        auto out = open_out((dir / ("density_" + method_name(ms.method) + ".csv")).string());
        out << "# " << manifest << "\n";
        out << "x,true_density,mean_estimate\n";
        for (std::size_t g = 0; g < grid_pts.size(); ++g) {
            double avg = 0.0;
            for (const auto& rep : ms.density) avg += rep[g];
            avg /= static_cast<double>(ms.density.size());
            out << fmt(grid_pts[g]) << ',' << fmt(error_pdf(cfg.sim.law, grid_pts[g])) << ','
                << fmt(avg) << '\n';
        }
    }

    std::cout << "method          mase (sd)            mise (sd)\n";
    for (const auto& ms : result.methods) {
        std::printf("%-15s %.4f (%.4f)", method_name(ms.method).c_str(), ms.mase_value.mean,
                    ms.mase_value.sd);
        if (ms.method != FitMethod::Cv)
            std::printf("      %.4f (%.4f)", ms.mise_value.mean, ms.mise_value.sd);
        std::printf("\n");
    }
    std::cout << "wrote " << (dir / "aggregate.csv").string() << ", "
              << (dir / "replications.csv").string() << " and per-method density files\n";
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitOpts {
    std::string data;
    std::string schema;
    std::size_t train = 0; // 0: all rows
    std::string prior = "ig:1:0.05";
    bool localized = false;
    std::size_t burnin = 1000;
    std::size_t iters = 10000;
    std::uint64_t seed = 0;
    std::string metric = "deriv2";
    std::optional<double> group_threshold;
    std::string chain_path;
    std::string out = "model.json";
};

void cmd_fit(const FitOpts& o, const CLI::App* cmd) {
    const PriorSpec prior = parse_prior(o.prior);
    const SemiMetricSpec metric = parse_metric(o.metric);
    const McmcConfig mcmc = make_mcmc(o.burnin, o.iters, o.seed);

    const CsvSchema schema = load_phase([&] { return CsvSchema::from_json_file(o.schema); });
    Dataset ds = load_phase([&] {
        Dataset d = load_csv(o.data, schema);
        if (o.group_threshold) d = derive_binary_group(d, *o.group_threshold);
        return d;
    });
    if (o.train > 0 && o.train > ds.n())
        throw DataError("--train " + std::to_string(o.train) + " exceeds the " +
                        std::to_string(ds.n()) + " rows in " + o.data);
    Dataset train = o.train > 0 && o.train < ds.n()
                        ? load_phase([&] { return split(ds, o.train).first; })
                        : std::move(ds);

    const FitContext ctx = load_phase([&] { return FitContext::build(std::move(train), metric); });
    const FitMethod method = o.localized ? FitMethod::BayesLocal : FitMethod::BayesGlobal;
    const FitResult fit = fit_model(ctx, method, prior, mcmc);

    const std::string manifest = manifest_line(cmd, o.seed);
    const auto out_path = std::filesystem::path(o.out);
    const std::string chain_path =
        !o.chain_path.empty()
            ? o.chain_path
            : (out_path.parent_path() / (out_path.stem().string() + ".chain.csv")).string();

    const ParamLayout layout = ParamLayout::infer(ctx.data(), o.localized);
    save_chain_csv(chain_path, layout, *fit.chain, manifest);

    json model;
    model["manifest"] = {{"version", kVersion},
                         {"config", config_hash(cmd->get_name() + "\n" +
                                                cmd->config_to_str(true, false))},
                         {"seed", o.seed}};
    model["metric"] = metric.describe();
    model["prior"] = prior.describe();
    model["localized"] = o.localized;
    if (o.group_threshold) model["group_threshold"] = *o.group_threshold;
    model["mcmc"] = {{"burn_in", mcmc.burn_in}, {"n_record", mcmc.n_record}, {"seed", mcmc.seed}};
    model["bandwidths"] = {{"delta", fit.bw.delta},
                           {"h", fit.bw.h},
                           {"lambda", fit.bw.lambda},
                           {"b", fit.bw.b},
                           {"tau", fit.bw.tau}};
    json params = json::array();
    const auto& summary = *fit.summary;
    for (std::size_t i = 0; i < summary.params.size(); ++i) {
        const ParamSummary& ps = summary.params[i];
        params.push_back({{"name", ps.name},
                          {"mean", ps.mean},
                          {"lo95", ps.lo95},
                          {"hi95", ps.hi95},
                          {"total_se", ps.total_se},
                          {"batch_se", ps.batch_se},
                          {"sif", ps.sif},
                          {"geweke_z", summary.geweke_z[i]}});
    }
    model["summary"] = {{"accept_rate", summary.accept_rate},
                        {"final_step", summary.final_step},
                        {"params", std::move(params)}};
    model["residuals"] = fit.residuals;
    model["chain_csv"] = chain_path;
    model["schema"] = schema_to_json(schema);
    model["train"] = dataset_to_json(ctx.data());

    auto out = open_out(o.out);
    out << model.dump(2) << '\n';

    std::cout << "parameter        mean      2.5%     97.5%      SIF  geweke-z\n";
    for (std::size_t i = 0; i < summary.params.size(); ++i) {
        const ParamSummary& ps = summary.params[i];
        std::printf("%-12s %9.4f %9.4f %9.4f %8.2f %9.3f\n", ps.name.c_str(), ps.mean, ps.lo95,
                    ps.hi95, ps.sif, summary.geweke_z[i]);
    }
    std::printf("acceptance rate %.3f, final step %.4f\n", summary.accept_rate,
                summary.final_step);
    std::cout << "wrote " << o.out << " and " << chain_path << "\n";
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct PredictOpts {
    std::string model;
    std::string data;
    double interval = 0.95;
    std::string grid = "-10:10:1001";
    std::string out = "pred.csv";
};

void cmd_predict(const PredictOpts& o) {
    if (!(o.interval > 0.0 && o.interval < 1.0))
        throw UsageError("--interval must lie strictly between 0 and 1");
    const GridSpec grid = parse_grid(o.grid);

    const json model = load_phase([&] {
        std::ifstream in(o.model);
        if (!in) throw DataError("cannot open model file: " + o.model);
        json j;
        in >> j;
        return j;
    });

    const auto [train, schema, bw, residuals, metric, threshold, model_seed] = load_phase([&] {
        const Dataset ds = dataset_from_json(model.at("train"));
        const CsvSchema sch = schema_from_json(model.at("schema"));
        const json& bj = model.at("bandwidths");
        BandwidthParams b;
        b.delta = bj.at("delta").get<double>();
        b.h = bj.at("h").get<std::vector<double>>();
        b.lambda = bj.at("lambda").get<std::vector<double>>();
        b.b = bj.at("b").get<double>();
        b.tau = bj.at("tau").get<double>();
        const auto resid = model.at("residuals").get<std::vector<double>>();
        const SemiMetricSpec spec = parse_metric(model.at("metric").get<std::string>());
        std::optional<double> thr;
        if (model.contains("group_threshold"))
            thr = model.at("group_threshold").get<double>();
        const auto seed = model.at("manifest").at("seed").get<std::uint64_t>();
        return std::tuple(ds, sch, b, resid, spec, thr, seed);
    });

    const bool has_response = file_has_column(o.data, schema.response_col);
    if (!has_response && threshold)
        throw DataError("the model derives a grouping regressor from the response, but '" +
                        schema.response_col + "' is missing from " + o.data);

    const Dataset test = load_phase([&] {
        CsvSchema sch = schema;
        if (!has_response) sch.response_col = sch.curve_cols.front();
        Dataset d = load_csv(o.data, sch);
        if (!has_response)
            for (auto& obs : d.obs) obs.y = 0.0;
        if (threshold) d = derive_binary_group(d, *threshold);
        return d;
    });

    const FitContext ctx = load_phase([&] { return FitContext::build(train, metric); });
    std::vector<double> preds;
    try {
        preds = predict(ctx, bw, test);
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what()); // schema mismatch between model and data
    }

    const double lo_q =
        error_cdf_inverse(residuals, bw.b, bw.tau, 0.5 * (1.0 - o.interval), grid);
    const double hi_q =
        error_cdf_inverse(residuals, bw.b, bw.tau, 0.5 * (1.0 + o.interval), grid);

    const std::string manifest =
        std::string("funbayes ") + kVersion + " config=" +
        config_hash("predict\n" + o.model + "\n" + o.data + "\n" + fmt(o.interval) + "\n" +
                    o.grid) +
        " seed=" + std::to_string(model_seed);

    auto out = open_out(o.out);
    out << "# " << manifest << "\n";
    out << "row,prediction,lower,upper";
    if (has_response) out << ",response";
    out << '\n';
    for (std::size_t i = 0; i < preds.size(); ++i) {
        out << i << ',' << fmt(preds[i]) << ',' << fmt(preds[i] + lo_q) << ','
            << fmt(preds[i] + hi_q);
        if (has_response) out << ',' << fmt(test.obs[i].y);
        out << '\n';
    }

    std::cout << "wrote " << preds.size() << " forecasts to " << o.out << "\n";
    if (has_response) {
        const std::vector<double> y = test.responses();
        const ForecastMetrics fm = msfe_mafe(y, preds);
        std::vector<double> lo(preds.size()), hi(preds.size());
        for (std::size_t i = 0; i < preds.size(); ++i) {
            lo[i] = preds[i] + lo_q;
            hi[i] = preds[i] + hi_q;
        }
        std::printf("msfe %.4f (sd %.4f), mafe %.4f (sd %.4f), coverage %.4f\n", fm.msfe,
                    fm.sd_sq, fm.mafe, fm.sd_abs, coverage(y, lo, hi));
    }
}

// ---------------------------------------------------------------------------
// diagnose
// ---------------------------------------------------------------------------

struct DiagnoseOpts {
    std::string chain;
    std::size_t max_lag = 50;
    std::string out_dir;
};

void cmd_diagnose(const DiagnoseOpts& o, const CLI::App* cmd) {
    const ChainTable table = load_phase([&] { return load_chain_csv(o.chain); });

    const auto summaries = summarize_matrix(table.natural, table.names);
    std::vector<double> geweke;
    try {
        geweke = geweke_matrix(table.natural);
    } catch (const std::exception&) {
        geweke.assign(table.names.size(), std::numeric_limits<double>::quiet_NaN());
        std::cerr << "note: chain too short for the Geweke diagnostic\n";
    }
    double accept = 0.0;
    for (const auto a : table.accepts) accept += a;
    accept /= static_cast<double>(table.accepts.size());

    std::cout << "parameter        mean      2.5%     97.5%      SIF  geweke-z\n";
    for (std::size_t i = 0; i < summaries.size(); ++i) {
        const ParamSummary& ps = summaries[i];
        std::printf("%-12s %9.4f %9.4f %9.4f %8.2f %9.3f\n", ps.name.c_str(), ps.mean, ps.lo95,
                    ps.hi95, ps.sif, geweke[i]);
    }
    std::printf("acceptance rate %.3f over %ld recorded draws\n", accept, table.natural.rows());

    if (o.out_dir.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(o.out_dir, ec);
    if (ec) throw DataError("cannot create output directory: " + o.out_dir);
    const auto dir = std::filesystem::path(o.out_dir);
    const std::string manifest = manifest_line(cmd, 0);

    {
        auto out = open_out((dir / "diagnostics.csv").string());
        out << "# " << manifest << "\n";
        out << "parameter,mean,lo95,hi95,total_se,batch_se,sif,geweke_z\n";
        for (std::size_t i = 0; i < summaries.size(); ++i) {
            const ParamSummary& ps = summaries[i];
            out << ps.name << ',' << fmt(ps.mean) << ',' << fmt(ps.lo95) << ',' << fmt(ps.hi95)
                << ',' << fmt(ps.total_se) << ',' << fmt(ps.batch_se) << ',' << fmt(ps.sif)
                << ',' << fmt(geweke[i]) << '\n';
        }
        out << "acceptance_rate," << fmt(accept) << ",,,,,,\n";
    }

    {
        auto out = open_out((dir / "acf.csv").string());
        out << "# " << manifest << "\n";
        out << "lag";
        for (const auto& nm : table.names) out << ',' << nm;
        out << '\n';
        std::vector<std::vector<double>> acf;
        for (long c = 0; c < table.natural.cols(); ++c) {
            const std::vector<double> col(table.natural.col(c).begin(),
                                          table.natural.col(c).end());
            acf.push_back(autocorrelation(col, o.max_lag));
        }
        for (std::size_t lag = 0; lag <= o.max_lag; ++lag) {
            out << lag;
            for (const auto& col : acf)
                out << ',' << (lag < col.size() ? fmt(col[lag]) : "");
            out << '\n';
        }
    }
    std::cout << "wrote " << (dir / "diagnostics.csv").string() << " and "
              << (dir / "acf.csv").string() << "\n";
}

// ---------------------------------------------------------------------------
// compare-priors
// ---------------------------------------------------------------------------

struct CompareOpts {
    std::string data;
    std::string schema;
    std::size_t train = 160;
    std::vector<std::string> priors;
    bool global = false;
    std::string metric = "deriv2";
    std::optional<double> group_threshold;
    std::size_t burnin = 1000;
    std::size_t iters = 10000;
    std::uint64_t seed = 0;
    double interval = 0.95;
    std::string grid = "-10:10:1001";
    std::size_t evidence_draws = 2000;
    std::string out = "priors.csv";
};

void cmd_compare_priors(const CompareOpts& o, const CLI::App* cmd) {
    if (!(o.interval > 0.0 && o.interval < 1.0))
        throw UsageError("--interval must lie strictly between 0 and 1");
    if (o.evidence_draws < 1000)
        throw UsageError("--evidence-draws must be at least 1000");
    const std::vector<std::string> prior_texts =
        o.priors.empty() ? std::vector<std::string>{"ig:1:0.05", "ig:5:0.25", "cauchy"}
                         : o.priors;
    std::vector<PriorSpec> priors;
    for (const auto& t : prior_texts) priors.push_back(parse_prior(t));
    const SemiMetricSpec metric = parse_metric(o.metric);
    const GridSpec grid = parse_grid(o.grid);
    make_mcmc(o.burnin, o.iters, o.seed); // flag validation only

    const CsvSchema schema = load_phase([&] { return CsvSchema::from_json_file(o.schema); });
    const Dataset ds = load_phase([&] {
        Dataset d = load_csv(o.data, schema);
        if (o.group_threshold) d = derive_binary_group(d, *o.group_threshold);
        return d;
    });
    if (o.train < 3 || o.train >= ds.n())
        throw DataError("--train must leave at least one holdout row of the " +
                        std::to_string(ds.n()) + " in " + o.data);

    const std::string manifest = manifest_line(cmd, o.seed);
    auto out = open_out(o.out);
    out << "# " << manifest << "\n";
    out << "prior,log_ml,msfe,msfe_sd,mafe,mafe_sd,coverage\n";
    std::cout << "prior            log-ML      MSFE (sd)        MAFE (sd)    coverage\n";

    for (std::size_t i = 0; i < priors.size(); ++i) {
        ApplicationConfig cfg;
        cfg.full = ds;
        cfg.n_train = o.train;
        cfg.metric = metric;
        cfg.prior = priors[i];
        cfg.localized = !o.global;
        cfg.mcmc = make_mcmc(o.burnin, o.iters, Rng(o.seed).derive(i).next_u64());
        cfg.quantile_grid = grid;
        cfg.interval = o.interval;
        cfg.evidence_draws = o.evidence_draws;
        cfg.compute_evidence = true;

        const ApplicationResult res = run_application(cfg);
        const double log_ml = res.evidence->log_evidence;
        out << prior_texts[i] << ',' << fmt(log_ml) << ',' << fmt(res.forecast.msfe) << ','
            << fmt(res.forecast.sd_sq) << ',' << fmt(res.forecast.mafe) << ','
            << fmt(res.forecast.sd_abs) << ',' << fmt(res.coverage_rate) << '\n';
        std::printf("%-14s %9.2f  %7.4f (%.4f)  %7.4f (%.4f)  %7.4f\n", prior_texts[i].c_str(),
                    log_ml, res.forecast.msfe, res.forecast.sd_sq, res.forecast.mafe,
                    res.forecast.sd_abs, res.coverage_rate);
    }
    std::cout << "wrote " << o.out << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian bandwidth estimation for functional regression with mixed "
                 "regressors and unknown error density"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    SimulateOpts so;
    CLI::App* sim = app.add_subcommand(
        "simulate", "Run a seeded simulation study and write fit/density error summaries");
    sim->add_option("--model", so.model, "Synthetic regression model (1 or 2)");
    sim->add_option("--n", so.n, "Observations per replication");
    sim->add_option("--error", so.error_law, "Error law: trimodal or claw");
    sim->add_option("--reps", so.reps, "Number of replications");
    sim->add_option("--seed", so.seed, "Base seed; replications derive independent streams");
    sim->add_option("--method", so.methods,
                    "Methods to run (repeatable): bayes-local, bayes-global, cv");
    sim->add_option("--prior", so.prior, "Squared-bandwidth prior: ig:a:b or cauchy[:scale]");
    sim->add_option("--burnin", so.burnin, "Burn-in iterations");
    sim->add_option("--iters", so.iters, "Recorded iterations");
    sim->add_option("--cv-budget", so.cv_budget, "Objective evaluations for the CV search");
    sim->add_option("--density-grid", so.density_grid, "Density evaluation grid lo:hi:count");
    sim->add_option("--jobs", so.jobs, "Worker threads across replications");
    sim->add_option("--out", so.out_dir, "Output directory")->required();

    FitOpts fo;
    CLI::App* fit = app.add_subcommand(
        "fit", "Sample the bandwidth posterior for a CSV dataset and store the fitted model");
    fit->add_option("--data", fo.data, "Training CSV file")->required();
    fit->add_option("--schema", fo.schema, "JSON sidecar naming column roles")->required();
    fit->add_option("--train", fo.train, "Train on the first N rows (0: all rows)");
    fit->add_option("--prior", fo.prior, "Squared-bandwidth prior: ig:a:b or cauchy[:scale]");
    fit->add_flag("--localized", fo.localized,
                  "Residual-dependent density bandwidths (adds tau to the posterior)");
    fit->add_option("--burnin", fo.burnin, "Burn-in iterations");
    fit->add_option("--iters", fo.iters, "Recorded iterations");
    fit->add_option("--seed", fo.seed, "Sampler seed");
    fit->add_option("--metric", fo.metric, "Curve distance: derivN[:basis] or fpca:K");
    fit->add_option("--group-threshold", fo.group_threshold,
                    "Append a binary regressor splitting the response at this value");
    fit->add_option("--chain", fo.chain_path, "Chain dump path (default: <out>.chain.csv)");
    fit->add_option("--out", fo.out, "Model file to write");

    PredictOpts po;
    CLI::App* pred = app.add_subcommand(
        "predict", "Forecast a test CSV through a fitted model with prediction intervals");
    pred->add_option("--model", po.model, "Model file from fit")->required();
    pred->add_option("--data", po.data, "Test CSV file")->required();
    pred->add_option("--interval", po.interval, "Pointwise interval mass, in (0, 1)");
    pred->add_option("--grid", po.grid, "Residual quantile grid lo:hi:count");
    pred->add_option("--out", po.out, "Forecast CSV to write");

    DiagnoseOpts dno;
    CLI::App* diag = app.add_subcommand(
        "diagnose", "Summarize a chain dump: moments, SIF, Geweke z, autocorrelations");
    diag->add_option("--chain", dno.chain, "Chain CSV from fit")->required();
    diag->add_option("--max-lag", dno.max_lag, "Autocorrelation lags to report");
    diag->add_option("--out", dno.out_dir, "Directory for diagnostics.csv and acf.csv");

    CompareOpts co;
    CLI::App* cmp = app.add_subcommand(
        "compare-priors", "Fit one model per prior and tabulate evidence and forecast quality");
    cmp->add_option("--data", co.data, "Full CSV file (train + holdout)")->required();
    cmp->add_option("--schema", co.schema, "JSON sidecar naming column roles")->required();
    cmp->add_option("--train", co.train, "Train on the first N rows");
    cmp->add_option("--priors", co.priors, "Priors to compare")->delimiter(',');
    cmp->add_flag("--global", co.global, "Disable residual-dependent density bandwidths");
    cmp->add_option("--metric", co.metric, "Curve distance: derivN[:basis] or fpca:K");
    cmp->add_option("--group-threshold", co.group_threshold,
                    "Append a binary regressor splitting the response at this value");
    cmp->add_option("--burnin", co.burnin, "Burn-in iterations");
    cmp->add_option("--iters", co.iters, "Recorded iterations");
    cmp->add_option("--seed", co.seed, "Base seed; each prior derives its own stream");
    cmp->add_option("--interval", co.interval, "Pointwise interval mass, in (0, 1)");
    cmp->add_option("--grid", co.grid, "Residual quantile grid lo:hi:count");
    cmp->add_option("--evidence-draws", co.evidence_draws,
                    "Proposal draws for the evidence denominator");
    cmp->add_option("--out", co.out, "Comparison table to write");

    add_env_names(&app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2; // help/version exit clean, everything else is usage
    }

    try {
        if (sim->parsed()) cmd_simulate(so, sim);
        if (fit->parsed()) cmd_fit(fo, fit);
        if (pred->parsed()) cmd_predict(po);
        if (diag->parsed()) cmd_diagnose(dno, diag);
        if (cmp->parsed()) cmd_compare_priors(co, cmp);
        return 0;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    }
}
