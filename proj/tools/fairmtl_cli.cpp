// Command-line surface for the fairmtl library. Subcommands cover the whole
// pipeline: synthesize data, train a lambda-conditioned multi-task network,
// post-process predictions toward group fairness, evaluate with bootstrap
// replication, and run the consolidated MTL-vs-STL experiment grid.
//
// Conventions: all experiment parameters live in JSON configs (--config);
// --seed overrides the config's master seed; --out names the artifact to
// write. Every command is deterministic: identical inputs and seeds produce
// byte-identical outputs. Exit codes: 0 success, 2 config/usage error,
// 3 data error, 4 numerical error.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "fairmtl/fairmtl.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;
using namespace fairmtl;

// ---------------------------------------------------------------------------
// file and config helpers

// Configs are user input: any problem (missing file, bad JSON, bad field) is a
// usage error (exit 2).
json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::invalid_config, "cannot open config file '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(errc::invalid_config, "config '" + path + "' is not valid JSON: " + e.what());
    }
}

// Data artifacts (models, prediction files) are pipeline outputs: problems are
// data errors (exit 3).
json load_json_artifact(const std::string& path, const std::string& what) {
    std::ifstream in(path);
    if (!in) fail(errc::io_error, "cannot open " + what + " file '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(errc::schema_error, what + " file '" + path + "' is not valid JSON: " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(errc::io_error, "cannot open '" + path + "' for writing");
    out << text;
    if (!out) fail(errc::io_error, "failed while writing '" + path + "'");
}

// Re-classify schema/type errors raised while digesting a config as config
// errors so they exit with code 2 rather than 3.
template <class F>
void parse_config_section(const std::string& path, F&& body) {
    try {
        body();
    } catch (const json::exception& e) {
        fail(errc::invalid_config, "config '" + path + "': " + e.what());
    } catch (const Error& e) {
        if (e.exit_code() == 2) throw;
        fail(errc::invalid_config, "config '" + path + "': " + e.what());
    }
}

JitterConfig jitter_from_json(const json& j) {
    JitterConfig cfg;
    if (j.contains("half_width")) cfg.half_width = j.at("half_width").get<double>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

// Architecture knobs only; feature_dim, groups, and seed are filled from the
// dataset and the master seed by the caller.
void network_arch_from_json(const json& j, NetworkConfig& cfg) {
    if (j.contains("hidden")) cfg.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    if (j.contains("repr_dim")) cfg.repr_dim = j.at("repr_dim").get<std::size_t>();
    if (j.contains("activation"))
        cfg.activation = activation_from_string(j.at("activation").get<std::string>());
    if (j.contains("heads")) {
        cfg.heads.clear();
        for (const json& h : j.at("heads")) {
            HeadSpec spec;
            spec.kind = task_kind_from_string(h.at("kind").get<std::string>());
            spec.label = h.at("label").get<std::size_t>();
            cfg.heads.push_back(spec);
        }
    }
}

void yoto_from_json(const json& j, YotoConfig& cfg) {
    if (j.contains("lambda_min")) cfg.lambda_min = j.at("lambda_min").get<double>();
    if (j.contains("lambda_max")) cfg.lambda_max = j.at("lambda_max").get<double>();
    if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("learning_rate")) cfg.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("validation_grid"))
        cfg.validation_grid = j.at("validation_grid").get<std::vector<std::vector<double>>>();
}

Predictions make_predictions(const MtlNetwork& net, const Dataset& ds,
                             const std::vector<double>& lambda) {
    Predictions p;
    for (const HeadSpec& h : net.config().heads) p.task_kinds.push_back(h.kind);
    p.group = ds.group;
    p.values = net.predict(ds, lambda);
    return p;
}

std::string lambda_to_string(const std::vector<double>& lambda) {
    std::string s = "[";
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        if (i) s += ", ";
        s += detail::format_double(lambda[i]);
    }
    return s + "]";
}

// ---------------------------------------------------------------------------
// bootstrap evaluation shared by `evaluate` and `experiment`

struct EvalColumn {
    std::string task;  // label column name: "y1" or "y2"
    TaskKind kind;     // regression -> MSE, binary_score -> AUC
    std::size_t label = 0;
    std::vector<double> values;  // row-aligned predictions
};

struct MetricStats {
    double mean = 0.0;
    double std_dev = 0.0;
};

MetricStats summarize(const std::vector<double>& replicates) {
    MetricStats st;
    const double n = static_cast<double>(replicates.size());
    for (double v : replicates) st.mean += v;
    st.mean /= n;
    double acc = 0.0;
    for (double v : replicates) acc += (v - st.mean) * (v - st.mean);
    st.std_dev = std::sqrt(acc / n);
    return st;
}

json stats_json(const char* metric, const MetricStats& st) {
    return {{"metric", metric}, {"mean", st.mean}, {"std", st.std_dev}};
}

// Per-replication seeds derive from the master seed so replications could fan
// out concurrently; they run serially here.
std::vector<std::vector<std::size_t>> bootstrap_indices(std::size_t n, std::size_t replications,
                                                        std::uint64_t seed) {
    std::vector<std::vector<std::size_t>> out(replications, std::vector<std::size_t>(n));
    for (std::size_t b = 0; b < replications; ++b) {
        Rng rng(mix_seed(seed, b));
        for (std::size_t i = 0; i < n; ++i) out[b][i] = rng.below(n);
    }
    return out;
}

double column_performance(const EvalColumn& col, const Dataset& labels,
                          const std::vector<std::size_t>& rows) {
    if (col.kind == TaskKind::regression) {
        std::vector<double> pred, truth;
        for (std::size_t i : rows) {
            if (!labels.present[col.label][i]) continue;
            pred.push_back(col.values[i]);
            truth.push_back(labels.labels[col.label][i]);
        }
        if (pred.empty())
            fail(errc::no_labels, "no labeled rows for task " + col.task + " in a bootstrap replicate");
        return mse(pred, truth);
    }
    std::vector<double> scores;
    std::vector<int> truth;
    for (std::size_t i : rows) {
        if (!labels.present[col.label][i]) continue;
        scores.push_back(col.values[i]);
        truth.push_back(static_cast<int>(labels.labels[col.label][i]));
    }
    if (scores.empty())
        fail(errc::no_labels, "no labeled rows for task " + col.task + " in a bootstrap replicate");
    return auc(scores, truth);
}

double column_unfairness(const EvalColumn& col, const Dataset& labels,
                         const std::vector<std::size_t>& rows) {
    std::vector<double> values;
    std::vector<GroupLabel> groups;
    values.reserve(rows.size());
    groups.reserve(rows.size());
    for (std::size_t i : rows) {
        values.push_back(col.values[i]);
        groups.push_back(labels.group[i]);
    }
    return ks_unfairness(values, groups);
}

// Builds `{task: {performance: {mean, std}, unfairness: {mean, std}}}` for one
// variant. All columns share the same replicate index sets.
json evaluate_columns(const std::vector<EvalColumn>& columns, const Dataset& labels,
                      const std::vector<std::vector<std::size_t>>& replicates) {
    json out = json::object();
    for (const EvalColumn& col : columns) {
        std::vector<double> perf, unf;
        perf.reserve(replicates.size());
        unf.reserve(replicates.size());
        for (const auto& rows : replicates) {
            perf.push_back(column_performance(col, labels, rows));
            unf.push_back(column_unfairness(col, labels, rows));
        }
        out[col.task] = {
            {"performance", stats_json(col.kind == TaskKind::regression ? "mse" : "auc",
                                       summarize(perf))},
            {"unfairness", stats_json("ks", summarize(unf))},
        };
    }
    return out;
}

// ---------------------------------------------------------------------------
// model file

constexpr int kModelVersion = 1;

json model_to_json(const MtlNetwork& net, const std::vector<double>& lambda,
                   const SplitSpec& split_spec, CalibrationObjective objective) {
    return {{"version", kModelVersion},
            {"kind", "fairmtl-model"},
            {"network", net.to_json()},
            {"lambda", lambda},
            {"split", to_json_obj(split_spec)},
            {"objective", to_string(objective)}};
}

struct Model {
    MtlNetwork net;
    std::vector<double> lambda;
    SplitSpec split_spec;
};

Model model_from_json(const json& j, const std::string& path) {
    try {
        if (j.at("kind").get<std::string>() != "fairmtl-model")
            fail(errc::schema_error, "'" + path + "' is not a fairmtl model file");
        if (j.at("version").get<int>() != kModelVersion)
            fail(errc::schema_error, "unsupported model version in '" + path + "'");
        Model m;
        m.net = MtlNetwork::from_json(j.at("network"));
        m.lambda = j.at("lambda").get<std::vector<double>>();
        from_json_obj(j.at("split"), m.split_spec);
        if (m.lambda.size() != m.net.task_count())
            fail(errc::schema_error, "model lambda length does not match the network heads");
        return m;
    } catch (const json::exception& e) {
        fail(errc::schema_error, "model file '" + path + "': " + e.what());
    }
}

// ---------------------------------------------------------------------------
// synth

void cmd_synth(const std::string& config_path, const std::string& out_path,
               std::optional<std::uint64_t> seed) {
    const json j = load_config(config_path);
    SynthConfig cfg;
    parse_config_section(config_path, [&] { from_json_obj(j, cfg); });
    if (seed) cfg.seed = *seed;
    const Dataset ds = synth_generate(cfg);
    save_csv(ds, out_path);
    std::cout << "wrote " << ds.size() << " rows (" << ds.feature_dim << " features, "
              << ds.distinct_groups().size() << " groups) to " << out_path << "\n";
}

// ---------------------------------------------------------------------------
// train

void cmd_train(const std::string& data_path, const std::string& config_path,
               const std::string& out_path, std::optional<std::uint64_t> seed) {
    const json j = load_config(config_path);
    const Dataset ds = load_csv(data_path);

    std::uint64_t master = 0;
    SplitSpec split_spec;
    NetworkConfig ncfg;
    YotoConfig yoto;
    CalibrationObjective objective = CalibrationObjective::both_tasks;
    parse_config_section(config_path, [&] {
        if (j.contains("seed")) master = j.at("seed").get<std::uint64_t>();
        if (j.contains("split")) from_json_obj(j.at("split"), split_spec);
        if (j.contains("network")) network_arch_from_json(j.at("network"), ncfg);
        if (j.contains("yoto")) yoto_from_json(j.at("yoto"), yoto);
        if (j.contains("objective"))
            objective = objective_from_string(j.at("objective").get<std::string>());
    });
    if (seed) master = *seed;

    ncfg.feature_dim = ds.feature_dim;
    ncfg.groups = ds.distinct_groups();
    ncfg.seed = master;
    if (ncfg.heads.empty())
        ncfg.heads = {{TaskKind::regression, 0}, {TaskKind::binary_score, 1}};

    const SplitResult parts = split(ds, split_spec);
    MtlNetwork net = train(MtlNetwork(ncfg), parts.train, yoto);
    const auto grid = yoto.validation_grid.empty()
                          ? default_validation_grid(yoto, ncfg.heads.size())
                          : yoto.validation_grid;
    const std::vector<double> lambda = calibrate_lambda(net, parts.validation, grid, objective);

    write_text(out_path, model_to_json(net, lambda, split_spec, objective).dump(2) + "\n");
    std::cout << "trained " << ncfg.heads.size() << "-task network on " << parts.train.size()
              << " rows; calibrated lambda = " << lambda_to_string(lambda) << "; wrote "
              << out_path << "\n";
}

// ---------------------------------------------------------------------------
// fairify

void cmd_fairify(const std::string& model_path, const std::string& data_path,
                 const std::string& config_path, const std::string& out_path,
                 std::optional<std::uint64_t> seed) {
    Model model = model_from_json(load_json_artifact(model_path, "model"), model_path);

    JitterConfig jitter;
    std::uint64_t zeta_seed = 0;
    if (!config_path.empty()) {
        const json j = load_config(config_path);
        parse_config_section(config_path, [&] {
            if (j.contains("lambda")) model.lambda = j.at("lambda").get<std::vector<double>>();
            if (j.contains("jitter")) jitter = jitter_from_json(j.at("jitter"));
            if (j.contains("seed")) zeta_seed = j.at("seed").get<std::uint64_t>();
        });
        if (model.lambda.size() != model.net.task_count())
            fail(errc::invalid_config, "lambda override length does not match the model heads");
    }
    if (seed) zeta_seed = *seed;

    const auto& heads = model.net.config().heads;
    for (std::size_t a = 0; a < heads.size(); ++a)
        for (std::size_t b = a + 1; b < heads.size(); ++b)
            if (heads[a].label == heads[b].label)
                fail(errc::invalid_config, "model heads share a label column; output would clash");

    const Dataset ds = load_csv(data_path);
    const SplitResult parts = split(ds, model.split_spec);

    const FairCalibrator cal =
        FairCalibrator::fit(make_predictions(model.net, parts.pool, model.lambda), jitter);
    const Predictions base = make_predictions(model.net, ds, model.lambda);
    const Predictions fair = cal.transform_batch(base, zeta_seed);

    std::ostringstream out;
    out << "s";
    for (const HeadSpec& h : heads)
        out << ",base_y" << (h.label + 1) << ",fair_y" << (h.label + 1);
    out << "\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out << ds.group[i];
        for (std::size_t t = 0; t < heads.size(); ++t)
            out << "," << detail::format_double(base.values[t][i]) << ","
                << detail::format_double(fair.values[t][i]);
        out << "\n";
    }
    write_text(out_path, out.str());
    std::cout << "wrote base and fair predictions for " << ds.size() << " rows ("
              << heads.size() << " tasks, pool size " << parts.pool.size() << ") to "
              << out_path << "\n";
}

// ---------------------------------------------------------------------------
// evaluate

struct PredictionFile {
    std::vector<GroupLabel> group;
    // slot l corresponds to label column y{l+1}
    std::array<std::vector<double>, 2> base, fair;
    std::array<bool, 2> has{{false, false}};
};

PredictionFile load_prediction_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::io_error, "cannot open predictions file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) fail(errc::schema_error, "'" + path + "' is empty");

    const std::vector<std::string> header = detail::split_csv_line(line);
    std::size_t s_col = header.size();
    std::array<std::size_t, 2> base_col{{header.size(), header.size()}};
    std::array<std::size_t, 2> fair_col{{header.size(), header.size()}};
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string& name = header[c];
        if (name == "s") s_col = c;
        else if (name == "base_y1") base_col[0] = c;
        else if (name == "fair_y1") fair_col[0] = c;
        else if (name == "base_y2") base_col[1] = c;
        else if (name == "fair_y2") fair_col[1] = c;
        else fail(errc::schema_error, "unrecognized predictions column '" + name + "'");
    }
    if (s_col == header.size()) fail(errc::schema_error, "missing group column 's'");

    PredictionFile pf;
    for (std::size_t l = 0; l < 2; ++l) {
        const bool has_base = base_col[l] != header.size();
        const bool has_fair = fair_col[l] != header.size();
        if (has_base != has_fair)
            fail(errc::schema_error,
                 "predictions need both base_y" + std::to_string(l + 1) + " and fair_y" +
                     std::to_string(l + 1));
        pf.has[l] = has_base;
    }
    if (!pf.has[0] && !pf.has[1])
        fail(errc::schema_error, "predictions file has no base/fair column pair");

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            fail(errc::parse_error, "line " + std::to_string(lineno) + ": expected " +
                                        std::to_string(header.size()) + " cells, got " +
                                        std::to_string(cells.size()));
        {
            const std::string& cell = cells[s_col];
            GroupLabel g = 0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), g);
            if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
                fail(errc::parse_error, "line " + std::to_string(lineno) + ", column s: '" +
                                            cell + "' is not an integer");
            pf.group.push_back(g);
        }
        for (std::size_t l = 0; l < 2; ++l) {
            if (!pf.has[l]) continue;
            pf.base[l].push_back(detail::parse_double(cells[base_col[l]], lineno,
                                                      "base_y" + std::to_string(l + 1)));
            pf.fair[l].push_back(detail::parse_double(cells[fair_col[l]], lineno,
                                                      "fair_y" + std::to_string(l + 1)));
        }
    }
    return pf;
}

void cmd_evaluate(const std::string& pred_path, const std::string& data_path,
                  const std::string& config_path, const std::string& out_path,
                  std::optional<std::uint64_t> seed) {
    std::size_t replications = 20;
    std::uint64_t boot_seed = 0;
    if (!config_path.empty()) {
        const json j = load_config(config_path);
        parse_config_section(config_path, [&] {
            if (j.contains("bootstrap")) replications = j.at("bootstrap").get<std::size_t>();
            if (j.contains("seed")) boot_seed = j.at("seed").get<std::uint64_t>();
        });
        if (replications == 0)
            fail(errc::invalid_config, "bootstrap replication count must be >= 1");
    }
    if (seed) boot_seed = *seed;

    const PredictionFile pf = load_prediction_csv(pred_path);
    if (pf.group.empty()) fail(errc::empty_input, "predictions file has no rows");
    const Dataset labels = load_csv(data_path);
    if (labels.size() != pf.group.size())
        fail(errc::length_mismatch, "predictions have " + std::to_string(pf.group.size()) +
                                        " rows but data has " + std::to_string(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels.group[i] != pf.group[i])
            fail(errc::invalid_value,
                 "group mismatch between predictions and data at row " + std::to_string(i + 1));

    const std::array<TaskKind, 2> kind_of{{TaskKind::regression, TaskKind::binary_score}};
    std::vector<EvalColumn> base_cols, fair_cols;
    for (std::size_t l = 0; l < 2; ++l) {
        if (!pf.has[l]) continue;
        bool any = false;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels.present[l][i]) any = true;
        if (!any)
            fail(errc::no_labels, "data has no y" + std::to_string(l + 1) + " labels to score");
        const std::string task = "y" + std::to_string(l + 1);
        base_cols.push_back({task, kind_of[l], l, pf.base[l]});
        fair_cols.push_back({task, kind_of[l], l, pf.fair[l]});
    }

    const auto replicates = bootstrap_indices(labels.size(), replications, boot_seed);
    const json report = {{"base", evaluate_columns(base_cols, labels, replicates)},
                         {"fair", evaluate_columns(fair_cols, labels, replicates)}};
    write_text(out_path, report.dump(2) + "\n");
    std::cout << "evaluated " << base_cols.size() << " task(s) over " << replications
              << " bootstrap replicates; wrote " << out_path << "\n";
}

// ---------------------------------------------------------------------------
// experiment

std::string format_pm(const MetricStats& st) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f ± %.2f", st.mean, st.std_dev);
    return buf;
}

std::string format_fraction(double f) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g%%", f * 100.0);
    return buf;
}

struct TableRow {
    std::string learner, regime, missing;
    std::array<std::string, 4> cells;  // y1 perf, y1 ks, y2 perf, y2 ks
};

std::string render_table(const std::vector<TableRow>& rows) {
    static const std::array<const char*, 7> headers{
        {"learner", "regime", "missing", "y1 mse", "y1 ks", "y2 auc", "y2 ks"}};
    std::array<std::size_t, 7> width;
    for (std::size_t c = 0; c < 7; ++c) width[c] = std::string(headers[c]).size();
    auto measure = [&](const std::string& s, std::size_t c) {
        // the ± sign is two bytes but one column
        std::size_t len = s.size();
        if (s.find("±") != std::string::npos) --len;
        width[c] = std::max(width[c], len);
        return len;
    };
    for (const TableRow& r : rows) {
        measure(r.learner, 0);
        measure(r.regime, 1);
        measure(r.missing, 2);
        for (std::size_t c = 0; c < 4; ++c) measure(r.cells[c], c + 3);
    }
    std::ostringstream out;
    auto emit = [&](const std::string& s, std::size_t c, bool last) {
        std::size_t len = s.size();
        if (s.find("±") != std::string::npos) --len;
        out << s;
        if (!last)
            out << std::string(width[c] - len + 2, ' ');
    };
    for (std::size_t c = 0; c < 7; ++c) emit(headers[c], c, c == 6);
    out << "\n";
    for (const TableRow& r : rows) {
        emit(r.learner, 0, false);
        emit(r.regime, 1, false);
        emit(r.missing, 2, false);
        for (std::size_t c = 0; c < 4; ++c) emit(r.cells[c], c + 3, c == 3);
        out << "\n";
    }
    return out.str();
}

void cmd_experiment(const std::string& config_path, const std::string& out_path,
                    const std::string& table_path, std::optional<std::uint64_t> seed) {
    const json j = load_config(config_path);

    std::uint64_t master = 0;
    SynthConfig synth_cfg;
    SplitSpec split_spec;
    std::vector<double> fractions{0.0, 0.25, 0.5, 0.75, 0.95};
    NetworkConfig arch;
    YotoConfig yoto;
    CalibrationObjective objective = CalibrationObjective::both_tasks;
    JitterConfig jitter;
    bool jitter_seed_given = false;
    std::size_t replications = 20;
    parse_config_section(config_path, [&] {
        if (j.contains("seed")) master = j.at("seed").get<std::uint64_t>();
        if (seed) master = *seed;
        if (j.contains("synth")) from_json_obj(j.at("synth"), synth_cfg);
        if (!(j.contains("synth") && j.at("synth").contains("seed")))
            synth_cfg.seed = mix_seed(master, 0x01);
        if (j.contains("split")) from_json_obj(j.at("split"), split_spec);
        if (!(j.contains("split") && j.at("split").contains("seed")))
            split_spec.seed = mix_seed(master, 0x02);
        if (j.contains("missing_fractions"))
            fractions = j.at("missing_fractions").get<std::vector<double>>();
        if (j.contains("network")) network_arch_from_json(j.at("network"), arch);
        if (j.contains("yoto")) yoto_from_json(j.at("yoto"), yoto);
        if (j.contains("objective"))
            objective = objective_from_string(j.at("objective").get<std::string>());
        if (j.contains("jitter")) {
            jitter = jitter_from_json(j.at("jitter"));
            jitter_seed_given = j.at("jitter").contains("seed");
        }
        if (j.contains("bootstrap")) replications = j.at("bootstrap").get<std::size_t>();
    });
    if (!arch.heads.empty())
        fail(errc::invalid_config, "experiment fixes the task heads; drop network.heads");
    if (fractions.empty()) fail(errc::invalid_config, "missing_fractions must be non-empty");
    for (double f : fractions)
        if (!(f >= 0.0 && f <= 1.0))
            fail(errc::invalid_config, "missing fractions must lie in [0, 1]");
    if (replications == 0) fail(errc::invalid_config, "bootstrap replication count must be >= 1");

    const Dataset ds = synth_generate(synth_cfg);
    const SplitResult parts = split(ds, split_spec);

    json cells = json::array();
    std::vector<TableRow> rows;
    for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
        const double f = fractions[fi];
        const Dataset masked =
            mask_labels(parts.train, 0, f, mix_seed(master, 0x10 + fi));
        for (std::size_t li = 0; li < 2; ++li) {
            const bool is_mtl = li == 0;
            const std::uint64_t cell_seed = mix_seed(master, 0x100 + 8 * fi + li);

            NetworkConfig ncfg = arch;
            ncfg.feature_dim = ds.feature_dim;
            ncfg.groups = ds.distinct_groups();
            ncfg.seed = cell_seed;
            ncfg.heads = is_mtl ? std::vector<HeadSpec>{{TaskKind::regression, 0},
                                                        {TaskKind::binary_score, 1}}
                                : std::vector<HeadSpec>{{TaskKind::regression, 0}};

            // a config-pinned grid sizes for the 2-task learner; STL always
            // uses the default single-task ladder
            YotoConfig ycfg = yoto;
            if (!is_mtl) ycfg.validation_grid.clear();
            const auto grid = ycfg.validation_grid.empty()
                                  ? default_validation_grid(ycfg, ncfg.heads.size())
                                  : ycfg.validation_grid;

            const MtlNetwork net = train(MtlNetwork(ncfg), masked, ycfg);
            const std::vector<double> lambda = calibrate_lambda(
                net, parts.validation, grid,
                is_mtl ? objective : CalibrationObjective::regression_only);

            JitterConfig jcfg = jitter;
            if (!jitter_seed_given) jcfg.seed = mix_seed(master, 0x200 + 8 * fi + li);
            const FairCalibrator cal =
                FairCalibrator::fit(make_predictions(net, parts.pool, lambda), jcfg);
            const Predictions base = make_predictions(net, parts.test, lambda);
            const Predictions fair =
                cal.transform_batch(base, mix_seed(master, 0x300 + 8 * fi + li));

            // raw and post share replicate indices, so their cells are paired
            const auto replicates = bootstrap_indices(
                parts.test.size(), replications, mix_seed(master, 0x400 + 8 * fi + li));
            for (const char* regime : {"raw", "post"}) {
                const bool raw = std::string(regime) == "raw";
                std::vector<EvalColumn> cols;
                for (std::size_t t = 0; t < ncfg.heads.size(); ++t) {
                    const std::size_t l = ncfg.heads[t].label;
                    cols.push_back({"y" + std::to_string(l + 1), ncfg.heads[t].kind, l,
                                    raw ? base.values[t] : fair.values[t]});
                }
                const json metrics = evaluate_columns(cols, parts.test, replicates);
                cells.push_back({{"missing_fraction", f},
                                 {"learner", is_mtl ? "mtl" : "stl"},
                                 {"regime", regime},
                                 {"lambda", lambda},
                                 {"metrics", metrics}});
                TableRow row;
                row.learner = is_mtl ? "mtl" : "stl";
                row.regime = regime;
                row.missing = format_fraction(f);
                for (std::size_t c = 0; c < 4; ++c) row.cells[c] = "-";
                for (const auto& [task, m] : metrics.items()) {
                    const std::size_t off = task == "y1" ? 0 : 2;
                    row.cells[off] = format_pm({m.at("performance").at("mean").get<double>(),
                                                m.at("performance").at("std").get<double>()});
                    row.cells[off + 1] = format_pm({m.at("unfairness").at("mean").get<double>(),
                                                    m.at("unfairness").at("std").get<double>()});
                }
                rows.push_back(std::move(row));
            }
        }
    }

    const json report = {{"version", 1},
                         {"kind", "experiment-report"},
                         {"seed", master},
                         {"bootstrap", replications},
                         {"test_rows", parts.test.size()},
                         {"cells", cells}};
    write_text(out_path, report.dump(2) + "\n");
    const std::string table = render_table(rows);
    if (!table_path.empty()) write_text(table_path, table);
    std::cout << table;
    std::cout << "wrote " << cells.size() << " result cells to " << out_path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fairness-aware multi-task learning pipeline"};
    app.require_subcommand(1);

    std::string synth_config, synth_out;
    std::uint64_t synth_seed = 0;
    auto* synth = app.add_subcommand("synth", "generate a synthetic two-task dataset CSV");
    synth->add_option("--config", synth_config, "synthesis config JSON")->required();
    synth->add_option("--out", synth_out, "output CSV path")->required();
    auto* synth_seed_opt = synth->add_option("--seed", synth_seed, "override the config seed");

    std::string train_data, train_config, train_out;
    std::uint64_t train_seed = 0;
    auto* train_cmd = app.add_subcommand("train", "train a lambda-conditioned network and "
                                                  "calibrate the task weights");
    train_cmd->add_option("--data", train_data, "training dataset CSV")->required();
    train_cmd->add_option("--config", train_config, "training config JSON")->required();
    train_cmd->add_option("--out", train_out, "output model JSON path")->required();
    auto* train_seed_opt = train_cmd->add_option("--seed", train_seed, "override the config seed");

    std::string fair_model, fair_data, fair_config, fair_out;
    std::uint64_t fair_seed = 0;
    auto* fairify = app.add_subcommand("fairify", "emit base and barycenter-mapped fair "
                                                  "predictions for every row");
    fairify->add_option("--model", fair_model, "trained model JSON")->required();
    fairify->add_option("--data", fair_data, "dataset CSV (the model's split spec locates "
                                             "the calibration pool)")->required();
    fairify->add_option("--config", fair_config, "optional fairify config JSON");
    fairify->add_option("--out", fair_out, "output predictions CSV path")->required();
    auto* fair_seed_opt = fairify->add_option("--seed", fair_seed, "override the tie-break seed");

    std::string eval_pred, eval_data, eval_config, eval_out;
    std::uint64_t eval_seed = 0;
    auto* evaluate = app.add_subcommand("evaluate", "bootstrap performance/unfairness report "
                                                    "for a predictions file");
    evaluate->add_option("--pred", eval_pred, "predictions CSV from fairify")->required();
    evaluate->add_option("--data", eval_data, "row-aligned labeled dataset CSV")->required();
    evaluate->add_option("--config", eval_config, "optional evaluation config JSON");
    evaluate->add_option("--out", eval_out, "output report JSON path")->required();
    auto* eval_seed_opt = evaluate->add_option("--seed", eval_seed, "override the bootstrap seed");

    std::string exp_config, exp_out, exp_table;
    std::uint64_t exp_seed = 0;
    auto* experiment = app.add_subcommand("experiment", "run the MTL-vs-STL x missing-fraction "
                                                        "x raw/post grid on synthetic data");
    experiment->add_option("--config", exp_config, "experiment config JSON")->required();
    experiment->add_option("--out", exp_out, "output report JSON path")->required();
    experiment->add_option("--table", exp_table, "also write the plain-text table here");
    auto* exp_seed_opt = experiment->add_option("--seed", exp_seed, "override the master seed");

    auto opt_seed = [](const CLI::Option* opt, std::uint64_t value) {
        return opt->count() ? std::optional<std::uint64_t>(value) : std::nullopt;
    };
    synth->callback(
        [&] { cmd_synth(synth_config, synth_out, opt_seed(synth_seed_opt, synth_seed)); });
    train_cmd->callback(
        [&] { cmd_train(train_data, train_config, train_out, opt_seed(train_seed_opt, train_seed)); });
    fairify->callback([&] {
        cmd_fairify(fair_model, fair_data, fair_config, fair_out, opt_seed(fair_seed_opt, fair_seed));
    });
    evaluate->callback([&] {
        cmd_evaluate(eval_pred, eval_data, eval_config, eval_out, opt_seed(eval_seed_opt, eval_seed));
    });
    experiment->callback([&] {
        cmd_experiment(exp_config, exp_out, exp_table, opt_seed(exp_seed_opt, exp_seed));
    });

    try {
        app.parse(argc, argv);
        return 0;
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const fairmtl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
