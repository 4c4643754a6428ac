#pragma once
// Tabular data handling: the Dataset container, CSV ingestion/serialization,
// group-stratified splitting, label masking, and the synthetic two-task
// generator used for experiments.
//
// CSV schema: feature columns x0..x{d-1}, integer group column s, label
// columns y1 (real) and y2 (0/1). Empty label cells mean "missing"; masks are
// explicit in memory, never sentinel values. Doubles are serialized with
// shortest-round-trip formatting, so save/load is value-exact.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fairmtl/errors.hpp"
#include "fairmtl/rng.hpp"
#include "fairmtl/types.hpp"

namespace fairmtl {

struct Dataset {
    std::size_t feature_dim = 0;
    std::vector<double> features;  // row-major, size() * feature_dim
    std::vector<GroupLabel> group;
    std::array<std::vector<double>, 2> labels;         // y1, y2
    std::array<std::vector<std::uint8_t>, 2> present;  // 1 where the label is observed

    std::size_t size() const { return group.size(); }

    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * feature_dim, feature_dim};
    }

    void validate() const {
        const std::size_t n = group.size();
        if (features.size() != n * feature_dim)
            fail(errc::shape_error, "feature storage does not match row count");
        for (int t = 0; t < 2; ++t) {
            if (labels[t].size() != n || present[t].size() != n)
                fail(errc::shape_error, "label columns must match row count");
        }
        for (double v : features)
            if (!std::isfinite(v)) fail(errc::invalid_value, "features must be finite");
        for (std::size_t i = 0; i < n; ++i) {
            if (present[0][i] && !std::isfinite(labels[0][i]))
                fail(errc::invalid_value, "y1 labels must be finite");
            if (present[1][i] && labels[1][i] != 0.0 && labels[1][i] != 1.0)
                fail(errc::invalid_value, "y2 labels must be 0 or 1");
        }
    }

    std::vector<GroupLabel> distinct_groups() const {
        std::vector<GroupLabel> g(group);
        std::sort(g.begin(), g.end());
        g.erase(std::unique(g.begin(), g.end()), g.end());
        return g;
    }

    Dataset subset(std::span<const std::size_t> idx) const {
        Dataset out;
        out.feature_dim = feature_dim;
        out.features.reserve(idx.size() * feature_dim);
        out.group.reserve(idx.size());
        for (std::size_t i : idx) {
            const auto r = row(i);
            out.features.insert(out.features.end(), r.begin(), r.end());
            out.group.push_back(group[i]);
            for (int t = 0; t < 2; ++t) {
                out.labels[t].push_back(labels[t][i]);
                out.present[t].push_back(present[t][i]);
            }
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// splitting

struct SplitSpec {
    // fractions of each group routed to train / calibration pool / validation / test
    std::array<double, 4> fractions{0.6, 0.2, 0.1, 0.1};
    std::uint64_t seed = 0;

    void validate() const {
        double total = 0.0;
        for (double f : fractions) {
            if (!(f >= 0.0 && f <= 1.0)) fail(errc::invalid_config, "split fractions must lie in [0,1]");
            total += f;
        }
        if (std::fabs(total - 1.0) > 1e-9) fail(errc::invalid_config, "split fractions must sum to 1");
    }
};

struct SplitResult {
    Dataset train, pool, validation, test;
};

namespace detail {

// Largest-remainder apportionment of n items into the given fractions:
// every count is within one item of n * fraction and the counts sum to n.
inline std::array<std::size_t, 4> apportion(std::size_t n, const std::array<double, 4>& fractions) {
    std::array<std::size_t, 4> counts{};
    std::array<double, 4> remainders{};
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < 4; ++k) {
        const double exact = static_cast<double>(n) * fractions[k];
        counts[k] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        remainders[k] = exact - static_cast<double>(counts[k]);
        assigned += counts[k];
    }
    std::size_t leftover = n - assigned;
    std::array<std::size_t, 4> order{0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
    for (std::size_t k = 0; leftover > 0; k = (k + 1) % 4) {
        counts[order[k]] += 1;
        --leftover;
    }
    return counts;
}

}  // namespace detail

// Group-stratified split: each group's rows are shuffled with a per-group
// stream of `spec.seed` and apportioned so every split holds its share of
// every group to within one sample. Row order within a split follows the
// original dataset order. A non-empty split missing some group entirely is a
// stratification error.
inline SplitResult split(const Dataset& ds, const SplitSpec& spec) {
    ds.validate();
    spec.validate();
    if (ds.size() == 0) fail(errc::empty_sample, "cannot split an empty dataset");

    const std::vector<GroupLabel> groups = ds.distinct_groups();
    std::array<std::vector<std::size_t>, 4> members;
    std::vector<std::array<std::size_t, 4>> per_group_counts(groups.size());

    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ds.size(); ++i)
            if (ds.group[i] == groups[gi]) idx.push_back(i);
        Rng rng(mix_seed(spec.seed, gi));
        rng.shuffle(idx);
        const auto counts = detail::apportion(idx.size(), spec.fractions);
        per_group_counts[gi] = counts;
        std::size_t start = 0;
        for (std::size_t k = 0; k < 4; ++k) {
            members[k].insert(members[k].end(), idx.begin() + start, idx.begin() + start + counts[k]);
            start += counts[k];
        }
    }

    for (std::size_t k = 0; k < 4; ++k) {
        if (members[k].empty()) continue;
        for (std::size_t gi = 0; gi < groups.size(); ++gi)
            if (per_group_counts[gi][k] == 0)
                fail(errc::stratification_error,
                     "split " + std::to_string(k) + " received no samples of group " +
                         std::to_string(groups[gi]));
        std::sort(members[k].begin(), members[k].end());
    }

    SplitResult out;
    out.train = ds.subset(members[0]);
    out.pool = ds.subset(members[1]);
    out.validation = ds.subset(members[2]);
    out.test = ds.subset(members[3]);
    return out;
}

// Masks exactly floor(fraction * n_present) currently-present labels of the
// given task, chosen uniformly without replacement from the seeded stream.
inline Dataset mask_labels(const Dataset& ds, std::size_t task, double fraction, std::uint64_t seed) {
    if (task >= 2) fail(errc::invalid_config, "task index must be 0 or 1");
    if (!(fraction >= 0.0 && fraction <= 1.0))
        fail(errc::invalid_config, "mask fraction must lie in [0,1]");
    Dataset out = ds;
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (ds.present[task][i]) candidates.push_back(i);
    const std::size_t k = static_cast<std::size_t>(
        std::floor(fraction * static_cast<double>(candidates.size()) + 1e-9));
    Rng rng(seed);
    for (std::size_t i = 0; i < k; ++i) {  // partial Fisher-Yates: first k are the sample
        const std::size_t j = i + static_cast<std::size_t>(rng.below(candidates.size() - i));
        std::swap(candidates[i], candidates[j]);
        out.present[task][candidates[i]] = 0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// synthetic generator

// Two linked tasks over shared features x ~ N(0, I_d) and a group code c
// mapped into [-1, 1]:
//   u  = w.x + mean_shift * c + noise_scale * eps,        y1 = u
//   y2 ~ Bernoulli(sigmoid(rho * u + (1 - rho) * v + log_odds_shift * c))
// with w a fixed unit-norm direction and eps, v standard normals. mean_shift
// controls regression unfairness, log_odds_shift classification unfairness,
// and rho how much signal the tasks share.
struct SynthConfig {
    std::size_t n = 5000;
    std::size_t d = 5;
    std::vector<double> group_proportions{0.5, 0.5};
    double mean_shift = 2.0;
    double log_odds_shift = 2.0;
    double task_correlation = 0.8;  // rho
    double noise_scale = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (n == 0) fail(errc::invalid_config, "synthetic dataset needs n >= 1");
        if (d == 0) fail(errc::invalid_config, "synthetic dataset needs d >= 1");
        if (group_proportions.size() < 2)
            fail(errc::invalid_config, "synthetic dataset needs at least two groups");
        double total = 0.0;
        for (double p : group_proportions) {
            if (!(p > 0.0)) fail(errc::invalid_config, "group proportions must be positive");
            total += p;
        }
        if (std::fabs(total - 1.0) > 1e-9)
            fail(errc::invalid_config, "group proportions must sum to 1");
        if (!(task_correlation >= 0.0 && task_correlation <= 1.0))
            fail(errc::invalid_config, "task correlation must lie in [0,1]");
        if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale))
            fail(errc::invalid_config, "noise scale must be finite and >= 0");
        if (!std::isfinite(mean_shift) || !std::isfinite(log_odds_shift))
            fail(errc::invalid_config, "shifts must be finite");
    }
};

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline Dataset synth_generate(const SynthConfig& cfg) {
    cfg.validate();
    const std::size_t k = cfg.group_proportions.size();

    // fixed unit-norm direction for the shared linear signal
    Rng wrng(mix_seed(cfg.seed, 0x77u));
    std::vector<double> w(cfg.d);
    double norm2 = 0.0;
    for (double& wi : w) {
        wi = wrng.normal();
        norm2 += wi * wi;
    }
    if (norm2 < 1e-24) {
        w.assign(cfg.d, 0.0);
        w[0] = 1.0;
    } else {
        const double inv = 1.0 / std::sqrt(norm2);
        for (double& wi : w) wi *= inv;
    }

    std::vector<double> cum(k);
    std::partial_sum(cfg.group_proportions.begin(), cfg.group_proportions.end(), cum.begin());

    Dataset ds;
    ds.feature_dim = cfg.d;
    ds.features.reserve(cfg.n * cfg.d);
    ds.group.reserve(cfg.n);
    for (int t = 0; t < 2; ++t) {
        ds.labels[t].reserve(cfg.n);
        ds.present[t].assign(cfg.n, 1);
    }

    Rng rng(mix_seed(cfg.seed, 0x5a6eu));
    for (std::size_t i = 0; i < cfg.n; ++i) {
        const double r = rng.uniform01();
        std::size_t g = 0;
        while (g + 1 < k && r >= cum[g]) ++g;
        const double code = (k == 1) ? 0.0
                                     : 2.0 * static_cast<double>(g) / static_cast<double>(k - 1) - 1.0;
        double dot = 0.0;
        for (std::size_t j = 0; j < cfg.d; ++j) {
            const double x = rng.normal();
            ds.features.push_back(x);
            dot += w[j] * x;
        }
        const double eps = rng.normal();
        const double v = rng.normal();
        const double u = dot + cfg.mean_shift * code + cfg.noise_scale * eps;
        const double logit = cfg.task_correlation * u + (1.0 - cfg.task_correlation) * v +
                             cfg.log_odds_shift * code;
        const double y2 = (rng.uniform01() < sigmoid(logit)) ? 1.0 : 0.0;
        ds.group.push_back(static_cast<GroupLabel>(g));
        ds.labels[0].push_back(u);
        ds.labels[1].push_back(y2);
    }
    return ds;
}

// ---------------------------------------------------------------------------
// CSV I/O

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& cell, std::size_t line, const std::string& col) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        fail(errc::parse_error,
             "line " + std::to_string(line) + ", column " + col + ": '" + cell + "' is not a number");
    if (!std::isfinite(v))
        fail(errc::invalid_value,
             "line " + std::to_string(line) + ", column " + col + ": value must be finite");
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

}  // namespace detail

inline void save_csv(const Dataset& ds, const std::string& path) {
    ds.validate();
    std::ofstream out(path);
    if (!out) fail(errc::parse_error, "cannot open '" + path + "' for writing");
    for (std::size_t j = 0; j < ds.feature_dim; ++j) out << "x" << j << ",";
    out << "s,y1,y2\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (double x : ds.row(i)) out << detail::format_double(x) << ",";
        out << ds.group[i] << ",";
        if (ds.present[0][i]) out << detail::format_double(ds.labels[0][i]);
        out << ",";
        if (ds.present[1][i]) out << (ds.labels[1][i] == 1.0 ? "1" : "0");
        out << "\n";
    }
    if (!out) fail(errc::parse_error, "failed while writing '" + path + "'");
}

inline Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::parse_error, "cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) fail(errc::schema_error, "'" + path + "' is empty");
    const std::vector<std::string> header = detail::split_csv_line(line);

    // resolve the column layout: x0..x{d-1} (dense), s, y1, y2
    std::map<std::size_t, std::size_t> feature_cols;  // feature index -> column
    std::size_t s_col = header.size(), y1_col = header.size(), y2_col = header.size();
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string& name = header[c];
        if (name == "s") {
            s_col = c;
        } else if (name == "y1") {
            y1_col = c;
        } else if (name == "y2") {
            y2_col = c;
        } else if (name.size() > 1 && name[0] == 'x') {
            std::size_t idx = 0;
            const auto res = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
            if (res.ec != std::errc{} || res.ptr != name.data() + name.size())
                fail(errc::schema_error, "unrecognized column '" + name + "'");
            if (feature_cols.count(idx)) fail(errc::schema_error, "duplicate column '" + name + "'");
            feature_cols[idx] = c;
        } else {
            fail(errc::schema_error, "unrecognized column '" + name + "'");
        }
    }
    if (s_col == header.size()) fail(errc::schema_error, "missing group column 's'");
    if (y1_col == header.size()) fail(errc::schema_error, "missing label column 'y1'");
    if (y2_col == header.size()) fail(errc::schema_error, "missing label column 'y2'");
    if (feature_cols.empty()) fail(errc::schema_error, "no feature columns x0..x{d-1}");
    const std::size_t d = feature_cols.size();
    for (std::size_t j = 0; j < d; ++j)
        if (!feature_cols.count(j))
            fail(errc::schema_error, "feature columns must be dense; missing 'x" + std::to_string(j) + "'");

    Dataset ds;
    ds.feature_dim = d;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            fail(errc::parse_error, "line " + std::to_string(lineno) + ": expected " +
                                        std::to_string(header.size()) + " cells, got " +
                                        std::to_string(cells.size()));
        for (std::size_t j = 0; j < d; ++j)
            ds.features.push_back(
                detail::parse_double(cells[feature_cols[j]], lineno, "x" + std::to_string(j)));
        {
            const std::string& cell = cells[s_col];
            GroupLabel g = 0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), g);
            if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
                fail(errc::parse_error,
                     "line " + std::to_string(lineno) + ", column s: '" + cell + "' is not an integer");
            ds.group.push_back(g);
        }
        if (cells[y1_col].empty()) {
            ds.labels[0].push_back(0.0);
            ds.present[0].push_back(0);
        } else {
            ds.labels[0].push_back(detail::parse_double(cells[y1_col], lineno, "y1"));
            ds.present[0].push_back(1);
        }
        if (cells[y2_col].empty()) {
            ds.labels[1].push_back(0.0);
            ds.present[1].push_back(0);
        } else {
            const double y = detail::parse_double(cells[y2_col], lineno, "y2");
            if (y != 0.0 && y != 1.0)
                fail(errc::invalid_value, "line " + std::to_string(lineno) + ": y2 must be 0 or 1");
            ds.labels[1].push_back(y);
            ds.present[1].push_back(1);
        }
    }
    ds.validate();
    return ds;
}

// ---------------------------------------------------------------------------
// JSON config (de)serialization

inline void from_json_obj(const nlohmann::json& j, SplitSpec& s) {
    if (j.contains("fractions")) {
        const auto f = j.at("fractions").get<std::vector<double>>();
        if (f.size() != 4) fail(errc::invalid_config, "split fractions must have 4 entries");
        std::copy(f.begin(), f.end(), s.fractions.begin());
    }
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    s.validate();
}

inline nlohmann::json to_json_obj(const SplitSpec& s) {
    return {{"fractions", std::vector<double>(s.fractions.begin(), s.fractions.end())},
            {"seed", s.seed}};
}

inline void from_json_obj(const nlohmann::json& j, SynthConfig& c) {
    if (j.contains("n")) c.n = j.at("n").get<std::size_t>();
    if (j.contains("d")) c.d = j.at("d").get<std::size_t>();
    if (j.contains("group_proportions"))
        c.group_proportions = j.at("group_proportions").get<std::vector<double>>();
    if (j.contains("mean_shift")) c.mean_shift = j.at("mean_shift").get<double>();
    if (j.contains("log_odds_shift")) c.log_odds_shift = j.at("log_odds_shift").get<double>();
    if (j.contains("task_correlation")) c.task_correlation = j.at("task_correlation").get<double>();
    if (j.contains("noise_scale")) c.noise_scale = j.at("noise_scale").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
}

}  // namespace fairmtl
