#pragma once
// Post-processing fairness transform. A FairCalibrator is fitted on a pool
// of base-model predictions: it keeps, per task, one jittered empirical
// distribution per sensitive group plus the group frequencies. Transforming
// a prediction for group s pushes it through its own group CDF and reads the
// resulting rank back through the frequency-weighted mixture of all group
// quantile functions:
//
//     fair(v, s) = sum_s' pi[s'] * Q_s'( F_s(v + zeta) )
//
// which maps every group's prediction distribution onto their common
// Wasserstein-2 barycenter while preserving within-group ranks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fairmtl/distrib.hpp"
#include "fairmtl/errors.hpp"
#include "fairmtl/rng.hpp"
#include "fairmtl/types.hpp"

namespace fairmtl {

// Column-oriented batch of model outputs: values[t][i] is task t's prediction
// for sample i, group[i] its sensitive attribute.
struct Predictions {
    std::vector<TaskKind> task_kinds;
    std::vector<GroupLabel> group;
    std::vector<std::vector<double>> values;  // [task][sample]

    std::size_t task_count() const { return task_kinds.size(); }
    std::size_t sample_count() const { return group.size(); }

    void validate() const {
        if (task_kinds.empty()) fail(errc::invalid_config, "predictions need at least one task");
        if (values.size() != task_kinds.size())
            fail(errc::shape_error, "predictions value rows must match task count");
        for (std::size_t t = 0; t < values.size(); ++t) {
            if (values[t].size() != group.size())
                fail(errc::shape_error, "prediction column length must match group count");
            for (double v : values[t]) {
                if (!std::isfinite(v)) fail(errc::invalid_value, "predictions must be finite");
                if (task_kinds[t] == TaskKind::binary_score && (v < 0.0 || v > 1.0))
                    fail(errc::invalid_value, "binary scores must lie in [0,1]");
            }
        }
    }
};

class FairCalibrator {
public:
    FairCalibrator() = default;  // unfitted

    // Direct assembly from per-task/per-group distributions; weights must be
    // positive and sum to 1 (within 1e-12) and align with `groups`.
    FairCalibrator(std::vector<TaskKind> kinds, std::vector<GroupLabel> groups,
                   std::vector<double> weights,
                   std::vector<std::vector<EmpiricalDistribution>> dists, JitterConfig jitter)
        : kinds_(std::move(kinds)),
          groups_(std::move(groups)),
          weights_(std::move(weights)),
          dists_(std::move(dists)),
          jitter_(jitter),
          fitted_(true) {
        if (kinds_.empty()) fail(errc::invalid_config, "calibrator needs at least one task");
        if (groups_.empty()) fail(errc::invalid_config, "calibrator needs at least one group");
        if (weights_.size() != groups_.size())
            fail(errc::shape_error, "one weight per group required");
        if (!std::is_sorted(groups_.begin(), groups_.end()) ||
            std::adjacent_find(groups_.begin(), groups_.end()) != groups_.end())
            fail(errc::invalid_config, "group labels must be sorted and distinct");
        double total = 0.0;
        for (double w : weights_) {
            if (!(w > 0.0)) fail(errc::invalid_config, "group weights must be positive");
            total += w;
        }
        if (std::fabs(total - 1.0) > 1e-12)
            fail(errc::invalid_config, "group weights must sum to 1");
        if (dists_.size() != kinds_.size())
            fail(errc::shape_error, "one distribution row per task required");
        for (const auto& row : dists_) {
            if (row.size() != groups_.size())
                fail(errc::shape_error, "one distribution per group required");
            for (const auto& d : row)
                if (d.empty()) fail(errc::empty_sample, "calibrator distributions must be non-empty");
        }
        if (!(jitter_.half_width >= 0.0))
            fail(errc::invalid_config, "jitter half-width must be >= 0");
    }

    // Fits group frequencies and jittered per-group prediction distributions
    // on a pool of base predictions. Every group needs >= 2 pool samples and
    // the pool must cover >= 2 groups.
    static FairCalibrator fit(const Predictions& pool, const JitterConfig& jitter) {
        pool.validate();
        if (!(jitter.half_width >= 0.0))
            fail(errc::invalid_config, "jitter half-width must be >= 0");
        std::map<GroupLabel, std::size_t> counts;
        for (GroupLabel g : pool.group) ++counts[g];
        if (counts.size() < 2)
            fail(errc::insufficient_group_data, "calibration pool must contain at least two groups");
        for (const auto& [g, c] : counts)
            if (c < 2)
                fail(errc::insufficient_group_data,
                     "group " + std::to_string(g) + " has fewer than 2 pool samples");

        std::vector<GroupLabel> groups;
        std::vector<double> weights;
        groups.reserve(counts.size());
        weights.reserve(counts.size());
        const double n = static_cast<double>(pool.sample_count());
        for (const auto& [g, c] : counts) {
            groups.push_back(g);
            weights.push_back(static_cast<double>(c) / n);
        }

        std::vector<std::vector<EmpiricalDistribution>> dists(pool.task_count());
        for (std::size_t t = 0; t < pool.task_count(); ++t) {
            dists[t].reserve(groups.size());
            for (std::size_t k = 0; k < groups.size(); ++k) {
                std::vector<double> vals;
                for (std::size_t i = 0; i < pool.sample_count(); ++i)
                    if (pool.group[i] == groups[k]) vals.push_back(pool.values[t][i]);
                JitterConfig stream = jitter;
                stream.seed = mix_seed(jitter.seed, (static_cast<std::uint64_t>(t) << 20) | k);
                dists[t].emplace_back(apply_jitter(vals, stream));
            }
        }
        return FairCalibrator(pool.task_kinds, std::move(groups), std::move(weights),
                              std::move(dists), jitter);
    }

    bool fitted() const { return fitted_; }
    const std::vector<TaskKind>& task_kinds() const { return kinds_; }
    const std::vector<GroupLabel>& groups() const { return groups_; }
    const JitterConfig& jitter() const { return jitter_; }

    double group_weight(GroupLabel s) const { return weights_[group_index(s)]; }

    const EmpiricalDistribution& distribution(std::size_t task, GroupLabel s) const {
        require_fitted();
        require_task(task);
        return dists_[task][group_index(s)];
    }

    // Barycentric map for one prediction; zeta is the caller-supplied jitter
    // draw applied before rank lookup (0 disables tie-breaking).
    double transform(std::size_t task, double value, GroupLabel s, double zeta = 0.0) const {
        require_fitted();
        require_task(task);
        if (!std::isfinite(value)) fail(errc::invalid_value, "prediction must be finite");
        const std::size_t k = group_index(s);
        const double rank = dists_[task][k].cdf(value + zeta);
        double out = 0.0;
        for (std::size_t i = 0; i < groups_.size(); ++i)
            out += weights_[i] * dists_[task][i].quantile(rank);
        if (kinds_[task] == TaskKind::binary_score) out = std::clamp(out, 0.0, 1.0);
        return out;
    }

    // Transforms a whole batch; zeta draws (one per sample x task, sample-major)
    // come from a fresh stream derived from `seed`, i.i.d. uniform on the
    // calibrator's jitter interval. Deterministic given the seed.
    Predictions transform_batch(const Predictions& preds, std::uint64_t seed) const {
        require_fitted();
        preds.validate();
        if (preds.task_kinds != kinds_)
            fail(errc::invalid_config, "prediction tasks do not match the calibrator");
        Predictions out;
        out.task_kinds = kinds_;
        out.group = preds.group;
        out.values.assign(kinds_.size(), std::vector<double>(preds.sample_count()));
        Rng rng(mix_seed(seed, 0xfa17u));
        for (std::size_t i = 0; i < preds.sample_count(); ++i) {
            for (std::size_t t = 0; t < kinds_.size(); ++t) {
                const double zeta = rng.symmetric(jitter_.half_width);
                out.values[t][i] = transform(t, preds.values[t][i], preds.group[i], zeta);
            }
        }
        return out;
    }

    nlohmann::json to_json() const {
        require_fitted();
        nlohmann::json j;
        j["version"] = 1;
        j["kind"] = "fair-calibrator";
        nlohmann::json kinds = nlohmann::json::array();
        for (TaskKind k : kinds_) kinds.push_back(to_string(k));
        j["task_kinds"] = kinds;
        j["groups"] = groups_;
        j["group_weights"] = weights_;
        j["jitter"] = {{"half_width", jitter_.half_width}, {"seed", jitter_.seed}};
        nlohmann::json values = nlohmann::json::array();
        for (const auto& row : dists_) {
            nlohmann::json r = nlohmann::json::array();
            for (const auto& d : row) r.push_back(d.values());
            values.push_back(std::move(r));
        }
        j["values"] = std::move(values);
        return j;
    }

    static FairCalibrator from_json(const nlohmann::json& j) {
        try {
            if (j.at("version").get<int>() != 1)
                fail(errc::schema_error, "unsupported calibrator version");
            std::vector<TaskKind> kinds;
            for (const auto& s : j.at("task_kinds"))
                kinds.push_back(task_kind_from_string(s.get<std::string>()));
            auto groups = j.at("groups").get<std::vector<GroupLabel>>();
            auto weights = j.at("group_weights").get<std::vector<double>>();
            JitterConfig jitter;
            jitter.half_width = j.at("jitter").at("half_width").get<double>();
            jitter.seed = j.at("jitter").at("seed").get<std::uint64_t>();
            std::vector<std::vector<EmpiricalDistribution>> dists;
            for (const auto& row : j.at("values")) {
                std::vector<EmpiricalDistribution> r;
                for (const auto& vals : row)
                    r.emplace_back(vals.get<std::vector<double>>());
                dists.push_back(std::move(r));
            }
            return FairCalibrator(std::move(kinds), std::move(groups), std::move(weights),
                                  std::move(dists), jitter);
        } catch (const nlohmann::json::exception& e) {
            fail(errc::schema_error, std::string("malformed calibrator JSON: ") + e.what());
        }
    }

private:
    void require_fitted() const {
        if (!fitted_) fail(errc::not_fitted, "calibrator has not been fitted");
    }
    void require_task(std::size_t task) const {
        if (task >= kinds_.size()) fail(errc::invalid_config, "task index out of range");
    }
    std::size_t group_index(GroupLabel s) const {
        require_fitted();
        const auto it = std::lower_bound(groups_.begin(), groups_.end(), s);
        if (it == groups_.end() || *it != s)
            fail(errc::unknown_group, "group " + std::to_string(s) + " was not in the calibration pool");
        return static_cast<std::size_t>(it - groups_.begin());
    }

    std::vector<TaskKind> kinds_;
    std::vector<GroupLabel> groups_;  // sorted ascending
    std::vector<double> weights_;     // aligned with groups_
    std::vector<std::vector<EmpiricalDistribution>> dists_;  // [task][group ordinal]
    JitterConfig jitter_{};
    bool fitted_ = false;
};

}  // namespace fairmtl
