#pragma once
// Performance and unfairness metrics. ks_unfairness measures strong
// demographic parity as the worst two-sample Kolmogorov-Smirnov statistic
// over all group pairs; auc/mse/misclassification score predictive quality.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "fairmtl/errors.hpp"
#include "fairmtl/types.hpp"

namespace fairmtl {

namespace detail {

// sup_u |F_a(u) - F_b(u)| for two sorted samples, evaluated at every point of
// the merged support (the sup of step functions is attained there).
inline double ks_two_sample_sorted(const std::vector<double>& a, const std::vector<double>& b) {
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double best = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const double u = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= u) ++i;
        while (j < b.size() && b[j] <= u) ++j;
        const double diff = std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb);
        best = std::max(best, diff);
    }
    return best;
}

}  // namespace detail

// Unfairness of a set of predictions under strong demographic parity:
// max over group pairs of the sup-norm distance between group-conditional
// empirical CDFs. 0 = identical prediction distributions across groups.
inline double ks_unfairness(std::span<const double> values, std::span<const GroupLabel> groups) {
    if (values.size() != groups.size())
        fail(errc::length_mismatch, "values and groups must have equal length");
    if (values.empty()) fail(errc::empty_sample, "ks_unfairness needs at least one sample");
    for (double v : values)
        if (!std::isfinite(v)) fail(errc::invalid_value, "ks_unfairness values must be finite");
    std::map<GroupLabel, std::vector<double>> by_group;
    for (std::size_t i = 0; i < values.size(); ++i) by_group[groups[i]].push_back(values[i]);
    if (by_group.size() < 2)
        fail(errc::insufficient_groups, "ks_unfairness needs at least two groups");
    std::vector<std::vector<double>> samples;
    samples.reserve(by_group.size());
    for (auto& [g, v] : by_group) {
        std::sort(v.begin(), v.end());
        samples.push_back(std::move(v));
    }
    double best = 0.0;
    for (std::size_t p = 0; p < samples.size(); ++p)
        for (std::size_t q = p + 1; q < samples.size(); ++q)
            best = std::max(best, detail::ks_two_sample_sorted(samples[p], samples[q]));
    return best;
}

inline double mse(std::span<const double> predictions, std::span<const double> labels) {
    if (predictions.size() != labels.size())
        fail(errc::length_mismatch, "predictions and labels must have equal length");
    if (predictions.empty()) fail(errc::empty_sample, "mse needs at least one sample");
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - labels[i];
        acc += d * d;
    }
    return acc / static_cast<double>(predictions.size());
}

// Area under the ROC curve (Mann-Whitney form); tied scores get half credit.
inline double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        fail(errc::length_mismatch, "scores and labels must have equal length");
    if (scores.empty()) fail(errc::empty_sample, "auc needs at least one sample");
    std::size_t pos_total = 0, neg_total = 0;
    for (int y : labels) {
        if (y == 1)
            ++pos_total;
        else if (y == 0)
            ++neg_total;
        else
            fail(errc::invalid_value, "auc labels must be 0 or 1");
    }
    if (pos_total == 0 || neg_total == 0)
        fail(errc::degenerate_labels, "auc needs both label classes");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] < scores[b];
        return a < b;
    });

    double numer = 0.0;
    std::size_t neg_below = 0;
    std::size_t k = 0;
    while (k < order.size()) {
        std::size_t end = k;
        std::size_t pos_here = 0, neg_here = 0;
        while (end < order.size() && scores[order[end]] == scores[order[k]]) {
            if (labels[order[end]] == 1)
                ++pos_here;
            else
                ++neg_here;
            ++end;
        }
        numer += static_cast<double>(pos_here) * static_cast<double>(neg_below) +
                 0.5 * static_cast<double>(pos_here) * static_cast<double>(neg_here);
        neg_below += neg_here;
        k = end;
    }
    return numer / (static_cast<double>(pos_total) * static_cast<double>(neg_total));
}

// Hard decision at threshold tau: scores >= tau map to class 1.
inline int classify(double score, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) fail(errc::invalid_threshold, "threshold must lie in [0,1]");
    return score >= tau ? 1 : 0;
}

inline double misclassification(std::span<const double> scores, std::span<const int> labels, double tau) {
    if (scores.size() != labels.size())
        fail(errc::length_mismatch, "scores and labels must have equal length");
    if (scores.empty()) fail(errc::empty_sample, "misclassification needs at least one sample");
    if (!(tau >= 0.0 && tau <= 1.0)) fail(errc::invalid_threshold, "threshold must lie in [0,1]");
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1)
            fail(errc::invalid_value, "misclassification labels must be 0 or 1");
        if (classify(scores[i], tau) != labels[i]) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(scores.size());
}

}  // namespace fairmtl
