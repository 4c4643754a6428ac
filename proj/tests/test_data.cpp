// Tests for dataset handling: synthetic generation (distributional sanity
// against closed-form targets), stratified splitting (counting arguments),
// label masking (exact counts), and CSV round trips (value-exact).

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <vector>

#include "fairmtl/data.hpp"
#include "fairmtl/metrics.hpp"

using namespace fairmtl;

namespace {

std::filesystem::path temp_csv(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

bool code_is(const Error& e, errc c) { return e.code() == c; }

// tag rows uniquely through feature 0 so multiset identities are checkable
Dataset tagged_dataset(std::size_t n, std::size_t ngroups) {
    Dataset ds;
    ds.feature_dim = 2;
    for (std::size_t i = 0; i < n; ++i) {
        ds.features.push_back(static_cast<double>(i));
        ds.features.push_back(0.5);
        ds.group.push_back(static_cast<GroupLabel>(i % ngroups));
        ds.labels[0].push_back(static_cast<double>(i) * 0.25);
        ds.present[0].push_back(1);
        ds.labels[1].push_back(static_cast<double>(i % 2));
        ds.present[1].push_back(1);
    }
    return ds;
}

std::vector<double> row_tags(const Dataset& ds) {
    std::vector<double> tags;
    for (std::size_t i = 0; i < ds.size(); ++i) tags.push_back(ds.row(i)[0]);
    return tags;
}

}  // namespace

TEST_CASE("synthetic generation: determinism and shape") {
    SynthConfig cfg;
    cfg.n = 500;
    cfg.seed = 123;
    const Dataset a = synth_generate(cfg);
    const Dataset b = synth_generate(cfg);
    REQUIRE(a.size() == 500);
    REQUIRE(a.feature_dim == cfg.d);
    REQUIRE(a.features == b.features);
    REQUIRE(a.group == b.group);
    REQUIRE(a.labels[0] == b.labels[0]);
    REQUIRE(a.labels[1] == b.labels[1]);
    cfg.seed = 124;
    const Dataset c = synth_generate(cfg);
    REQUIRE(a.features != c.features);
    a.validate();
    SECTION("group frequencies roughly follow the proportions") {
        std::size_t g0 = 0;
        for (GroupLabel g : a.group)
            if (g == 0) ++g0;
        REQUIRE(std::fabs(static_cast<double>(g0) / 500.0 - 0.5) < 0.08);
    }
}

TEST_CASE("synthetic generation: distributional targets") {
    SECTION("no shift means (near) zero regression unfairness") {
        SynthConfig cfg;
        cfg.n = 5000;
        cfg.mean_shift = 0.0;
        cfg.log_odds_shift = 0.0;
        cfg.seed = 9;
        const Dataset ds = synth_generate(cfg);
        // finite-sample KS between two ~2500-point samples of one law
        REQUIRE(ks_unfairness(ds.labels[0], ds.group) <= 0.08);
    }
    SECTION("mean shift 2 at unit noise separates the groups") {
        SynthConfig cfg;
        cfg.n = 5000;
        cfg.mean_shift = 2.0;
        cfg.noise_scale = 1.0;
        cfg.seed = 10;
        const Dataset ds = synth_generate(cfg);
        // group laws are N(-2,2) vs N(+2,2); population KS = 2*Phi(sqrt(2))-1
        const double pop = 2.0 * 0.5 * (1.0 + std::erf(std::sqrt(2.0) / std::sqrt(2.0))) - 1.0;
        REQUIRE(pop > 0.8);
        const double ks = ks_unfairness(ds.labels[0], ds.group);
        REQUIRE(ks >= 0.6);
        REQUIRE(std::fabs(ks - pop) < 0.05);
    }
    SECTION("high task correlation links y1 ranks to y2") {
        SynthConfig cfg;
        cfg.n = 5000;
        cfg.task_correlation = 0.9;
        cfg.seed = 11;
        const Dataset ds = synth_generate(cfg);
        std::vector<std::size_t> order(ds.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return ds.labels[0][a] < ds.labels[0][b]; });
        std::vector<double> rank(ds.size());
        for (std::size_t r = 0; r < order.size(); ++r)
            rank[order[r]] = static_cast<double>(r) / static_cast<double>(ds.size());
        // Pearson correlation between y1 ranks and the binary labels
        double mr = 0.0, my = 0.0;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            mr += rank[i];
            my += ds.labels[1][i];
        }
        mr /= static_cast<double>(ds.size());
        my /= static_cast<double>(ds.size());
        double num = 0.0, dr = 0.0, dy = 0.0;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            num += (rank[i] - mr) * (ds.labels[1][i] - my);
            dr += (rank[i] - mr) * (rank[i] - mr);
            dy += (ds.labels[1][i] - my) * (ds.labels[1][i] - my);
        }
        REQUIRE(num / std::sqrt(dr * dy) > 0.3);
    }
    SECTION("invalid configurations rejected") {
        SynthConfig cfg;
        cfg.group_proportions = {0.5, 0.6};
        REQUIRE_THROWS_MATCHES(synth_generate(cfg), Error,
                               Catch::Matchers::Predicate<Error>(
                                   [](const Error& e) { return code_is(e, errc::invalid_config); }));
        cfg = SynthConfig{};
        cfg.group_proportions = {1.0};
        REQUIRE_THROWS_MATCHES(synth_generate(cfg), Error,
                               Catch::Matchers::Predicate<Error>(
                                   [](const Error& e) { return code_is(e, errc::invalid_config); }));
        cfg = SynthConfig{};
        cfg.task_correlation = 1.5;
        REQUIRE_THROWS_MATCHES(synth_generate(cfg), Error,
                               Catch::Matchers::Predicate<Error>(
                                   [](const Error& e) { return code_is(e, errc::invalid_config); }));
        cfg = SynthConfig{};
        cfg.n = 0;
        REQUIRE_THROWS_MATCHES(synth_generate(cfg), Error,
                               Catch::Matchers::Predicate<Error>(
                                   [](const Error& e) { return code_is(e, errc::invalid_config); }));
    }
}

TEST_CASE("stratified split") {
    SECTION("degenerate split routes everything to train") {
        const Dataset ds = tagged_dataset(37, 2);
        SplitSpec spec;
        spec.fractions = {1.0, 0.0, 0.0, 0.0};
        const SplitResult r = split(ds, spec);
        REQUIRE(r.train.size() == 37);
        REQUIRE(r.pool.size() == 0);
        REQUIRE(r.validation.size() == 0);
        REQUIRE(r.test.size() == 0);
        auto tags = row_tags(r.train);
        std::sort(tags.begin(), tags.end());
        REQUIRE(tags == row_tags(ds));  // tagged 0..36 in order
    }
    SECTION("splits partition the rows") {
        const Dataset ds = tagged_dataset(233, 3);
        SplitSpec spec;
        spec.seed = 5;
        const SplitResult r = split(ds, spec);
        std::vector<double> all;
        for (const Dataset* part : {&r.train, &r.pool, &r.validation, &r.test})
            for (double t : row_tags(*part)) all.push_back(t);
        REQUIRE(all.size() == 233);
        std::sort(all.begin(), all.end());
        REQUIRE(std::adjacent_find(all.begin(), all.end()) == all.end());  // disjoint
        REQUIRE(all == row_tags(ds));                                      // exhaustive
    }
    SECTION("group shares carry into every split within one sample") {
        const Dataset ds = tagged_dataset(400, 2);  // 200 per group
        SplitSpec spec;
        spec.fractions = {0.6, 0.2, 0.1, 0.1};
        spec.seed = 6;
        const SplitResult r = split(ds, spec);
        REQUIRE(r.train.size() == 240);
        REQUIRE(r.pool.size() == 80);
        REQUIRE(r.validation.size() == 40);
        REQUIRE(r.test.size() == 40);
        for (const Dataset* part : {&r.train, &r.pool, &r.validation, &r.test}) {
            std::map<GroupLabel, std::size_t> counts;
            for (GroupLabel g : part->group) ++counts[g];
            const double want = 0.5 * static_cast<double>(part->size());
            for (const auto& [g, c] : counts)
                REQUIRE(std::fabs(static_cast<double>(c) - want) <= 1.0);
        }
    }
    SECTION("deterministic given seed") {
        const Dataset ds = tagged_dataset(100, 2);
        SplitSpec spec;
        spec.seed = 7;
        const SplitResult a = split(ds, spec);
        const SplitResult b = split(ds, spec);
        REQUIRE(row_tags(a.train) == row_tags(b.train));
        REQUIRE(row_tags(a.test) == row_tags(b.test));
        spec.seed = 8;
        const SplitResult c = split(ds, spec);
        REQUIRE(row_tags(a.train) != row_tags(c.train));
    }
    SECTION("a group too small to reach a split is an error") {
        Dataset ds = tagged_dataset(40, 2);
        ds.group.assign(40, 0);
        ds.group[3] = 1;  // singleton group cannot reach all four splits
        REQUIRE_THROWS_MATCHES(split(ds, SplitSpec{}), Error,
                               Catch::Matchers::Predicate<Error>(
                                   [](const Error& e) { return code_is(e, errc::stratification_error); }));
    }
    SECTION("fractions must sum to one") {
        SplitSpec spec;
        spec.fractions = {0.5, 0.2, 0.1, 0.1};
        REQUIRE_THROWS_MATCHES(split(tagged_dataset(20, 2), spec), Error,
                               Catch::Matchers::Predicate<Error>(
                                   [](const Error& e) { return code_is(e, errc::invalid_config); }));
    }
}

TEST_CASE("label masking") {
    const Dataset ds = tagged_dataset(10, 2);
    SECTION("fraction zero is the identity") {
        const Dataset out = mask_labels(ds, 0, 0.0, 3);
        REQUIRE(out.present[0] == ds.present[0]);
        REQUIRE(out.labels[0] == ds.labels[0]);
    }
    SECTION("fraction one masks everything") {
        const Dataset out = mask_labels(ds, 0, 1.0, 3);
        REQUIRE(std::count(out.present[0].begin(), out.present[0].end(), 0) == 10);
        REQUIRE(out.present[1] == ds.present[1]);  // other task untouched
    }
    SECTION("exact count: floor(fraction * present)") {
        const Dataset half = mask_labels(ds, 0, 0.5, 3);
        REQUIRE(std::count(half.present[0].begin(), half.present[0].end(), 1) == 5);
        const Dataset frac = mask_labels(ds, 0, 0.17, 3);
        REQUIRE(std::count(frac.present[0].begin(), frac.present[0].end(), 1) == 9);
        // masking applies to the *remaining* labels when stacked
        const Dataset again = mask_labels(half, 0, 0.5, 4);
        REQUIRE(std::count(again.present[0].begin(), again.present[0].end(), 1) == 3);
    }
    SECTION("label values, features and groups are untouched") {
        const Dataset out = mask_labels(ds, 1, 0.7, 5);
        REQUIRE(out.features == ds.features);
        REQUIRE(out.group == ds.group);
        REQUIRE(out.labels[0] == ds.labels[0]);
        REQUIRE(std::count(out.present[1].begin(), out.present[1].end(), 1) == 3);
    }
    SECTION("deterministic given seed") {
        const Dataset a = mask_labels(ds, 0, 0.5, 11);
        const Dataset b = mask_labels(ds, 0, 0.5, 11);
        REQUIRE(a.present[0] == b.present[0]);
    }
    SECTION("invalid fraction rejected") {
        for (double f : {-0.1, 1.1}) {
            REQUIRE_THROWS_MATCHES(mask_labels(ds, 0, f, 0), Error,
                                   Catch::Matchers::Predicate<Error>(
                                       [](const Error& e) { return code_is(e, errc::invalid_config); }));
        }
    }
}

TEST_CASE("csv round trip") {
    SynthConfig cfg;
    cfg.n = 120;
    cfg.seed = 21;
    Dataset ds = synth_generate(cfg);
    ds = mask_labels(ds, 0, 0.25, 1);
    ds = mask_labels(ds, 1, 0.5, 2);
    const auto path = temp_csv("fairmtl_roundtrip.csv");
    save_csv(ds, path.string());
    const Dataset back = load_csv(path.string());
    REQUIRE(back.feature_dim == ds.feature_dim);
    REQUIRE(back.features == ds.features);  // shortest-round-trip formatting is exact
    REQUIRE(back.group == ds.group);
    REQUIRE(back.present[0] == ds.present[0]);
    REQUIRE(back.present[1] == ds.present[1]);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.present[0][i]) REQUIRE(back.labels[0][i] == ds.labels[0][i]);
        if (ds.present[1][i]) REQUIRE(back.labels[1][i] == ds.labels[1][i]);
    }
    std::filesystem::remove(path);
}

TEST_CASE("csv parsing") {
    const auto path = temp_csv("fairmtl_parse.csv");
    SECTION("well-formed file with missing labels") {
        std::ofstream(path) << "x0,x1,s,y1,y2\n"
                               "0.25,1,0,2.5,1\n"
                               "1.5,-2,1,,0\n"
                               "3,4.25,0,-1,\n";
        const Dataset ds = load_csv(path.string());
        REQUIRE(ds.size() == 3);
        REQUIRE(ds.feature_dim == 2);
        REQUIRE(ds.row(1)[0] == 1.5);
        REQUIRE(ds.group == std::vector<GroupLabel>{0, 1, 0});
        REQUIRE(ds.present[0] == std::vector<std::uint8_t>{1, 0, 1});
        REQUIRE(ds.present[1] == std::vector<std::uint8_t>{1, 1, 0});
        REQUIRE(ds.labels[0][2] == -1.0);
        REQUIRE(ds.labels[1][0] == 1.0);
    }
    SECTION("missing required column") {
        std::ofstream(path) << "x0,x1,y1,y2\n1,2,3,0\n";
        REQUIRE_THROWS_MATCHES(load_csv(path.string()), Error,
                               Catch::Matchers::Predicate<Error>(
                                   [](const Error& e) { return code_is(e, errc::schema_error); }));
    }
    SECTION("unknown column") {
        std::ofstream(path) << "x0,s,y1,y2,extra\n1,0,1,0,9\n";
        REQUIRE_THROWS_MATCHES(load_csv(path.string()), Error,
                               Catch::Matchers::Predicate<Error>(
                                   [](const Error& e) { return code_is(e, errc::schema_error); }));
    }
    SECTION("sparse feature indices") {
        std::ofstream(path) << "x0,x2,s,y1,y2\n1,2,0,1,0\n";
        REQUIRE_THROWS_MATCHES(load_csv(path.string()), Error,
                               Catch::Matchers::Predicate<Error>(
                                   [](const Error& e) { return code_is(e, errc::schema_error); }));
    }
    SECTION("non-numeric cell names line and column") {
        std::ofstream(path) << "x0,s,y1,y2\nabc,0,1,0\n";
        try {
            load_csv(path.string());
            FAIL("expected a parse error");
        } catch (const Error& e) {
            REQUIRE(e.code() == errc::parse_error);
            REQUIRE_THAT(e.what(), Catch::Matchers::ContainsSubstring("line 2"));
            REQUIRE_THAT(e.what(), Catch::Matchers::ContainsSubstring("x0"));
        }
    }
    SECTION("ragged row rejected") {
        std::ofstream(path) << "x0,s,y1,y2\n1,0,1\n";
        REQUIRE_THROWS_MATCHES(load_csv(path.string()), Error,
                               Catch::Matchers::Predicate<Error>(
                                   [](const Error& e) { return code_is(e, errc::parse_error); }));
    }
    SECTION("y2 outside {0,1} rejected") {
        std::ofstream(path) << "x0,s,y1,y2\n1,0,1,0.5\n";
        REQUIRE_THROWS_MATCHES(load_csv(path.string()), Error,
                               Catch::Matchers::Predicate<Error>(
                                   [](const Error& e) { return code_is(e, errc::invalid_value); }));
    }
    std::filesystem::remove(path);
}
