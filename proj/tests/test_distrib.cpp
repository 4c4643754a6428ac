// Tests for the empirical-distribution module. Expected values come from
// independent oracles implemented here: linear-scan CDF/quantile evaluation,
// brute-force optimal assignment for Wasserstein-2 (small equal sizes), and
// sample replication to a common denominator (unequal sizes).

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "fairmtl/distrib.hpp"
#include "fairmtl/rng.hpp"

using namespace fairmtl;

namespace {

double oracle_cdf(const std::vector<double>& sample, double u) {
    std::size_t c = 0;
    for (double v : sample)
        if (v <= u) ++c;
    return static_cast<double>(c) / static_cast<double>(sample.size());
}

double oracle_quantile(const std::vector<double>& sample, double v) {
    std::vector<double> s(sample);
    std::sort(s.begin(), s.end());
    for (double u : s)
        if (oracle_cdf(sample, u) >= v) return u;
    return s.back();
}

// exact optimal-assignment W2^2 between equal-size samples: the optimal
// coupling of two empirical measures with n atoms each is a permutation,
// so minimize mean squared difference over all of them.
double oracle_w2_assignment(std::vector<double> a, std::vector<double> b) {
    REQUIRE(a.size() == b.size());
    // measures are order-free; sorting first just pins a summation order
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<std::size_t> perm(b.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double acc = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = a[i] - b[perm[i]];
            acc += d * d;
        }
        best = std::min(best, acc / static_cast<double>(a.size()));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// replicate both samples to lcm(n, m) atoms; the represented measures are
// unchanged, reducing the unequal-size case to sorted equal-size matching.
double oracle_w2_lcm(std::vector<double> a, std::vector<double> b) {
    const std::size_t n = a.size(), m = b.size();
    const std::size_t l = std::lcm(n, m);
    std::vector<double> ea, eb;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    for (double v : a) ea.insert(ea.end(), l / n, v);
    for (double v : b) eb.insert(eb.end(), l / m, v);
    double acc = 0.0;
    for (std::size_t i = 0; i < l; ++i) {
        const double d = ea[i] - eb[i];
        acc += d * d;
    }
    return acc / static_cast<double>(l);
}

std::vector<double> random_sample(Rng& rng, std::size_t n, bool with_ties) {
    std::vector<double> v(n);
    for (double& x : v)
        x = with_ties ? std::floor(rng.uniform(-3.0, 3.0)) : rng.uniform(-10.0, 10.0);
    return v;
}

}  // namespace

TEST_CASE("ecdf construction") {
    SECTION("values are sorted") {
        EmpiricalDistribution d({3.0, 1.0, 2.0});
        REQUIRE(d.values() == std::vector<double>{1.0, 2.0, 3.0});
        REQUIRE(d.size() == 3);
        REQUIRE(d.min() == 1.0);
        REQUIRE(d.max() == 3.0);
    }
    SECTION("singleton") {
        EmpiricalDistribution d({5.0});
        REQUIRE(d.cdf(5.0) == 1.0);
        REQUIRE(d.cdf(4.9) == 0.0);
        REQUIRE(d.quantile(0.3) == 5.0);
    }
    SECTION("empty sample rejected") {
        REQUIRE_THROWS_MATCHES(EmpiricalDistribution(std::vector<double>{}), Error,
                               Catch::Matchers::Predicate<Error>([](const Error& e) {
                                   return e.code() == errc::empty_sample;
                               }));
    }
    SECTION("non-finite values rejected") {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        const double inf = std::numeric_limits<double>::infinity();
        for (double bad : {nan, inf, -inf}) {
            REQUIRE_THROWS_MATCHES(EmpiricalDistribution({1.0, bad}), Error,
                                   Catch::Matchers::Predicate<Error>([](const Error& e) {
                                       return e.code() == errc::invalid_value;
                                   }));
        }
    }
}

TEST_CASE("cdf evaluation") {
    EmpiricalDistribution d({1.0, 2.0, 3.0});
    SECTION("worked values") {
        REQUIRE(d.cdf(2.0) == 2.0 / 3.0);
        REQUIRE(d.cdf(0.0) == 0.0);
        REQUIRE(d.cdf(9.0) == 1.0);
        REQUIRE(d.cdf(2.5) == 2.0 / 3.0);  // right-continuous step function
    }
    SECTION("ties accumulate mass") {
        EmpiricalDistribution t({1.0, 1.0, 2.0});
        REQUIRE(t.cdf(1.0) == 2.0 / 3.0);
        REQUIRE(t.cdf(2.0) == 1.0);
    }
    SECTION("matches counting oracle on random queries") {
        Rng rng(41);
        for (int rep = 0; rep < 50; ++rep) {
            const auto sample = random_sample(rng, 1 + rng.below(40), rep % 2 == 0);
            EmpiricalDistribution dist(sample);
            for (int q = 0; q < 20; ++q) {
                const double u = rng.uniform(-12.0, 12.0);
                REQUIRE(dist.cdf(u) == oracle_cdf(sample, u));
            }
            for (double v : sample) REQUIRE(dist.cdf(v) == oracle_cdf(sample, v));
        }
    }
}

TEST_CASE("quantile evaluation") {
    EmpiricalDistribution d({1.0, 2.0, 3.0});
    SECTION("worked values") {
        REQUIRE(d.quantile(2.0 / 3.0) == 2.0);
        REQUIRE(d.quantile(0.0) == 1.0);
        REQUIRE(d.quantile(1.0) == 3.0);
        REQUIRE(d.quantile(0.5) == 2.0);  // smallest value with cdf >= 0.5
    }
    SECTION("out-of-range level rejected") {
        for (double v : {-0.1, 1.1}) {
            REQUIRE_THROWS_MATCHES(d.quantile(v), Error,
                                   Catch::Matchers::Predicate<Error>([](const Error& e) {
                                       return e.code() == errc::invalid_probability;
                                   }));
        }
    }
    SECTION("matches scan oracle on random levels") {
        Rng rng(42);
        for (int rep = 0; rep < 50; ++rep) {
            const auto sample = random_sample(rng, 1 + rng.below(40), rep % 2 == 1);
            EmpiricalDistribution dist(sample);
            for (int q = 0; q < 20; ++q) {
                const double v = rng.uniform01();
                REQUIRE(dist.quantile(v) == oracle_quantile(sample, v));
            }
            REQUIRE(dist.quantile(0.0) == oracle_quantile(sample, 0.0));
            REQUIRE(dist.quantile(1.0) == oracle_quantile(sample, 1.0));
        }
    }
}

TEST_CASE("cdf/quantile Galois pairing") {
    Rng rng(43);
    for (int rep = 0; rep < 30; ++rep) {
        const auto sample = random_sample(rng, 2 + rng.below(30), true);
        EmpiricalDistribution dist(sample);
        // Q(F(x)) <= x everywhere, with equality on distinct-valued samples
        for (double x : sample) REQUIRE(dist.quantile(dist.cdf(x)) <= x);
        // Galois: Q(v) <= u  <=>  v <= F(u)
        for (int q = 0; q < 40; ++q) {
            const double v = rng.uniform01();
            const double u = rng.uniform(-4.0, 4.0);
            REQUIRE((dist.quantile(v) <= u) == (v <= dist.cdf(u)));
        }
    }
    SECTION("identity on distinct values") {
        Rng r2(44);
        for (int rep = 0; rep < 20; ++rep) {
            const auto sample = random_sample(r2, 1 + r2.below(25), false);
            EmpiricalDistribution dist(sample);
            for (double x : sample) REQUIRE(dist.quantile(dist.cdf(x)) == x);
        }
    }
}

TEST_CASE("jitter") {
    const std::vector<double> vals{1.0, 1.0, 1.0, 2.0, 2.0, 3.5};
    SECTION("zero width is the exact identity") {
        REQUIRE(apply_jitter(vals, {0.0, 99}) == vals);
    }
    SECTION("perturbation stays strictly inside (-u, u)") {
        Rng rng(45);
        for (int rep = 0; rep < 20; ++rep) {
            const double u = std::pow(10.0, rng.uniform(-4.0, 0.0));
            const auto sample = random_sample(rng, 1 + rng.below(50), true);
            const auto out = apply_jitter(sample, {u, static_cast<std::uint64_t>(rep)});
            REQUIRE(out.size() == sample.size());
            for (std::size_t i = 0; i < out.size(); ++i)
                REQUIRE(std::fabs(out[i] - sample[i]) < u);
        }
    }
    SECTION("deterministic given seed") {
        const auto a = apply_jitter(vals, {0.001, 7});
        const auto b = apply_jitter(vals, {0.001, 7});
        const auto c = apply_jitter(vals, {0.001, 8});
        REQUIRE(a == b);
        REQUIRE(a != c);
    }
    SECTION("breaks ties almost surely") {
        Rng rng(46);
        for (int rep = 0; rep < 30; ++rep) {
            std::vector<double> heavy(40);
            for (double& v : heavy) v = static_cast<double>(rng.below(3));
            auto out = apply_jitter(heavy, {0.001, static_cast<std::uint64_t>(1000 + rep)});
            std::sort(out.begin(), out.end());
            REQUIRE(std::adjacent_find(out.begin(), out.end()) == out.end());
        }
    }
    SECTION("negative width rejected") {
        REQUIRE_THROWS_MATCHES(apply_jitter(vals, {-0.1, 0}), Error,
                               Catch::Matchers::Predicate<Error>([](const Error& e) {
                                   return e.code() == errc::invalid_config;
                               }));
    }
}

TEST_CASE("wasserstein2 squared: worked examples") {
    const EmpiricalDistribution a({0.0, 1.0});
    SECTION("identical measures") {
        REQUIRE(wasserstein2_squared(a, a) == 0.0);
        const EmpiricalDistribution same({1.0, 0.0});
        REQUIRE(wasserstein2_squared(a, same) == 0.0);
    }
    SECTION("unit point masses three apart") {
        // W2^2 between delta_0 and delta_3 is 9
        REQUIRE(wasserstein2_squared(EmpiricalDistribution({0.0}),
                                     EmpiricalDistribution({3.0})) == 9.0);
    }
    SECTION("hand-integrated unequal sizes") {
        // Q_a jumps at 1/2; Q_b == 1: integral = (1/2)(0-1)^2 + (1/2)(1-1)^2
        REQUIRE(wasserstein2_squared(a, EmpiricalDistribution({1.0})) == 0.5);
        // grid {1/3, 1/2, 2/3, 1}: segments contribute 0, 1/6, 0, 1/3
        const EmpiricalDistribution b({0.0, 1.0, 2.0});
        REQUIRE_THAT(wasserstein2_squared(a, b),
                     Catch::Matchers::WithinAbs(0.5, 1e-15));
    }
}

TEST_CASE("wasserstein2 squared: assignment oracle, equal sizes") {
    Rng rng(47);
    for (int rep = 0; rep < 40; ++rep) {
        const std::size_t n = 1 + rng.below(7);
        // tie instances use integer values on both sides so every permutation
        // sum is exact in double and the oracle minimum is well-defined
        const bool ties = rep % 3 == 0;
        const auto xs = random_sample(rng, n, ties);
        const auto ys = random_sample(rng, n, ties);
        const double got = wasserstein2_squared(EmpiricalDistribution(xs), EmpiricalDistribution(ys));
        REQUIRE(got == oracle_w2_assignment(xs, ys));
    }
}

TEST_CASE("wasserstein2 squared: replication oracle, unequal sizes") {
    Rng rng(48);
    for (int rep = 0; rep < 40; ++rep) {
        const std::size_t n = 1 + rng.below(9);
        std::size_t m = 1 + rng.below(9);
        if (m == n) m = n + 1;
        const auto xs = random_sample(rng, n, rep % 2 == 0);
        const auto ys = random_sample(rng, m, rep % 2 == 1);
        const double got = wasserstein2_squared(EmpiricalDistribution(xs), EmpiricalDistribution(ys));
        REQUIRE_THAT(got, Catch::Matchers::WithinRel(oracle_w2_lcm(xs, ys), 1e-12) ||
                              Catch::Matchers::WithinAbs(oracle_w2_lcm(xs, ys), 1e-12));
    }
}

TEST_CASE("wasserstein2 squared: metric properties") {
    Rng rng(49);
    SECTION("symmetry is exact") {
        for (int rep = 0; rep < 20; ++rep) {
            const auto xs = random_sample(rng, 1 + rng.below(12), false);
            const auto ys = random_sample(rng, 1 + rng.below(12), false);
            const EmpiricalDistribution a(xs), b(ys);
            REQUIRE(wasserstein2_squared(a, b) == wasserstein2_squared(b, a));
        }
    }
    SECTION("triangle inequality for the root") {
        for (int rep = 0; rep < 30; ++rep) {
            const EmpiricalDistribution a(random_sample(rng, 1 + rng.below(10), false));
            const EmpiricalDistribution b(random_sample(rng, 1 + rng.below(10), false));
            const EmpiricalDistribution c(random_sample(rng, 1 + rng.below(10), false));
            const double ab = std::sqrt(wasserstein2_squared(a, b));
            const double bc = std::sqrt(wasserstein2_squared(b, c));
            const double ac = std::sqrt(wasserstein2_squared(a, c));
            REQUIRE(ac <= ab + bc + 1e-12);
        }
    }
}
