#include "helpers.hpp"

#include "archface/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace archface;
using testing::emb;

TEST_CASE("normalize") {
    auto e = normalize(std::vector<double>{3, 4});
    CHECK(e[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(e[1] == doctest::Approx(0.8).epsilon(1e-15));

    auto unit = normalize(std::vector<double>{1, 0});
    CHECK(unit[0] == 1.0);
    CHECK(unit[1] == 0.0);

    CHECK_THROWS_AS(normalize(std::vector<double>{0, 0}), NormalizationError);
    CHECK_THROWS_AS(normalize(std::vector<double>{}), NormalizationError);
    CHECK_THROWS_AS(normalize(std::vector<double>{1, NAN}), NormalizationError);
    CHECK_THROWS_AS(normalize(std::vector<double>{INFINITY, 1}), NormalizationError);
}

TEST_CASE("normalized embeddings have unit norm") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> raw(1 + rng.below(300));
        const double scale = std::pow(10.0, rng.uniform(-300, 300));
        for (auto& x : raw) x = rng.normal() * scale;
        const auto e = FaceEmbedding::normalized(raw);
        const auto v = testing::as_vector(e);
        CHECK(std::abs(std::sqrt(testing::naive_dot(v, v)) - 1.0) <= 1e-6);
        CHECK(FaceEmbedding::normalized(v) == e);
    }
}

TEST_CASE("cosine similarity basics") {
    CHECK(cosine_similarity(emb({1, 0}), emb({1, 0})) == 1.0);
    CHECK(cosine_similarity(emb({1, 0}), emb({0, 1})) == 0.0);
    CHECK(cosine_similarity(emb({1, 0}), emb({-1, 0})) == -1.0);
    CHECK_THROWS_AS(cosine_similarity(emb({1, 0}), emb({1, 0, 0})), DimensionError);
    const std::vector<double> a{1, 0}, b{1, 0, 0};
    CHECK_THROWS_AS(cosine_similarity(std::span<const double>(a), std::span<const double>(b)), DimensionError);
}

TEST_CASE("cosine similarity is symmetric, bounded and scale invariant") {
    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
        const std::size_t d = 2 + rng.below(64);
        std::vector<double> a(d), b(d);
        for (auto& x : a) x = rng.normal();
        for (auto& x : b) x = rng.normal();
        const auto ea = FaceEmbedding::normalized(a), eb = FaceEmbedding::normalized(b);
        const double s = cosine_similarity(ea, eb);
        CHECK(s == cosine_similarity(eb, ea));
        CHECK(s >= -1.0);
        CHECK(s <= 1.0);
        CHECK(cosine_similarity(ea, ea) == 1.0);

        const double alpha = std::exp(rng.uniform(-20, 20));
        std::vector<double> scaled(a);
        for (auto& x : scaled) x *= alpha;
        const double raw = cosine_similarity(std::span<const double>(scaled), std::span<const double>(b));
        const double oracle = testing::naive_dot(a, b) /
                              std::sqrt(testing::naive_dot(a, a) * testing::naive_dot(b, b));
        CHECK(std::abs(raw - cosine_similarity(std::span<const double>(a), std::span<const double>(b))) <= 1e-9);
        CHECK(std::abs(raw - oracle) <= 1e-9);
        CHECK(std::abs(s - oracle) <= 1e-12);
    }
}

TEST_CASE("mean embedding") {
    const auto single = mean_embedding(std::vector{emb({1, 0})});
    CHECK(single == emb({1, 0}));

    const auto diag = mean_embedding(std::vector{emb({1, 0}), emb({0, 1})});
    CHECK(diag[0] == doctest::Approx(std::numbers::sqrt2 / 2).epsilon(1e-12));
    CHECK(diag[1] == doctest::Approx(std::numbers::sqrt2 / 2).epsilon(1e-12));

    CHECK_THROWS_AS(mean_embedding(std::vector<FaceEmbedding>{}), EmptySetError);
    CHECK_THROWS_AS(mean_embedding(std::vector{emb({1, 0}), emb({1, 0, 0})}), DimensionError);
}

TEST_CASE("mean of copies is the vector itself") {
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> raw(16);
        for (auto& x : raw) x = rng.normal();
        const auto v = FaceEmbedding::normalized(raw);
        const auto m = mean_embedding(std::vector<FaceEmbedding>(1 + rng.below(50), v));
        for (std::size_t j = 0; j < v.dim(); ++j) CHECK(std::abs(m[j] - v[j]) <= 1e-9);
    }
}

TEST_CASE("mean embedding matches an averaging oracle") {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<FaceEmbedding> set;
        for (int i = 0; i < 10; ++i) {
            std::vector<double> raw(8);
            for (auto& x : raw) x = rng.normal();
            set.push_back(FaceEmbedding::normalized(raw));
        }
        std::vector<long double> sum(8, 0.0L);
        for (const auto& f : set)
            for (std::size_t j = 0; j < 8; ++j) sum[j] += f[j];
        long double norm = 0;
        for (auto x : sum) norm += x * x;
        norm = std::sqrt(norm);
        const auto m = mean_embedding(set);
        for (std::size_t j = 0; j < 8; ++j) CHECK(std::abs(m[j] - static_cast<double>(sum[j] / norm)) <= 1e-9);
    }
}

TEST_CASE("probability distribution validation") {
    CHECK_NOTHROW(ProbabilityDistribution({0.5, 0.5}));
    CHECK_NOTHROW(ProbabilityDistribution({0.3, 0.7 + 5e-7}));
    CHECK_THROWS_AS(ProbabilityDistribution({0.5, 0.6}), ConfigError);
    CHECK_THROWS_AS(ProbabilityDistribution({-0.1, 1.1}), ConfigError);
    CHECK_THROWS_AS(ProbabilityDistribution({}), ConfigError);
    CHECK_THROWS_AS(ProbabilityDistribution::one_hot(3, 3), ConfigError);
    const auto h = ProbabilityDistribution::one_hot(4, 2);
    CHECK(h[2] == 1.0);
    CHECK(h[0] + h[1] + h[3] == 0.0);
}

TEST_CASE("cross entropy analytic cases") {
    CHECK(cross_entropy(ProbabilityDistribution({1, 0, 0}), ProbabilityDistribution::one_hot(3, 0)) == 0.0);
    CHECK(std::abs(cross_entropy(ProbabilityDistribution({0.25, 0.25, 0.25, 0.25}),
                                 ProbabilityDistribution::one_hot(4, 2)) -
                   std::log(4.0)) <= 1e-12);
    CHECK_THROWS_AS(cross_entropy(ProbabilityDistribution({1, 0}), ProbabilityDistribution::one_hot(3, 0)),
                    DimensionError);
}

TEST_CASE("cross entropy floors zero probabilities") {
    const double ce = cross_entropy(ProbabilityDistribution({1, 0}), ProbabilityDistribution::one_hot(2, 1));
    CHECK(std::isfinite(ce));
    CHECK(ce == doctest::Approx(-std::log(kProbabilityFloor)));
}

TEST_CASE("cross entropy matches direct summation and is non-negative") {
    Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.below(10);
        std::vector<double> p(n);
        double total = 0;
        for (auto& x : p) total += (x = rng.uniform() + 1e-3);
        for (auto& x : p) x /= total;
        const ProbabilityDistribution c(p);
        for (std::size_t k = 0; k < n; ++k) {
            const double ce = cross_entropy(c, ProbabilityDistribution::one_hot(n, k));
            CHECK(std::abs(ce - (-std::log(p[k]))) <= 1e-12);
            CHECK(ce > 0.0);
        }
    }
}
