#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace archface {

inline constexpr std::size_t kDefaultEmbeddingDim = 128;

// A unit-length face descriptor. The only way to obtain one is through
// normalization, so every instance satisfies | ||v|| - 1 | <= 1e-6.
class FaceEmbedding {
public:
    // Throws NormalizationError on a zero (or non-finite) vector.
    static FaceEmbedding normalized(std::span<const double> raw);
    static FaceEmbedding normalized(std::vector<double> raw);

    std::size_t dim() const { return values_.size(); }
    std::span<const double> values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    friend bool operator==(const FaceEmbedding&, const FaceEmbedding&) = default;

private:
    explicit FaceEmbedding(std::vector<double> values) : values_(std::move(values)) {}

    std::vector<double> values_;
};

FaceEmbedding normalize(std::span<const double> raw);

// Dot product of unit vectors, clamped to [-1, 1].
double cosine_similarity(const FaceEmbedding& a, const FaceEmbedding& b);

// Cosine of two arbitrary non-zero vectors.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Component-wise average of the set, re-normalized to unit length.
FaceEmbedding mean_embedding(std::span<const FaceEmbedding> faces);

// Non-negative class probabilities summing to one (within 1e-6).
class ProbabilityDistribution {
public:
    explicit ProbabilityDistribution(std::vector<double> probs);
    static ProbabilityDistribution one_hot(std::size_t classes, std::size_t index);

    std::size_t size() const { return probs_.size(); }
    std::span<const double> probs() const { return probs_; }
    double operator[](std::size_t i) const { return probs_[i]; }

private:
    std::vector<double> probs_;
};

inline constexpr double kProbabilityFloor = 1e-12;

// -sum_i truth_i * log(predicted_i), predictions floored at 1e-12.
double cross_entropy(const ProbabilityDistribution& predicted,
                     const ProbabilityDistribution& truth);

void require_same_dim(std::size_t a, std::size_t b, const char* what);

} // namespace archface
