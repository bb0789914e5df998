#include "archface/embedding.hpp"

#include "archface/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace archface {

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                             " vs " + std::to_string(b) + ")");
    }
}

FaceEmbedding FaceEmbedding::normalized(std::vector<double> raw) {
    if (raw.empty()) throw NormalizationError("cannot normalize an empty vector");
    double largest = 0.0;
    for (double x : raw) {
        if (!std::isfinite(x)) throw NormalizationError("cannot normalize a non-finite vector");
        largest = std::max(largest, std::abs(x));
    }
    if (largest == 0.0) throw NormalizationError("cannot normalize a zero vector");
    // Already unit length: keep the bits so that normalization is idempotent.
    const double squared = std::inner_product(raw.begin(), raw.end(), raw.begin(), 0.0);
    if (std::abs(squared - 1.0) <= 1e-12) return FaceEmbedding(std::move(raw));
    // Pre-scaling keeps the squared norm clear of overflow and underflow.
    for (auto& x : raw) x /= largest;
    const double norm = std::sqrt(std::inner_product(raw.begin(), raw.end(), raw.begin(), 0.0));
    for (auto& x : raw) x /= norm;
    return FaceEmbedding(std::move(raw));
}

FaceEmbedding FaceEmbedding::normalized(std::span<const double> raw) {
    return normalized(std::vector<double>(raw.begin(), raw.end()));
}

FaceEmbedding normalize(std::span<const double> raw) { return FaceEmbedding::normalized(raw); }

double cosine_similarity(const FaceEmbedding& a, const FaceEmbedding& b) {
    require_same_dim(a.dim(), b.dim(), "cosine_similarity");
    // Identical vectors are exactly similar; the rounded dot product may fall an ulp short.
    if (a == b) return 1.0;
    double dot = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) dot += a[i] * b[i];
    return std::clamp(dot, -1.0, 1.0);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a.size(), b.size(), "cosine_similarity");
    return cosine_similarity(FaceEmbedding::normalized(a), FaceEmbedding::normalized(b));
}

FaceEmbedding mean_embedding(std::span<const FaceEmbedding> faces) {
    if (faces.empty()) throw EmptySetError("mean_embedding of an empty set");
    const std::size_t dim = faces.front().dim();
    std::vector<double> sum(dim, 0.0);
    for (const auto& face : faces) {
        require_same_dim(dim, face.dim(), "mean_embedding");
        for (std::size_t i = 0; i < dim; ++i) sum[i] += face[i];
    }
    const auto count = static_cast<double>(faces.size());
    for (auto& x : sum) x /= count;
    return FaceEmbedding::normalized(std::move(sum));
}

ProbabilityDistribution::ProbabilityDistribution(std::vector<double> probs)
    : probs_(std::move(probs)) {
    if (probs_.empty()) throw ConfigError("probability distribution over zero classes");
    double total = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0)) throw ConfigError("negative or NaN probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-6) {
        throw ConfigError("probabilities sum to " + std::to_string(total) + ", expected 1");
    }
}

ProbabilityDistribution ProbabilityDistribution::one_hot(std::size_t classes, std::size_t index) {
    if (index >= classes) throw ConfigError("one-hot index out of range");
    std::vector<double> probs(classes, 0.0);
    probs[index] = 1.0;
    return ProbabilityDistribution(std::move(probs));
}

double cross_entropy(const ProbabilityDistribution& predicted,
                     const ProbabilityDistribution& truth) {
    require_same_dim(predicted.size(), truth.size(), "cross_entropy");
    double loss = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == 0.0) continue;
        loss -= truth[i] * std::log(std::max(predicted[i], kProbabilityFloor));
    }
    // -0.0 for a perfect prediction reads oddly in reports.
    return loss == 0.0 ? 0.0 : loss;
}

} // namespace archface
