#include "archface/calibration.hpp"

#include "archface/errors.hpp"
#include "archface/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace archface {

namespace {

struct ScoredPair {
    double similarity;
    bool same_person;
};

std::vector<ScoredPair> score(std::span<const VerificationPair> pairs) {
    std::vector<ScoredPair> scored;
    scored.reserve(pairs.size());
    for (const auto& p : pairs) scored.push_back({cosine_similarity(p.a, p.b), p.same_person});
    std::sort(scored.begin(), scored.end(),
              [](const ScoredPair& x, const ScoredPair& y) { return x.similarity < y.similarity; });
    return scored;
}

double below(double x) { return std::nextafter(x, -std::numeric_limits<double>::infinity()); }
double above(double x) { return std::nextafter(x, std::numeric_limits<double>::infinity()); }

// A threshold that rejects `lo` and accepts `hi` (lo < hi). For adjacent
// doubles the midpoint rounds onto `lo`, so `hi` itself is used.
double between(double lo, double hi) {
    const double mid = std::midpoint(lo, hi);
    return mid > lo ? mid : hi;
}

} // namespace

bool verify(const FaceEmbedding& a, const FaceEmbedding& b, double threshold) {
    return cosine_similarity(a, b) >= threshold;
}

double evaluate_threshold(std::span<const VerificationPair> pairs, double threshold) {
    if (pairs.empty()) throw EmptySetError("evaluate_threshold over no pairs");
    std::size_t correct = 0;
    for (const auto& p : pairs) {
        if (verify(p.a, p.b, threshold) == p.same_person) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

std::vector<double> candidate_thresholds(std::span<const VerificationPair> pairs) {
    if (pairs.empty()) throw EmptySetError("candidate_thresholds over no pairs");
    const auto scored = score(pairs);
    std::vector<double> out{below(scored.front().similarity)};
    for (std::size_t i = 1; i < scored.size(); ++i) {
        if (scored[i].similarity != scored[i - 1].similarity) {
            out.push_back(between(scored[i - 1].similarity, scored[i].similarity));
        }
    }
    out.push_back(above(scored.back().similarity));
    return out;
}

ThresholdChoice best_threshold(std::span<const VerificationPair> pairs) {
    if (pairs.empty()) throw EmptySetError("best_threshold over no pairs");
    const auto scored = score(pairs);

    // Below every similarity all pairs are accepted: only positives are right.
    long correct = static_cast<long>(
        std::count_if(scored.begin(), scored.end(), [](const ScoredPair& s) { return s.same_person; }));
    long best_correct = correct;
    double best = below(scored.front().similarity);

    std::size_t i = 0;
    while (i < scored.size()) {
        // Move the threshold past one group of equal similarities.
        std::size_t j = i;
        while (j < scored.size() && scored[j].similarity == scored[i].similarity) {
            correct += scored[j].same_person ? -1 : 1;
            ++j;
        }
        const double candidate = j < scored.size()
                                     ? between(scored[j - 1].similarity, scored[j].similarity)
                                     : above(scored.back().similarity);
        if (correct > best_correct) {
            best_correct = correct;
            best = candidate;
        }
        i = j;
    }
    return {best, static_cast<double>(best_correct) / static_cast<double>(scored.size())};
}

std::vector<std::size_t> fold_boundaries(std::size_t count, std::size_t folds) {
    if (folds == 0) throw ConfigError("fold count must be positive");
    std::vector<std::size_t> bounds{0};
    const std::size_t base = count / folds;
    const std::size_t extra = count % folds;
    for (std::size_t f = 0; f < folds; ++f) bounds.push_back(bounds.back() + base + (f < extra ? 1 : 0));
    return bounds;
}

CalibrationResult kfold_calibrate(std::span<const VerificationPair> pairs, std::size_t folds,
                                  std::uint64_t seed) {
    if (folds < 2) throw ConfigError("k-fold calibration needs k >= 2");
    if (folds > pairs.size()) {
        throw ConfigError("k (" + std::to_string(folds) + ") exceeds the number of pairs (" +
                          std::to_string(pairs.size()) + ")");
    }

    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);

    const auto bounds = fold_boundaries(pairs.size(), folds);
    CalibrationResult result;
    result.fold_count = folds;
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<VerificationPair> train;
        std::vector<VerificationPair> held_out;
        train.reserve(pairs.size());
        for (std::size_t pos = 0; pos < order.size(); ++pos) {
            const bool in_fold = pos >= bounds[f] && pos < bounds[f + 1];
            (in_fold ? held_out : train).push_back(pairs[order[pos]]);
        }
        const auto choice = best_threshold(train);
        result.per_fold_thresholds.push_back(choice.threshold);
        result.per_fold_accuracies.push_back(evaluate_threshold(held_out, choice.threshold));
    }

    const auto k = static_cast<double>(folds);
    const auto [lo, hi] =
        std::minmax_element(result.per_fold_thresholds.begin(), result.per_fold_thresholds.end());
    // Summation rounding can push the mean a few ulps outside the fold range.
    result.mean_threshold = std::clamp(
        std::accumulate(result.per_fold_thresholds.begin(), result.per_fold_thresholds.end(), 0.0) / k,
        *lo, *hi);
    result.mean_accuracy =
        std::accumulate(result.per_fold_accuracies.begin(), result.per_fold_accuracies.end(), 0.0) / k;
    double var = 0.0;
    for (double t : result.per_fold_thresholds) var += (t - result.mean_threshold) * (t - result.mean_threshold);
    result.threshold_std = std::sqrt(var / k);
    return result;
}

} // namespace archface
