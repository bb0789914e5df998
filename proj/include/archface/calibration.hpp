#pragma once

#include "archface/embedding.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace archface {

// Operating points reported for the original CNN on LFW and on the
// politician dictionary. They are the CLI defaults; nothing in this
// repository can reproduce them without that model and data.
inline constexpr double kDefaultLambda1 = 0.757;
inline constexpr double kDefaultLambda1Std = 0.002;
inline constexpr double kDefaultLambda1Accuracy = 0.980;
inline constexpr double kDefaultLambda2 = 0.833;
inline constexpr double kDefaultLambda2Std = 0.002;
inline constexpr double kDefaultLambda2Accuracy = 0.96;

struct VerificationPair {
    FaceEmbedding a;
    FaceEmbedding b;
    bool same_person = false;
};

struct CalibrationResult {
    double mean_threshold = 0.0;
    std::vector<double> per_fold_thresholds;
    std::vector<double> per_fold_accuracies;
    double mean_accuracy = 0.0;
    double threshold_std = 0.0; // population standard deviation
    std::size_t fold_count = 0;
};

struct ThresholdChoice {
    double threshold = 0.0;
    double accuracy = 0.0;
};

// similarity(a, b) >= threshold
bool verify(const FaceEmbedding& a, const FaceEmbedding& b, double threshold);

double evaluate_threshold(std::span<const VerificationPair> pairs, double threshold);

// Every threshold worth trying: a sentinel just below the smallest
// similarity, midpoints between adjacent distinct similarities, and a
// sentinel just above the largest. Sorted ascending.
std::vector<double> candidate_thresholds(std::span<const VerificationPair> pairs);

// Exact maximiser of evaluate_threshold over candidate_thresholds, found
// with one sorted sweep. Ties go to the smallest threshold.
ThresholdChoice best_threshold(std::span<const VerificationPair> pairs);

// Contiguous fold boundaries over `count` items; sizes differ by at most one
// and the first (count % folds) folds take the extra item.
std::vector<std::size_t> fold_boundaries(std::size_t count, std::size_t folds);

CalibrationResult kfold_calibrate(std::span<const VerificationPair> pairs, std::size_t folds,
                                  std::uint64_t seed);

} // namespace archface
