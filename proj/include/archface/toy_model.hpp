#pragma once

#include "archface/embedding.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace archface {

struct LabeledSample {
    std::vector<double> input;
    std::size_t label = 0;
};

// Linear feature extractor followed by a linear classification layer.
// Dropping `classifier` leaves a map input -> embedding that is reused for
// verification; extract_features never reads it.
struct ToyRepresentationModel {
    Eigen::MatrixXd projection; // input_dim x embedding_dim
    Eigen::MatrixXd classifier; // embedding_dim x classes

    std::size_t input_dim() const { return static_cast<std::size_t>(projection.rows()); }
    std::size_t embedding_dim() const { return static_cast<std::size_t>(projection.cols()); }
    std::size_t classes() const { return static_cast<std::size_t>(classifier.cols()); }

    friend bool operator==(const ToyRepresentationModel& a, const ToyRepresentationModel& b) {
        return a.projection.rows() == b.projection.rows() &&
               a.projection.cols() == b.projection.cols() &&
               a.classifier.rows() == b.classifier.rows() &&
               a.classifier.cols() == b.classifier.cols() && a.projection == b.projection &&
               a.classifier == b.classifier;
    }
};

struct ToyTrainingConfig {
    std::size_t embedding_dim = 16;
    std::size_t epochs = 200;
    double learning_rate = 0.5;
    std::uint64_t seed = 0;
};

struct ToyTrainingRun {
    ToyRepresentationModel model;
    // Mean training loss before the first update and after every epoch;
    // size() == epochs + 1.
    std::vector<double> loss_history;

    double initial_loss() const { return loss_history.front(); }
    double final_loss() const { return loss_history.back(); }
};

// Full-batch gradient descent on softmax cross-entropy. Requires at least
// two classes, each with at least two samples (ConfigError otherwise).
ToyTrainingRun train_toy_representation(std::span<const LabeledSample> samples,
                                        const ToyTrainingConfig& config);

FaceEmbedding extract_features(const ToyRepresentationModel& model, std::span<const double> input);

std::vector<double> softmax(std::span<const double> logits);

// Cross-entropy of softmax(logits) against a one-hot label, computed as
// logsumexp(logits) - logits[label].
double cross_entropy_from_logits(std::span<const double> logits, std::size_t label);

// d/dlogits of cross_entropy_from_logits: softmax(logits) - onehot(label).
std::vector<double> cross_entropy_logit_gradient(std::span<const double> logits, std::size_t label);

struct ToyLossGradient {
    double loss = 0.0;
    Eigen::MatrixXd projection;
    Eigen::MatrixXd classifier;
};

double toy_mean_loss(const ToyRepresentationModel& model, std::span<const LabeledSample> samples);
ToyLossGradient toy_loss_gradient(const ToyRepresentationModel& model,
                                  std::span<const LabeledSample> samples);

} // namespace archface
