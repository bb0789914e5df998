#include "archface/toy_model.hpp"

#include "archface/errors.hpp"
#include "archface/random.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace archface {

namespace {

struct Batch {
    Eigen::MatrixXd inputs; // samples x input_dim
    std::vector<std::size_t> labels;
};

Batch to_batch(std::span<const LabeledSample> samples, std::size_t input_dim) {
    Batch batch{Eigen::MatrixXd(static_cast<Eigen::Index>(samples.size()),
                                static_cast<Eigen::Index>(input_dim)),
                {}};
    batch.labels.reserve(samples.size());
    for (std::size_t r = 0; r < samples.size(); ++r) {
        require_same_dim(input_dim, samples[r].input.size(), "toy sample");
        for (std::size_t c = 0; c < input_dim; ++c) {
            batch.inputs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                samples[r].input[c];
        }
        batch.labels.push_back(samples[r].label);
    }
    return batch;
}

// Returns the mean loss; fills `grad` (softmax - onehot, row per sample) when non-null.
double forward(const ToyRepresentationModel& model, const Batch& batch, Eigen::MatrixXd* grad) {
    const Eigen::MatrixXd logits = batch.inputs * model.projection * model.classifier;
    const auto rows = logits.rows();
    if (grad) grad->resize(rows, logits.cols());
    double total = 0.0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        const Eigen::VectorXd z = logits.row(r).transpose();
        const std::span<const double> view(z.data(), static_cast<std::size_t>(z.size()));
        const auto label = batch.labels[static_cast<std::size_t>(r)];
        total += cross_entropy_from_logits(view, label);
        if (grad) {
            const auto g = cross_entropy_logit_gradient(view, label);
            for (Eigen::Index c = 0; c < z.size(); ++c) (*grad)(r, c) = g[static_cast<std::size_t>(c)];
        }
    }
    return total / static_cast<double>(rows);
}

ToyLossGradient gradient(const ToyRepresentationModel& model, const Batch& batch) {
    Eigen::MatrixXd logit_grad;
    ToyLossGradient out;
    out.loss = forward(model, batch, &logit_grad);
    const double scale = 1.0 / static_cast<double>(batch.inputs.rows());
    const Eigen::MatrixXd hidden = batch.inputs * model.projection;
    out.classifier = scale * hidden.transpose() * logit_grad;
    out.projection = scale * batch.inputs.transpose() * (logit_grad * model.classifier.transpose());
    return out;
}

void validate_training_set(std::span<const LabeledSample> samples) {
    if (samples.empty()) throw ConfigError("toy trainer needs samples");
    std::map<std::size_t, std::size_t> per_class;
    for (const auto& s : samples) ++per_class[s.label];
    if (per_class.size() < 2) throw ConfigError("toy trainer needs at least 2 classes");
    for (const auto& [label, count] : per_class) {
        if (count < 2) {
            throw ConfigError("class " + std::to_string(label) + " has fewer than 2 samples");
        }
    }
}

} // namespace

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw ConfigError("softmax over zero classes");
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - top);
        total += out[i];
    }
    for (auto& p : out) p /= total;
    return out;
}

double cross_entropy_from_logits(std::span<const double> logits, std::size_t label) {
    if (label >= logits.size()) throw ConfigError("label out of range");
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double z : logits) total += std::exp(z - top);
    return top + std::log(total) - logits[label];
}

std::vector<double> cross_entropy_logit_gradient(std::span<const double> logits, std::size_t label) {
    if (label >= logits.size()) throw ConfigError("label out of range");
    auto grad = softmax(logits);
    grad[label] -= 1.0;
    return grad;
}

double toy_mean_loss(const ToyRepresentationModel& model, std::span<const LabeledSample> samples) {
    if (samples.empty()) throw EmptySetError("toy_mean_loss over no samples");
    return forward(model, to_batch(samples, model.input_dim()), nullptr);
}

ToyLossGradient toy_loss_gradient(const ToyRepresentationModel& model,
                                  std::span<const LabeledSample> samples) {
    if (samples.empty()) throw EmptySetError("toy_loss_gradient over no samples");
    return gradient(model, to_batch(samples, model.input_dim()));
}

ToyTrainingRun train_toy_representation(std::span<const LabeledSample> samples,
                                        const ToyTrainingConfig& config) {
    validate_training_set(samples);
    if (config.embedding_dim == 0) throw ConfigError("embedding_dim must be positive");

    const std::size_t input_dim = samples.front().input.size();
    if (input_dim == 0) throw ConfigError("toy samples have no features");
    std::size_t classes = 0;
    for (const auto& s : samples) classes = std::max(classes, s.label + 1);

    const Batch batch = to_batch(samples, input_dim);

    Rng rng(config.seed);
    const auto in = static_cast<Eigen::Index>(input_dim);
    const auto emb = static_cast<Eigen::Index>(config.embedding_dim);
    const auto cls = static_cast<Eigen::Index>(classes);
    ToyRepresentationModel model{Eigen::MatrixXd(in, emb), Eigen::MatrixXd(emb, cls)};
    const double proj_scale = 1.0 / std::sqrt(static_cast<double>(input_dim));
    const double cls_scale = 1.0 / std::sqrt(static_cast<double>(config.embedding_dim));
    for (Eigen::Index c = 0; c < emb; ++c)
        for (Eigen::Index r = 0; r < in; ++r) model.projection(r, c) = proj_scale * rng.normal();
    for (Eigen::Index c = 0; c < cls; ++c)
        for (Eigen::Index r = 0; r < emb; ++r) model.classifier(r, c) = cls_scale * rng.normal();

    ToyTrainingRun run;
    run.loss_history.reserve(config.epochs + 1);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const auto step = gradient(model, batch);
        run.loss_history.push_back(step.loss);
        model.projection -= config.learning_rate * step.projection;
        model.classifier -= config.learning_rate * step.classifier;
    }
    run.loss_history.push_back(forward(model, batch, nullptr));
    run.model = std::move(model);
    return run;
}

FaceEmbedding extract_features(const ToyRepresentationModel& model, std::span<const double> input) {
    require_same_dim(model.input_dim(), input.size(), "extract_features");
    const Eigen::Map<const Eigen::VectorXd> x(input.data(), static_cast<Eigen::Index>(input.size()));
    const Eigen::VectorXd features = model.projection.transpose() * x;
    return FaceEmbedding::normalized(
        std::span<const double>(features.data(), static_cast<std::size_t>(features.size())));
}

} // namespace archface
