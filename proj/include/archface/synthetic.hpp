#pragma once

#include "archface/calibration.hpp"
#include "archface/dictionary.hpp"
#include "archface/embedding.hpp"
#include "archface/random.hpp"
#include "archface/toy_model.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace archface::synthetic {

std::vector<double> gaussian_vector(std::size_t dim, Rng& rng);
FaceEmbedding random_unit(std::size_t dim, Rng& rng);

// A unit vector whose cosine with `target` is `similarity` (up to rounding).
FaceEmbedding at_similarity(const FaceEmbedding& target, double similarity, Rng& rng);

struct SimilarityDistribution {
    double mean = 0.0;
    double stddev = 0.0;
};

// Pairs whose similarities are drawn from the given normals (clamped to
// [-1, 1]); positives first, then negatives.
std::vector<VerificationPair> verification_pairs(SimilarityDistribution positives, std::size_t positive_count,
                                                 SimilarityDistribution negatives, std::size_t negative_count,
                                                 std::size_t dim, Rng& rng);

// `classes` isotropic Gaussian blobs in `dim` dimensions whose centres lie
// at distance `separation` from the origin in random directions.
struct GaussianClasses {
    std::vector<std::vector<double>> centres;
    std::vector<LabeledSample> train;
    std::vector<LabeledSample> test;
};
GaussianClasses gaussian_classes(std::size_t classes, std::size_t train_per_class, std::size_t test_per_class,
                                 std::size_t dim, double separation, double noise, Rng& rng);

// A web-gathered sample set: true faces scattered around one identity,
// impostors around a second, unrelated identity (somebody who keeps being
// photographed with the target). Faces are annotated with ground truth and
// a crisp portrait of the true identity is designated as reference.
struct NoisySetParams {
    std::size_t true_faces = 67;
    std::size_t impostor_faces = 33;
    std::size_t dim = kDefaultEmbeddingDim;
    SimilarityDistribution true_spread{0.85, 0.02};     // similarity to the identity
    SimilarityDistribution impostor_spread{0.85, 0.02}; // similarity to the impostor identity
    double reference_similarity = 0.99;
};
SampleSet noisy_sample_set(const std::string& entity_id, const NoisySetParams& params, Rng& rng);

// Writes a self-contained demo under `dir`:
//   entities.json   SPARQL-style fixture for the entities subcommand
//   samples/<id>/   placeholder sample images
//   corpus/         placeholder archive images
//   annotations.jsonl  ground truth for every sample face
//   provider.json   synthetic provider script covering both
//   manifest.txt    archive manifest over welt.de / bild.de / others
// Identical seeds produce identical files.
void write_demo(const std::filesystem::path& dir, std::uint64_t seed);

} // namespace archface::synthetic
