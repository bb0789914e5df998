#pragma once

#include "archface/dictionary.hpp"
#include "archface/embedding.hpp"
#include "archface/face_provider.hpp"
#include "archface/ingestion.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace archface {

struct Match {
    std::string entity_id;
    double similarity = 0.0;

    friend bool operator==(const Match&, const Match&) = default;
};

// Most similar dictionary entity if its similarity reaches lambda2. Ties
// resolve to the smallest entity_id. EmptyDictionaryError on an empty
// dictionary, DimensionError on a dimension mismatch.
std::optional<Match> identify_face(const FaceEmbedding& face, const EntityDictionary& dictionary, double lambda2);

struct IdentificationResult {
    ImageKey image;
    std::vector<Match> recognized; // sorted by entity_id, one entry per entity
    std::size_t unmatched_face_count = 0;

    friend bool operator==(const IdentificationResult&, const IdentificationResult&) = default;
};

// Resolves every face independently, then groups by image. An entity
// matched by several faces of one image is listed once with its best
// similarity. Images in `scanned` without observations still get an
// (empty) result. Output is sorted by image key.
std::vector<IdentificationResult> identify_corpus(std::span<const FaceObservation> observations,
                                                  const EntityDictionary& dictionary, double lambda2,
                                                  std::span<const ImageKey> scanned = {});

// Results file: one JSON object per line,
// {"url", "timestamp", "entities": [{"id", "similarity"}], "unmatched_count"}.
std::string result_to_jsonl(const IdentificationResult& result);
void write_results(const std::filesystem::path& path, std::span<const IdentificationResult> results);
std::vector<IdentificationResult> read_results(const std::filesystem::path& path);

} // namespace archface
