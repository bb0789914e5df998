#pragma once

#include "archface/embedding.hpp"
#include "archface/ingestion.hpp"
#include "archface/io.hpp"

#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace archface {

struct BoundingBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct DetectedFace {
    BoundingBox box;
    FaceEmbedding embedding;
};

// Detector + embedder behind one call: image locator in, faces out.
// Implementations must be safe to call from several threads at once.
class FaceProvider {
public:
    virtual ~FaceProvider() = default;

    // Throws DecodeError for an unreadable or undecodable image. An image
    // without faces yields an empty vector.
    virtual std::vector<DetectedFace> detect(const std::string& locator) = 0;
};

// Parses the provider wire format: a JSON array of {"box": [x, y, w, h],
// "embedding": [...]}, or {"error": "..."} which becomes a DecodeError.
std::vector<DetectedFace> parse_provider_response(const Json& response);
Json provider_response_json(std::span<const DetectedFace> faces);

// Replays scripted detections. Script document:
//   {"images": {"<locator>": [{"box": [..], "embedding": [..]}, ...], ...},
//    "undecodable": ["<locator>", ...]}
// Lookup tries the exact locator first, then its file name. Unknown
// locators raise DecodeError.
class SyntheticProvider final : public FaceProvider {
public:
    explicit SyntheticProvider(const Json& script);
    static SyntheticProvider from_file(const std::filesystem::path& path);

    void add(const std::string& locator, std::vector<DetectedFace> faces);
    void mark_undecodable(const std::string& locator);

    std::vector<DetectedFace> detect(const std::string& locator) override;

private:
    std::map<std::string, std::vector<DetectedFace>> script_;
    std::set<std::string> undecodable_;
};

// Runs a separately installed detector/embedder. Each child process reads
// one locator per line on stdin and answers with one JSON line on stdout.
// Up to `max_processes` children are started lazily, one per concurrent
// caller; a child that dies or answers garbage is discarded.
class ExternalProcessProvider final : public FaceProvider {
public:
    explicit ExternalProcessProvider(std::string command, std::size_t max_processes = 1);
    ~ExternalProcessProvider() override;

    ExternalProcessProvider(const ExternalProcessProvider&) = delete;
    ExternalProcessProvider& operator=(const ExternalProcessProvider&) = delete;

    std::vector<DetectedFace> detect(const std::string& locator) override;

    class Child;

private:
    std::unique_ptr<Child> checkout();
    void checkin(std::unique_ptr<Child> child);

    std::string command_;
    std::size_t max_processes_;
    std::size_t started_ = 0;
    std::mutex mutex_;
    std::condition_variable available_;
    std::vector<std::unique_ptr<Child>> idle_;
};

struct FaceObservation {
    ImageKey image;
    std::size_t face_index = 0;
    BoundingBox box;
    FaceEmbedding embedding;
};

// Runs the provider on one image. When `expected_dim` is given, every
// embedding must have it (DimensionError otherwise). Boxes must have
// positive extent (DecodeError otherwise).
std::vector<FaceObservation> detect_and_embed(const ImageRecord& record, FaceProvider& provider,
                                              std::optional<std::size_t> expected_dim = std::nullopt);

struct ScanFailure {
    ImageKey image;
    std::string reason;
};

struct CorpusScan {
    std::vector<ImageKey> images;              // successfully processed, sorted
    std::vector<FaceObservation> observations; // sorted by (image, face_index)
    std::vector<ScanFailure> failures;         // sorted by image
};

// Fans detect_and_embed out over at most `workers` threads. Decode and
// provider failures are recorded and skipped. Output order depends only
// on the records, never on completion order.
CorpusScan scan_corpus(std::span<const ImageRecord> records, FaceProvider& provider, std::size_t workers,
                       std::optional<std::size_t> expected_dim = std::nullopt);

// Embedding manifest: a header line {"format": "archface-embeddings",
// "version": 1, "embedding_dim": d} followed by one line per observation.
std::string observation_id(const FaceObservation& obs);
void write_embedding_manifest(const std::filesystem::path& path, std::size_t embedding_dim,
                              std::span<const FaceObservation> observations);

struct EmbeddingManifest {
    std::size_t embedding_dim = 0;
    std::vector<std::string> ids;
    std::vector<FaceEmbedding> embeddings;
    std::vector<FaceObservation> observations; // only for records carrying url/timestamp
};

// Accepts lines with "id" or "face_id" plus "embedding". Every embedding
// must match the header dimension.
EmbeddingManifest read_embedding_manifest(const std::filesystem::path& path);

} // namespace archface
