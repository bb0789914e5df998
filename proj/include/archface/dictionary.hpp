#pragma once

#include "archface/embedding.hpp"
#include "archface/entity_source.hpp"
#include "archface/face_provider.hpp"
#include "archface/io.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace archface {

enum class TargetStrategy { Mean, Reference };

std::string to_string(TargetStrategy strategy);
TargetStrategy parse_strategy(const std::string& name); // ConfigError on unknown names

struct SampleFace {
    std::string face_id;
    std::string entity_id;
    FaceEmbedding embedding;
    std::string source_image;
    std::optional<bool> ground_truth; // only in annotated evaluation sets
    std::optional<std::string> crop;  // workspace-relative crop image, for curation
};

struct SampleSet {
    std::string entity_id;
    std::string display_name;
    std::vector<SampleFace> faces;
    std::optional<std::string> reference_face_id;

    const SampleFace* find(const std::string& face_id) const;
    std::size_t embedding_dim() const { return faces.empty() ? 0 : faces.front().embedding.dim(); }

    // Unique face ids, uniform dimension, reference names a face.
    void validate() const;
};

// Where sample images for an entity come from.
struct SampleImage {
    std::string name;    // stable, unique within the entity; orders the set
    std::string locator; // handed to the face provider
    std::string source;  // provenance recorded on every face
};

class SampleImageProvider {
public:
    virtual ~SampleImageProvider() = default;

    // At most `k` images, in a stable order. Images that could not be
    // obtained are appended to `skipped` with a reason and not returned.
    virtual std::vector<SampleImage> images_for(const EntityRecord& entity, std::size_t k,
                                                std::vector<std::string>& skipped) = 0;
};

// Regular files under <root>/<entity_id>/, sorted by file name.
class DirectoryImageProvider final : public SampleImageProvider {
public:
    explicit DirectoryImageProvider(std::filesystem::path root) : root_(std::move(root)) {}
    std::vector<SampleImage> images_for(const EntityRecord& entity, std::size_t k,
                                        std::vector<std::string>& skipped) override;

private:
    std::filesystem::path root_;
};

// A list file with lines `<entity_id> <url>`. The first k URLs listed for
// an entity are downloaded into <cache>/<entity_id>/.
class UrlListImageProvider final : public SampleImageProvider {
public:
    using Fetch = std::function<std::string(const std::string& url)>;

    UrlListImageProvider(const std::filesystem::path& list_file, std::filesystem::path cache_dir,
                         Fetch fetch = {});
    std::vector<SampleImage> images_for(const EntityRecord& entity, std::size_t k,
                                        std::vector<std::string>& skipped) override;

private:
    std::map<std::string, std::vector<std::string>> urls_;
    std::filesystem::path cache_dir_;
    Fetch fetch_;
};

inline constexpr std::size_t kDefaultSampleBudget = 100;

// Runs every face found in the entity's first k sample images into a set.
// Faces are ordered by (image name, face index). Images the provider
// cannot decode are skipped; EmptySampleSetError when no face survives.
SampleSet gather_samples(const EntityRecord& entity, SampleImageProvider& images, FaceProvider& faces,
                         std::size_t k = kDefaultSampleBudget, std::vector<std::string>* skipped = nullptr);

FaceEmbedding select_target(const SampleSet& set, TargetStrategy strategy);

struct FilterReport {
    std::vector<std::string> kept;
    std::vector<std::string> removed;
    TargetStrategy strategy = TargetStrategy::Reference;
    double threshold = 0.0;
};

// Keeps a face iff similarity(face, target) >= lambda1. Face order is
// preserved in both lists.
FilterReport filter_features(const SampleSet& set, const FaceEmbedding& target, double lambda1,
                             TargetStrategy strategy);

// select_target followed by filter_features.
FilterReport cleanse(const SampleSet& set, TargetStrategy strategy, double lambda1);

// Keeps every face; the unfiltered baseline.
FilterReport keep_all(const SampleSet& set);

struct FilterMetrics {
    double precision = 1.0;
    double recall = 1.0;
    double f1 = 1.0;
    // Set when nothing was kept (precision reported as 1.0) or the set has
    // no true faces (recall reported as 1.0).
    bool degenerate = false;
    std::size_t kept = 0;
    std::size_t true_kept = 0;
    std::size_t true_total = 0;
};

// Requires ground_truth on every face (ConfigError otherwise).
FilterMetrics evaluate_filtering(const FilterReport& report, const SampleSet& set);

struct DictionaryEntry {
    std::string display_name;
    FaceEmbedding mean;
    std::size_t sample_count = 0;
};

struct EntityDictionary {
    std::size_t embedding_dim = 0;
    std::map<std::string, DictionaryEntry> entries; // ordered by entity_id
    Json config = Json::object();                   // creation settings, informational
};

struct DictionaryBuild {
    EntityDictionary dictionary;
    std::vector<std::string> dropped; // entities whose kept set was empty
};

// One mean vector per entity over its kept faces. Display names come from
// `names`, then the set's own display_name, then the id. Entities with no
// kept faces are dropped; EmptyDictionaryError when nothing remains.
DictionaryBuild build_dictionary(std::span<const std::pair<SampleSet, FilterReport>> filtered,
                                 const std::map<std::string, std::string>& names = {});

// NotFoundError for an unknown face id.
SampleSet set_reference(SampleSet set, const std::string& face_id);

// Applies face_id -> ground truth annotations; returns how many matched.
std::size_t apply_annotations(SampleSet& set, const std::map<std::string, bool>& annotations);
std::map<std::string, bool> read_annotations(const std::filesystem::path& path);

// Serialization
Json filter_report_json(const FilterReport& report);
Json filter_metrics_json(const FilterMetrics& metrics);

std::string sample_set_to_jsonl(const SampleSet& set);
SampleSet sample_set_from_jsonl(const std::filesystem::path& path);
void write_sample_set(const std::filesystem::path& path, const SampleSet& set);

std::string dictionary_to_jsonl(const EntityDictionary& dictionary);
EntityDictionary read_dictionary(const std::filesystem::path& path);
void write_dictionary(const std::filesystem::path& path, const EntityDictionary& dictionary);

} // namespace archface
