#include "archface/identification.hpp"

#include "archface/errors.hpp"
#include "archface/io.hpp"

#include <algorithm>
#include <map>

namespace archface {

std::optional<Match> identify_face(const FaceEmbedding& face, const EntityDictionary& dictionary, double lambda2) {
    if (dictionary.entries.empty()) throw EmptyDictionaryError("cannot identify against an empty dictionary");
    require_same_dim(dictionary.embedding_dim, face.dim(), "identify_face");

    // entries are ordered by id, so keeping the first strict maximum breaks ties by id.
    const std::string* best_id = nullptr;
    double best = 0.0;
    for (const auto& [id, entry] : dictionary.entries) {
        const double sim = cosine_similarity(face, entry.mean);
        if (!best_id || sim > best) {
            best_id = &id;
            best = sim;
        }
    }
    if (best < lambda2) return std::nullopt;
    return Match{*best_id, best};
}

std::vector<IdentificationResult> identify_corpus(std::span<const FaceObservation> observations,
                                                  const EntityDictionary& dictionary, double lambda2,
                                                  std::span<const ImageKey> scanned) {
    if (dictionary.entries.empty()) throw EmptyDictionaryError("cannot identify against an empty dictionary");

    struct Accumulator {
        std::map<std::string, double> best;
        std::size_t unmatched = 0;
    };
    std::map<ImageKey, Accumulator> per_image;
    for (const auto& key : scanned) per_image.try_emplace(key);
    for (const auto& obs : observations) {
        auto& acc = per_image[obs.image];
        if (const auto match = identify_face(obs.embedding, dictionary, lambda2)) {
            auto [it, inserted] = acc.best.try_emplace(match->entity_id, match->similarity);
            if (!inserted) it->second = std::max(it->second, match->similarity);
        } else {
            ++acc.unmatched;
        }
    }

    std::vector<IdentificationResult> results;
    results.reserve(per_image.size());
    for (auto& [key, acc] : per_image) {
        IdentificationResult r{key, {}, acc.unmatched};
        for (const auto& [id, sim] : acc.best) r.recognized.push_back({id, sim});
        results.push_back(std::move(r));
    }
    return results;
}

std::string result_to_jsonl(const IdentificationResult& result) {
    Json entities = Json::array();
    for (const auto& m : result.recognized) entities.push_back({{"id", m.entity_id}, {"similarity", m.similarity}});
    return Json{{"url", result.image.url},
                {"timestamp", result.image.timestamp},
                {"entities", entities},
                {"unmatched_count", result.unmatched_face_count}}
        .dump();
}

void write_results(const std::filesystem::path& path, std::span<const IdentificationResult> results) {
    std::string text;
    for (const auto& r : results) text += result_to_jsonl(r) + "\n";
    write_file_atomic(path, text);
}

std::vector<IdentificationResult> read_results(const std::filesystem::path& path) {
    std::vector<IdentificationResult> out;
    for_each_jsonl(path, [&](const Json& j, std::size_t) {
        IdentificationResult r{{j.at("url").get<std::string>(), j.at("timestamp").get<std::string>()},
                               {},
                               j.value("unmatched_count", std::size_t{0})};
        for (const auto& e : j.at("entities")) {
            r.recognized.push_back({e.at("id").get<std::string>(), e.value("similarity", 0.0)});
        }
        std::sort(r.recognized.begin(), r.recognized.end(),
                  [](const Match& a, const Match& b) { return a.entity_id < b.entity_id; });
        out.push_back(std::move(r));
    });
    return out;
}

} // namespace archface
