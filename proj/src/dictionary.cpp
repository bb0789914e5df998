#include "archface/dictionary.hpp"

#include "archface/errors.hpp"
#include "archface/http.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace archface {

namespace fs = std::filesystem;

namespace {

Json embedding_json(const FaceEmbedding& e) { return Json(std::vector<double>(e.values().begin(), e.values().end())); }

FaceEmbedding embedding_from(const Json& j) { return FaceEmbedding::normalized(j.get<std::vector<double>>()); }

std::string pad3(std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%03zu", n);
    return buf;
}

std::string url_extension(const std::string& url) {
    std::string path = url.substr(0, url.find_first_of("?#"));
    const auto ext = fs::path(path).extension().string();
    return ext.size() > 1 && ext.size() <= 5 ? ext : std::string(".img");
}

} // namespace

std::string to_string(TargetStrategy strategy) {
    return strategy == TargetStrategy::Mean ? "mean" : "reference";
}

TargetStrategy parse_strategy(const std::string& name) {
    if (name == "mean") return TargetStrategy::Mean;
    if (name == "reference") return TargetStrategy::Reference;
    throw ConfigError("unknown target strategy '" + name + "' (expected mean or reference)");
}

const SampleFace* SampleSet::find(const std::string& face_id) const {
    const auto it = std::find_if(faces.begin(), faces.end(), [&](const SampleFace& f) { return f.face_id == face_id; });
    return it == faces.end() ? nullptr : &*it;
}

void SampleSet::validate() const {
    std::set<std::string> ids;
    for (const auto& f : faces) {
        if (!ids.insert(f.face_id).second) throw ConfigError("duplicate face id " + f.face_id + " in " + entity_id);
        require_same_dim(embedding_dim(), f.embedding.dim(), "sample set");
    }
    if (reference_face_id && !ids.contains(*reference_face_id)) {
        throw NotFoundError("reference face " + *reference_face_id + " is not in " + entity_id);
    }
}

// ---------------------------------------------------------------------------
// Sample image providers

std::vector<SampleImage> DirectoryImageProvider::images_for(const EntityRecord& entity, std::size_t k,
                                                            std::vector<std::string>& skipped) {
    const fs::path dir = root_ / entity.entity_id;
    std::vector<fs::path> files;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        skipped.push_back(dir.string() + ": no sample directory");
        return {};
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
    if (files.size() > k) files.resize(k);
    std::vector<SampleImage> out;
    for (const auto& f : files) out.push_back({f.filename().string(), f.string(), f.string()});
    return out;
}

UrlListImageProvider::UrlListImageProvider(const fs::path& list_file, fs::path cache_dir, Fetch fetch)
    : cache_dir_(std::move(cache_dir)), fetch_(std::move(fetch)) {
    if (!fetch_) {
        fetch_ = [](const std::string& url) {
            auto res = http_get(url, {{"User-Agent", "archface/0.1 (sample gathering)"}});
            if (res.status < 200 || res.status >= 300) {
                throw SourceUnavailableError("HTTP " + std::to_string(res.status) + " for " + url);
            }
            return std::move(res.body);
        };
    }
    std::istringstream in(read_text_file(list_file));
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream fields(line);
        std::string entity, url;
        if (!(fields >> entity) || entity.front() == '#') continue;
        if (!(fields >> url)) throw ParseError(list_file.string() + ": line without URL: " + line);
        urls_[entity].push_back(url);
    }
}

std::vector<SampleImage> UrlListImageProvider::images_for(const EntityRecord& entity, std::size_t k,
                                                          std::vector<std::string>& skipped) {
    std::vector<SampleImage> out;
    const auto it = urls_.find(entity.entity_id);
    if (it == urls_.end()) return out;
    const fs::path dir = cache_dir_ / entity.entity_id;
    fs::create_directories(dir);
    const auto& urls = it->second;
    for (std::size_t i = 0; i < urls.size() && i < k; ++i) {
        const std::string name = pad3(i) + url_extension(urls[i]);
        try {
            const std::string bytes = fetch_(urls[i]);
            write_file_atomic(dir / name, bytes);
            out.push_back({name, (dir / name).string(), urls[i]});
        } catch (const Error& e) {
            spdlog::warn("skipping sample image {}: {}", urls[i], e.what());
            skipped.push_back(urls[i] + ": " + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gathering, targets, filtering

SampleSet gather_samples(const EntityRecord& entity, SampleImageProvider& images, FaceProvider& faces,
                         std::size_t k, std::vector<std::string>* skipped) {
    std::vector<std::string> local_skipped;
    auto& skip_log = skipped ? *skipped : local_skipped;
    auto listed = images.images_for(entity, k, skip_log);
    std::sort(listed.begin(), listed.end(), [](const SampleImage& a, const SampleImage& b) { return a.name < b.name; });
    if (listed.size() > k) listed.resize(k);

    SampleSet set{entity.entity_id, entity.display_name, {}, std::nullopt};
    for (const auto& image : listed) {
        std::vector<DetectedFace> detected;
        try {
            detected = faces.detect(image.locator);
        } catch (const Error& e) {
            spdlog::warn("skipping {} for {}: {}", image.locator, entity.entity_id, e.what());
            skip_log.push_back(image.source + ": " + e.what());
            continue;
        }
        for (std::size_t i = 0; i < detected.size(); ++i) {
            set.faces.push_back({entity.entity_id + "/" + image.name + "#" + std::to_string(i), entity.entity_id,
                                 std::move(detected[i].embedding), image.source, std::nullopt, std::nullopt});
        }
    }
    if (set.faces.empty()) throw EmptySampleSetError("no faces gathered for " + entity.entity_id);
    set.validate();
    return set;
}

FaceEmbedding select_target(const SampleSet& set, TargetStrategy strategy) {
    if (set.faces.empty()) throw EmptySetError("no faces in sample set " + set.entity_id);
    if (strategy == TargetStrategy::Mean) {
        std::vector<FaceEmbedding> all;
        all.reserve(set.faces.size());
        for (const auto& f : set.faces) all.push_back(f.embedding);
        return mean_embedding(all);
    }
    if (!set.reference_face_id) throw MissingReferenceError("no reference face selected for " + set.entity_id);
    const SampleFace* ref = set.find(*set.reference_face_id);
    if (!ref) throw NotFoundError("reference face " + *set.reference_face_id + " is not in " + set.entity_id);
    return ref->embedding;
}

FilterReport filter_features(const SampleSet& set, const FaceEmbedding& target, double lambda1,
                             TargetStrategy strategy) {
    FilterReport report{{}, {}, strategy, lambda1};
    for (const auto& f : set.faces) {
        (cosine_similarity(f.embedding, target) >= lambda1 ? report.kept : report.removed).push_back(f.face_id);
    }
    return report;
}

FilterReport cleanse(const SampleSet& set, TargetStrategy strategy, double lambda1) {
    return filter_features(set, select_target(set, strategy), lambda1, strategy);
}

FilterReport keep_all(const SampleSet& set) {
    FilterReport report{{}, {}, TargetStrategy::Mean, -1.0};
    for (const auto& f : set.faces) report.kept.push_back(f.face_id);
    return report;
}

FilterMetrics evaluate_filtering(const FilterReport& report, const SampleSet& set) {
    const std::set<std::string> kept(report.kept.begin(), report.kept.end());
    FilterMetrics m;
    for (const auto& f : set.faces) {
        if (!f.ground_truth) throw ConfigError("face " + f.face_id + " has no ground-truth annotation");
        const bool is_kept = kept.contains(f.face_id);
        if (is_kept) ++m.kept;
        if (*f.ground_truth) {
            ++m.true_total;
            if (is_kept) ++m.true_kept;
        }
    }
    if (m.kept == 0) {
        m.precision = 1.0;
        m.degenerate = true;
    } else {
        m.precision = static_cast<double>(m.true_kept) / static_cast<double>(m.kept);
    }
    if (m.true_total == 0) {
        m.recall = 1.0;
        m.degenerate = true;
    } else {
        m.recall = static_cast<double>(m.true_kept) / static_cast<double>(m.true_total);
    }
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    if (m.degenerate) spdlog::warn("degenerate cleansing metrics ({} kept, {} true faces)", m.kept, m.true_total);
    return m;
}

DictionaryBuild build_dictionary(std::span<const std::pair<SampleSet, FilterReport>> filtered,
                                 const std::map<std::string, std::string>& names) {
    if (filtered.empty()) throw EmptyDictionaryError("no sample sets to build a dictionary from");
    DictionaryBuild build;
    std::set<std::string> seen;
    for (const auto& [set, report] : filtered) {
        if (!seen.insert(set.entity_id).second) throw ConfigError("entity " + set.entity_id + " supplied twice");
        const std::set<std::string> kept(report.kept.begin(), report.kept.end());
        std::vector<FaceEmbedding> kept_faces;
        for (const auto& f : set.faces) {
            if (kept.contains(f.face_id)) kept_faces.push_back(f.embedding);
        }
        if (kept_faces.empty()) {
            spdlog::warn("entity {} has no faces left after filtering; leaving it out", set.entity_id);
            build.dropped.push_back(set.entity_id);
            continue;
        }
        if (build.dictionary.embedding_dim == 0) build.dictionary.embedding_dim = kept_faces.front().dim();
        require_same_dim(build.dictionary.embedding_dim, kept_faces.front().dim(), "dictionary");

        std::string name = set.display_name.empty() ? set.entity_id : set.display_name;
        if (const auto it = names.find(set.entity_id); it != names.end()) name = it->second;
        build.dictionary.entries.emplace(set.entity_id,
                                         DictionaryEntry{name, mean_embedding(kept_faces), kept_faces.size()});
    }
    std::sort(build.dropped.begin(), build.dropped.end());
    if (build.dictionary.entries.empty()) throw EmptyDictionaryError("every entity was emptied by filtering");
    return build;
}

SampleSet set_reference(SampleSet set, const std::string& face_id) {
    if (!set.find(face_id)) throw NotFoundError("face " + face_id + " is not in " + set.entity_id);
    set.reference_face_id = face_id;
    return set;
}

std::size_t apply_annotations(SampleSet& set, const std::map<std::string, bool>& annotations) {
    std::size_t matched = 0;
    for (auto& f : set.faces) {
        if (const auto it = annotations.find(f.face_id); it != annotations.end()) {
            f.ground_truth = it->second;
            ++matched;
        }
    }
    return matched;
}

std::map<std::string, bool> read_annotations(const fs::path& path) {
    std::map<std::string, bool> out;
    for_each_jsonl(path, [&](const Json& j, std::size_t) {
        out[j.at("face_id").get<std::string>()] = j.at("ground_truth").get<bool>();
    });
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

Json filter_report_json(const FilterReport& report) {
    return Json{{"strategy", to_string(report.strategy)},
                {"threshold", report.threshold},
                {"kept", report.kept},
                {"removed", report.removed}};
}

Json filter_metrics_json(const FilterMetrics& m) {
    return Json{{"precision", m.precision}, {"recall", m.recall},     {"f1", m.f1},
                {"degenerate", m.degenerate}, {"kept", m.kept},       {"true_kept", m.true_kept},
                {"true_total", m.true_total}};
}

std::string sample_set_to_jsonl(const SampleSet& set) {
    Json header{{"format", "archface-samples"},
                {"version", 1},
                {"entity_id", set.entity_id},
                {"display_name", set.display_name},
                {"embedding_dim", set.embedding_dim()},
                {"reference_face_id", set.reference_face_id ? Json(*set.reference_face_id) : Json(nullptr)}};
    std::string text = header.dump() + "\n";
    for (const auto& f : set.faces) {
        Json line{{"face_id", f.face_id},
                  {"entity_id", f.entity_id},
                  {"source_image", f.source_image},
                  {"embedding", embedding_json(f.embedding)}};
        if (f.ground_truth) line["ground_truth"] = *f.ground_truth;
        if (f.crop) line["crop"] = *f.crop;
        text += line.dump() + "\n";
    }
    return text;
}

SampleSet sample_set_from_jsonl(const fs::path& path) {
    SampleSet set;
    bool have_header = false;
    for_each_jsonl(path, [&](const Json& j, std::size_t line) {
        if (!have_header) {
            if (j.value("format", "") != "archface-samples") {
                throw ParseError(path.string() + ":" + std::to_string(line) + ": not a sample-set manifest");
            }
            set.entity_id = j.at("entity_id").get<std::string>();
            set.display_name = j.value("display_name", set.entity_id);
            if (j.contains("reference_face_id") && !j["reference_face_id"].is_null()) {
                set.reference_face_id = j["reference_face_id"].get<std::string>();
            }
            have_header = true;
            return;
        }
        SampleFace f{j.at("face_id").get<std::string>(), j.value("entity_id", set.entity_id),
                     embedding_from(j.at("embedding")), j.value("source_image", ""), std::nullopt, std::nullopt};
        if (j.contains("ground_truth") && !j["ground_truth"].is_null()) f.ground_truth = j["ground_truth"].get<bool>();
        if (j.contains("crop") && !j["crop"].is_null()) f.crop = j["crop"].get<std::string>();
        set.faces.push_back(std::move(f));
    });
    if (!have_header) throw ParseError(path.string() + ": empty sample-set manifest");
    try {
        set.validate();
    } catch (const Error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return set;
}

void write_sample_set(const fs::path& path, const SampleSet& set) {
    set.validate();
    write_file_atomic(path, sample_set_to_jsonl(set));
}

std::string dictionary_to_jsonl(const EntityDictionary& dictionary) {
    Json header{{"format", "archface-dictionary"},
                {"version", 1},
                {"embedding_dim", dictionary.embedding_dim},
                {"config", dictionary.config}};
    std::string text = header.dump() + "\n";
    for (const auto& [id, entry] : dictionary.entries) {
        text += Json{{"entity_id", id},
                     {"display_name", entry.display_name},
                     {"sample_count", entry.sample_count},
                     {"embedding", embedding_json(entry.mean)}}
                    .dump() +
                "\n";
    }
    return text;
}

EntityDictionary read_dictionary(const fs::path& path) {
    EntityDictionary dict;
    bool have_header = false;
    for_each_jsonl(path, [&](const Json& j, std::size_t line) {
        if (!have_header) {
            if (j.value("format", "") != "archface-dictionary") {
                throw ParseError(path.string() + ":" + std::to_string(line) + ": not a dictionary file");
            }
            dict.embedding_dim = j.at("embedding_dim").get<std::size_t>();
            dict.config = j.value("config", Json::object());
            have_header = true;
            return;
        }
        DictionaryEntry entry{j.value("display_name", j.at("entity_id").get<std::string>()),
                              embedding_from(j.at("embedding")), j.value("sample_count", std::size_t{1})};
        require_same_dim(dict.embedding_dim, entry.mean.dim(), "dictionary entry");
        if (entry.sample_count < 1) throw ParseError(path.string() + ":" + std::to_string(line) + ": sample_count < 1");
        dict.entries.insert_or_assign(j.at("entity_id").get<std::string>(), std::move(entry));
    });
    if (!have_header) throw ParseError(path.string() + ": empty dictionary file");
    return dict;
}

void write_dictionary(const fs::path& path, const EntityDictionary& dictionary) {
    write_file_atomic(path, dictionary_to_jsonl(dictionary));
}

} // namespace archface
