#include "archface/workspace.hpp"

#include "archface/errors.hpp"
#include "archface/io.hpp"

#include <algorithm>

namespace archface {

namespace fs = std::filesystem;

void check_entity_id(const std::string& entity_id) {
    if (entity_id.empty() || entity_id.front() == '.' ||
        entity_id.find_first_of("/\\\0", 0, 3) != std::string::npos) {
        throw ConfigError("unusable entity id '" + entity_id + "'");
    }
}

fs::path Workspace::sample_path(const std::string& entity_id) const {
    check_entity_id(entity_id);
    return samples_dir() / (entity_id + ".jsonl");
}

bool Workspace::exists() const {
    std::error_code ec;
    return fs::is_directory(root_, ec);
}

void Workspace::create() const { fs::create_directories(samples_dir()); }

std::vector<std::string> Workspace::entity_ids() const {
    std::vector<std::string> ids;
    std::error_code ec;
    if (!fs::is_directory(samples_dir(), ec)) return ids;
    for (const auto& entry : fs::directory_iterator(samples_dir())) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") ids.push_back(entry.path().stem().string());
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

bool Workspace::has_entity(const std::string& entity_id) const {
    try {
        std::error_code ec;
        return fs::is_regular_file(sample_path(entity_id), ec);
    } catch (const ConfigError&) {
        return false;
    }
}

SampleSet Workspace::load(const std::string& entity_id) const {
    if (!has_entity(entity_id)) throw NotFoundError("no sample set for entity " + entity_id);
    return sample_set_from_jsonl(sample_path(entity_id));
}

void Workspace::save(const SampleSet& set) const { write_sample_set(sample_path(set.entity_id), set); }

SessionSettings Workspace::session() const {
    SessionSettings s;
    std::error_code ec;
    if (!fs::is_regular_file(session_path(), ec)) return s;
    try {
        const Json j = Json::parse(read_text_file(session_path()));
        s.lambda1 = j.value("lambda1", s.lambda1);
        if (j.contains("strategy")) s.strategy = parse_strategy(j["strategy"].get<std::string>());
    } catch (const Json::exception& e) {
        throw ParseError(session_path().string() + ": " + e.what());
    }
    return s;
}

void Workspace::save_session(const SessionSettings& settings) const {
    write_file_atomic(session_path(),
                      dump_pretty(Json{{"lambda1", settings.lambda1}, {"strategy", to_string(settings.strategy)}}));
}

std::map<std::string, std::string> Workspace::names() const {
    std::map<std::string, std::string> out;
    std::error_code ec;
    if (fs::is_regular_file(dictionary_path(), ec)) {
        for (const auto& [id, entry] : read_dictionary(dictionary_path()).entries) out[id] = entry.display_name;
    }
    for (const auto& id : entity_ids()) {
        if (out.contains(id)) continue;
        out[id] = load(id).display_name;
    }
    return out;
}

} // namespace archface
