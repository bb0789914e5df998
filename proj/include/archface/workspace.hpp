#pragma once

#include "archface/calibration.hpp"
#include "archface/dictionary.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace archface {

struct SessionSettings {
    double lambda1 = kDefaultLambda1;
    TargetStrategy strategy = TargetStrategy::Reference;
};

// Directory layout shared by the CLI and the curation service:
//
//   <root>/session.json          current lambda1 and strategy
//   <root>/samples/<id>.jsonl    one sample-set manifest per entity
//   <root>/crops/...             face crops referenced by sample faces
//   <root>/dictionary.jsonl      latest built dictionary
//   <root>/results.jsonl         latest identification run
//   <root>/ui/                   static curation UI bundle
//
// Every write goes through write_file_atomic.
class Workspace {
public:
    explicit Workspace(std::filesystem::path root) : root_(std::move(root)) {}

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path samples_dir() const { return root_ / "samples"; }
    std::filesystem::path crops_dir() const { return root_ / "crops"; }
    std::filesystem::path ui_dir() const { return root_ / "ui"; }
    std::filesystem::path session_path() const { return root_ / "session.json"; }
    std::filesystem::path dictionary_path() const { return root_ / "dictionary.jsonl"; }
    std::filesystem::path results_path() const { return root_ / "results.jsonl"; }
    std::filesystem::path sample_path(const std::string& entity_id) const;

    bool exists() const;
    void create() const;

    std::vector<std::string> entity_ids() const;
    bool has_entity(const std::string& entity_id) const;
    SampleSet load(const std::string& entity_id) const; // NotFoundError when absent
    void save(const SampleSet& set) const;

    SessionSettings session() const; // defaults when session.json is absent
    void save_session(const SessionSettings& settings) const;

    // Display names: dictionary entries first, sample sets second.
    std::map<std::string, std::string> names() const;

private:
    std::filesystem::path root_;
};

// ConfigError unless the id is usable as a file name.
void check_entity_id(const std::string& entity_id);

} // namespace archface
