#pragma once

#include "archface/io.hpp"
#include "archface/workspace.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace archface {

// Payload builders behind each endpoint. The HTTP layer only parses
// requests, calls one of these and serializes the result.

// [{entity_id, display_name, sample_count, reference_set}] ordered by id.
Json entities_listing(const Workspace& ws);

// [{face_id, crop_url, similarity}] sorted by similarity descending, then
// face_id. Similarity is against select_target under the session strategy;
// with the reference strategy and no reference chosen yet, the mean target
// is used so the analyst has something to choose from.
Json faces_listing(const Workspace& ws, const std::string& entity_id);

// set_reference + persist. Returns the entities_listing row for the entity.
Json update_reference(const Workspace& ws, const std::string& entity_id, const std::string& face_id);

// filter_report_json, plus "metrics" (filter_metrics_json) when every face
// carries a ground-truth annotation. Nothing is persisted.
Json filter_preview(const SampleSet& set, TargetStrategy strategy, double lambda1);

// JSON graph export of the workspace's results file; NotFoundError when
// no identification run exists.
std::string graph_document(const Workspace& ws, std::size_t min_edge_weight = 1);

struct ServiceOptions {
    std::string bind_address = "127.0.0.1";
    int port = 8080; // 0 picks a free port
};

class CurationService {
public:
    CurationService(Workspace workspace, ServiceOptions options);
    ~CurationService();

    CurationService(const CurationService&) = delete;
    CurationService& operator=(const CurationService&) = delete;

    // Binds and serves on a background thread; returns the bound port.
    int start();
    // Binds and serves on the calling thread until stop().
    void run();
    void stop();

    int port() const { return port_; }

private:
    void install_routes();
    int bind();
    std::mutex& entity_lock(const std::string& entity_id);

    Workspace workspace_;
    ServiceOptions options_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
    std::mutex locks_mutex_;
    std::map<std::string, std::mutex> entity_locks_;
};

} // namespace archface
