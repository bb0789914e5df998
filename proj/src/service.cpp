#include "archface/service.hpp"

#include "archface/cooccurrence.hpp"
#include "archface/errors.hpp"
#include "archface/identification.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>

namespace archface {

namespace fs = std::filesystem;

namespace {

Json entity_row(const SampleSet& set) {
    return Json{{"entity_id", set.entity_id},
                {"display_name", set.display_name},
                {"sample_count", set.faces.size()},
                {"reference_set", set.reference_face_id.has_value()}};
}

void send_json(httplib::Response& res, const Json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, Json{{"error", message}}, status);
}

bool is_loopback(const std::string& address) {
    return address == "127.0.0.1" || address == "localhost" || address == "::1";
}

} // namespace

Json entities_listing(const Workspace& ws) {
    Json rows = Json::array();
    for (const auto& id : ws.entity_ids()) rows.push_back(entity_row(ws.load(id)));
    return rows;
}

Json faces_listing(const Workspace& ws, const std::string& entity_id) {
    const SampleSet set = ws.load(entity_id);
    Json rows = Json::array();
    if (set.faces.empty()) return rows;
    TargetStrategy strategy = ws.session().strategy;
    if (strategy == TargetStrategy::Reference && !set.reference_face_id) strategy = TargetStrategy::Mean;
    const FaceEmbedding target = select_target(set, strategy);

    std::vector<std::pair<double, const SampleFace*>> scored;
    for (const auto& f : set.faces) scored.emplace_back(cosine_similarity(f.embedding, target), &f);
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second->face_id < b.second->face_id;
    });
    for (const auto& [sim, face] : scored) {
        rows.push_back({{"face_id", face->face_id},
                        {"crop_url", face->crop ? Json("/crops/" + *face->crop) : Json(nullptr)},
                        {"similarity", sim}});
    }
    return rows;
}

Json update_reference(const Workspace& ws, const std::string& entity_id, const std::string& face_id) {
    SampleSet updated = set_reference(ws.load(entity_id), face_id);
    ws.save(updated);
    return entity_row(updated);
}

Json filter_preview(const SampleSet& set, TargetStrategy strategy, double lambda1) {
    const FilterReport report = cleanse(set, strategy, lambda1);
    Json body = filter_report_json(report);
    const bool annotated = !set.faces.empty() && std::all_of(set.faces.begin(), set.faces.end(),
                                                             [](const SampleFace& f) { return f.ground_truth.has_value(); });
    if (annotated) body["metrics"] = filter_metrics_json(evaluate_filtering(report, set));
    return body;
}

std::string graph_document(const Workspace& ws, std::size_t min_edge_weight) {
    std::error_code ec;
    if (!fs::is_regular_file(ws.results_path(), ec)) throw NotFoundError("no identification run in the workspace");
    const auto results = read_results(ws.results_path());
    return export_graph(build_graph(count_occurrences(results), ws.names(), min_edge_weight), GraphFormat::Json);
}

CurationService::CurationService(Workspace workspace, ServiceOptions options)
    : workspace_(std::move(workspace)), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
    if (!is_loopback(options_.bind_address)) {
        spdlog::warn("binding the curation service to {}: it has no authentication", options_.bind_address);
    }
    install_routes();
}

CurationService::~CurationService() { stop(); }

std::mutex& CurationService::entity_lock(const std::string& entity_id) {
    std::lock_guard guard(locks_mutex_);
    return entity_locks_[entity_id];
}

void CurationService::install_routes() {
    auto& svr = *server_;

    // Maps library failures to status codes; 409 while no workspace exists.
    auto guarded = [this](auto handler) {
        return [this, handler](const httplib::Request& req, httplib::Response& res) {
            if (!workspace_.exists()) {
                send_error(res, 409, "workspace " + workspace_.root().string() +
                                         " does not exist; create it with `archface gather` or pass --workspace");
                return;
            }
            try {
                handler(req, res);
            } catch (const NotFoundError& e) {
                send_error(res, 404, e.what());
            } catch (const MissingReferenceError& e) {
                send_error(res, 422, e.what());
            } catch (const ConfigError& e) {
                send_error(res, 400, e.what());
            } catch (const Json::exception& e) {
                send_error(res, 400, std::string("bad request body: ") + e.what());
            } catch (const std::exception& e) {
                send_error(res, 500, e.what());
            }
        };
    };

    svr.Get("/api/entities", guarded([this](const httplib::Request&, httplib::Response& res) {
                send_json(res, entities_listing(workspace_));
            }));

    svr.Get(R"(/api/entities/([^/]+)/faces)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                send_json(res, faces_listing(workspace_, req.matches[1]));
            }));

    svr.Post(R"(/api/entities/([^/]+)/reference)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string entity_id = req.matches[1];
                 const Json body = Json::parse(req.body);
                 const std::string face_id = body.at("face_id").get<std::string>();
                 std::lock_guard lock(entity_lock(entity_id));
                 send_json(res, update_reference(workspace_, entity_id, face_id));
             }));

    svr.Post(R"(/api/entities/([^/]+)/filter-preview)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string entity_id = req.matches[1];
                 const SessionSettings session = workspace_.session();
                 const Json body = req.body.empty() ? Json::object() : Json::parse(req.body);
                 const TargetStrategy strategy =
                     body.contains("strategy") ? parse_strategy(body["strategy"].get<std::string>()) : session.strategy;
                 const double lambda1 = body.value("lambda1", session.lambda1);
                 SampleSet set;
                 {
                     std::lock_guard lock(entity_lock(entity_id));
                     set = workspace_.load(entity_id);
                 }
                 send_json(res, filter_preview(set, strategy, lambda1));
             }));

    svr.Get("/api/graph", guarded([this](const httplib::Request&, httplib::Response& res) {
                res.set_content(graph_document(workspace_), "application/json");
            }));

    std::error_code ec;
    if (fs::is_directory(workspace_.crops_dir(), ec)) svr.set_mount_point("/crops", workspace_.crops_dir().string());
    if (fs::is_directory(workspace_.ui_dir(), ec)) svr.set_mount_point("/", workspace_.ui_dir().string());
}

int CurationService::bind() {
    if (options_.port == 0) {
        port_ = server_->bind_to_any_port(options_.bind_address);
    } else {
        port_ = server_->bind_to_port(options_.bind_address, options_.port) ? options_.port : -1;
    }
    if (port_ < 0) throw ConfigError("cannot bind " + options_.bind_address + ":" + std::to_string(options_.port));
    return port_;
}

int CurationService::start() {
    bind();
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
}

void CurationService::run() {
    bind();
    spdlog::info("serving {} on http://{}:{}", workspace_.root().string(), options_.bind_address, port_);
    server_->listen_after_bind();
}

void CurationService::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

} // namespace archface
