#include "archface/calibration.hpp"
#include "archface/cooccurrence.hpp"
#include "archface/dictionary.hpp"
#include "archface/entity_source.hpp"
#include "archface/errors.hpp"
#include "archface/face_provider.hpp"
#include "archface/http.hpp"
#include "archface/identification.hpp"
#include "archface/ingestion.hpp"
#include "archface/io.hpp"
#include "archface/service.hpp"
#include "archface/synthetic.hpp"
#include "archface/workspace.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#ifndef ARCHFACE_DEFAULT_TEMPLATE
#define ARCHFACE_DEFAULT_TEMPLATE "config/wikidata_persons.rq"
#endif

namespace fs = std::filesystem;
using namespace archface;

namespace {

constexpr const char* kWikidataEndpoint = "https://query.wikidata.org/sparql";

std::set<std::string> split_list(const std::string& text) {
    std::set<std::string> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        out.insert(item.substr(b, item.find_last_not_of(" \t") - b + 1));
    }
    return out;
}

void emit(const std::string& text, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
    } else {
        write_file_atomic(out, text);
        spdlog::info("wrote {}", out);
    }
}

struct ProviderOptions {
    std::string kind = "synthetic";
    std::string script;
    std::string command;
    std::size_t processes = 1;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--provider", kind, "Face provider")->check(CLI::IsMember({"synthetic", "external"}));
        cmd->add_option("--script", script, "Synthetic provider script (JSON)");
        cmd->add_option("--provider-cmd", command, "Detector/embedder command for the external provider");
        cmd->add_option("--processes", processes, "Concurrent external provider processes")->check(CLI::PositiveNumber);
    }

    std::unique_ptr<FaceProvider> make() const {
        if (kind == "synthetic") {
            if (script.empty()) throw ConfigError("--provider synthetic needs --script");
            return std::make_unique<SyntheticProvider>(SyntheticProvider::from_file(script));
        }
        if (command.empty()) throw ConfigError("--provider external needs --provider-cmd");
        return std::make_unique<ExternalProcessProvider>(command, processes);
    }
};

// Lambda1/strategy overrides on top of the workspace session.
struct FilterOptions {
    std::string strategy;
    std::optional<double> lambda1;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--strategy", strategy, "Target strategy (default: session)")
            ->check(CLI::IsMember({"mean", "reference"}));
        cmd->add_option("--lambda1", lambda1, "Cleansing threshold (default: session)");
    }

    SessionSettings resolve(const Workspace& ws) const {
        SessionSettings s = ws.session();
        if (!strategy.empty()) s.strategy = parse_strategy(strategy);
        if (lambda1) s.lambda1 = *lambda1;
        return s;
    }
};

Workspace open_workspace(const std::string& root) {
    Workspace ws(root);
    if (!ws.exists()) throw ConfigError("workspace " + root + " does not exist; run `archface gather` first");
    return ws;
}

std::vector<std::string> selected_entities(const Workspace& ws, const std::string& entity) {
    if (!entity.empty()) return {entity};
    return ws.entity_ids();
}

// Copies the source image next to the workspace so the curation UI can
// show it; no decoding happens here, so the "crop" is the whole image.
void attach_crops(const Workspace& ws, SampleSet& set) {
    for (auto& face : set.faces) {
        std::error_code ec;
        const fs::path source(face.source_image);
        if (!fs::is_regular_file(source, ec)) continue;
        const fs::path rel = fs::path(set.entity_id) / source.filename();
        const fs::path dest = ws.crops_dir() / rel;
        if (!fs::exists(dest, ec)) {
            fs::create_directories(dest.parent_path());
            fs::copy_file(source, dest, fs::copy_options::skip_existing, ec);
            if (ec) continue;
        }
        face.crop = rel.generic_string();
    }
}

std::string format_fixed(double v, int digits = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"archface: identify people in archived web images and relate them by co-occurrence"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    // entities
    auto* entities = app.add_subcommand("entities", "Select persons of interest from the knowledge base");
    EntityQuery query;
    query.occupation = "politician";
    std::string source, template_path = ARCHFACE_DEFAULT_TEMPLATE, entities_out, language = "de";
    bool live = false;
    entities->add_option("--occupation", query.occupation, "Occupation name or item id");
    entities->add_option("--views-year", query.page_view_year, "Year of the page-view ranking");
    entities->add_option("--limit", query.limit, "Number of entities");
    entities->add_option("--min-birth-year", query.min_birth_year, "Keep persons born after this year");
    entities->add_option("--source", source, "Recorded response (default) or endpoint URL with --live");
    entities->add_flag("--live", live, "Query the endpoint instead of a recorded response");
    entities->add_option("--template", template_path, "SPARQL query template")->check(CLI::ExistingFile);
    entities->add_option("--language", language, "Wikipedia language edition");
    entities->add_option("--out", entities_out, "Output entities file (JSONL); stdout by default");

    // gather
    auto* gather = app.add_subcommand("gather", "Collect sample faces per entity into a workspace");
    std::string gather_entities, images_dir, url_list, cache_dir, workspace_root = "workspace";
    std::size_t k = kDefaultSampleBudget;
    ProviderOptions gather_provider;
    gather->add_option("--entities", gather_entities, "Entities file (JSONL)")->required()->check(CLI::ExistingFile);
    auto* dir_opt = gather->add_option("--images-dir", images_dir, "Sample images under <dir>/<entity_id>/");
    auto* list_opt = gather->add_option("--url-list", url_list, "Lines of `<entity_id> <url>`");
    dir_opt->excludes(list_opt);
    gather->add_option("--cache", cache_dir, "Download cache for --url-list (default <workspace>/downloads)");
    gather->add_option("--k", k, "Sample images per entity")->check(CLI::PositiveNumber);
    gather->add_option("--workspace", workspace_root, "Workspace directory");
    gather_provider.add_to(gather);

    // filter
    auto* filter = app.add_subcommand("filter", "Preview cleansing of sample sets");
    std::string filter_entity;
    bool filter_save = false;
    FilterOptions filter_opts;
    filter->add_option("--workspace", workspace_root, "Workspace directory");
    filter->add_option("--entity", filter_entity, "Only this entity");
    filter->add_flag("--save", filter_save, "Store strategy and lambda1 as the session defaults");
    filter_opts.add_to(filter);

    // set-reference
    auto* set_ref = app.add_subcommand("set-reference", "Choose the reference face of an entity");
    std::string ref_entity, ref_face;
    set_ref->add_option("--workspace", workspace_root, "Workspace directory");
    set_ref->add_option("--entity", ref_entity, "Entity id")->required();
    set_ref->add_option("--face", ref_face, "Face id")->required();

    // build-dict
    auto* build = app.add_subcommand("build-dict", "Cleanse every sample set and build the entity dictionary");
    std::string dict_out;
    FilterOptions build_opts;
    build->add_option("--workspace", workspace_root, "Workspace directory");
    build->add_option("--out", dict_out, "Dictionary file (default <workspace>/dictionary.jsonl)");
    build_opts.add_to(build);

    // eval-filter
    auto* eval = app.add_subcommand("eval-filter", "Precision/recall/F1 of the cleansing strategies");
    std::string annotations;
    std::optional<double> eval_lambda1;
    std::string eval_entity;
    eval->add_option("--workspace", workspace_root, "Workspace directory");
    eval->add_option("--annotations", annotations, "Lines of {face_id, ground_truth}")->check(CLI::ExistingFile);
    eval->add_option("--lambda1", eval_lambda1, "Cleansing threshold (default: session)");
    eval->add_option("--entity", eval_entity, "Only this entity");

    // calibrate
    auto* calibrate = app.add_subcommand("calibrate", "k-fold threshold calibration on verification pairs");
    std::string pairs_path, embeddings_path, calib_json;
    std::size_t folds = 10;
    std::uint64_t calib_seed = 0;
    calibrate->add_option("--pairs", pairs_path, "Lines of {id_a, id_b, same_person}")->required()->check(CLI::ExistingFile);
    calibrate->add_option("--embeddings", embeddings_path, "Embedding manifest")->required()->check(CLI::ExistingFile);
    calibrate->add_option("--folds", folds, "Number of folds");
    calibrate->add_option("--seed", calib_seed, "Shuffle seed");
    calibrate->add_option("--json", calib_json, "Also write the result as JSON to this file");

    // identify
    auto* identify = app.add_subcommand("identify", "Identify dictionary entities in an archive corpus");
    std::string manifest_path, domains, formats = "jpeg,png", from, to, dictionary_path, results_out, obs_out;
    std::optional<int> year;
    double lambda2 = kDefaultLambda2;
    std::size_t workers = 4;
    ProviderOptions identify_provider;
    identify->add_option("--manifest", manifest_path, "Corpus manifest")->required()->check(CLI::ExistingFile);
    identify->add_option("--domains", domains, "Comma-separated registrable domains")->required();
    identify->add_option("--formats", formats, "Comma-separated formats or MIME types");
    auto* year_opt = identify->add_option("--year", year, "Capture year");
    identify->add_option("--from", from, "First capture timestamp (YYYYMMDDhhmmss)")->excludes(year_opt);
    identify->add_option("--to", to, "Last capture timestamp (YYYYMMDDhhmmss)")->excludes(year_opt);
    identify->add_option("--dictionary", dictionary_path, "Dictionary file (default <workspace>/dictionary.jsonl)");
    identify->add_option("--workspace", workspace_root, "Workspace directory");
    identify->add_option("--lambda2", lambda2, "Identification threshold");
    identify->add_option("--workers", workers, "Concurrent images")->check(CLI::PositiveNumber);
    identify->add_option("--out", results_out, "Results file (default <workspace>/results.jsonl)");
    identify->add_option("--observations-out", obs_out, "Write every detected face to this embedding manifest");
    identify_provider.add_to(identify);

    // graph
    auto* graph = app.add_subcommand("graph", "Build the co-occurrence graph of an identification run");
    std::string graph_results, graph_format = "graphml", graph_out, graph_dict;
    std::size_t min_edge_weight = 1;
    graph->add_option("--results", graph_results, "Results file")->required()->check(CLI::ExistingFile);
    graph->add_option("--format", graph_format, "graphml, dot or json")
        ->check(CLI::IsMember({"graphml", "dot", "json"}));
    graph->add_option("--min-edge-weight", min_edge_weight, "Drop edges seen fewer times");
    graph->add_option("--out", graph_out, "Output file; stdout by default");
    graph->add_option("--dictionary", graph_dict, "Dictionary supplying node labels")->check(CLI::ExistingFile);

    // serve
    auto* serve = app.add_subcommand("serve", "Run the curation service");
    ServiceOptions service_opts;
    serve->add_option("--workspace", workspace_root, "Workspace directory");
    serve->add_option("--port", service_opts.port, "Port (0 picks a free one)");
    serve->add_option("--bind", service_opts.bind_address, "Bind address");

    // demo
    auto* demo = app.add_subcommand("demo", "Write a synthetic demo corpus");
    std::string demo_out = "demo";
    std::uint64_t demo_seed = 7;
    demo->add_option("--out", demo_out, "Output directory");
    demo->add_option("--seed", demo_seed, "Seed");

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

    try {
        if (*entities) {
            std::vector<EntityRecord> records;
            if (live) {
                SparqlClient client(source.empty() ? kWikidataEndpoint : source);
                const std::string sparql = render_query(read_text_file(template_path), query, language);
                records = select_entities(parse_sparql_results(client.fetch(sparql)), query);
            } else {
                if (source.empty()) throw ConfigError("--source <recorded response> is required without --live");
                if (source.starts_with("http://") || source.starts_with("https://")) {
                    throw ConfigError("--source is a URL; pass --live to query it");
                }
                records = fetch_entities(query, fs::path(source));
            }
            std::string text;
            for (const auto& r : records) text += entity_to_jsonl(r) + "\n";
            emit(text, entities_out);
            spdlog::info("{} entities selected", records.size());
        } else if (*gather) {
            Workspace ws(workspace_root);
            ws.create();
            std::unique_ptr<SampleImageProvider> images;
            if (!images_dir.empty()) {
                images = std::make_unique<DirectoryImageProvider>(images_dir);
            } else if (!url_list.empty()) {
                images = std::make_unique<UrlListImageProvider>(
                    url_list, cache_dir.empty() ? ws.root() / "downloads" : fs::path(cache_dir),
                    [](const std::string& url) {
                        const auto res = http_get(url);
                        if (res.status < 200 || res.status >= 300) {
                            throw SourceUnavailableError("GET " + url + " returned HTTP " + std::to_string(res.status));
                        }
                        return res.body;
                    });
            } else {
                throw ConfigError("gather needs --images-dir or --url-list");
            }
            auto provider = gather_provider.make();
            std::size_t gathered = 0;
            for (const auto& entity : read_entities_jsonl(gather_entities)) {
                try {
                    SampleSet set = gather_samples(entity, *images, *provider, k);
                    if (ws.has_entity(entity.entity_id)) {
                        // Keep an earlier reference choice if the face is still there.
                        const auto previous = ws.load(entity.entity_id).reference_face_id;
                        if (previous && set.find(*previous)) set.reference_face_id = previous;
                    }
                    attach_crops(ws, set);
                    ws.save(set);
                    ++gathered;
                    spdlog::info("{} ({}): {} faces", entity.entity_id, entity.display_name, set.faces.size());
                } catch (const EmptySampleSetError& e) {
                    spdlog::warn("{}", e.what());
                }
            }
            spdlog::info("{} sample sets in {}", gathered, ws.root().string());
        } else if (*filter) {
            const Workspace ws = open_workspace(workspace_root);
            const SessionSettings s = filter_opts.resolve(ws);
            const auto ids = selected_entities(ws, filter_entity);
            for (const auto& id : ids) {
                Json preview = filter_preview(ws.load(id), s.strategy, s.lambda1);
                if (filter_entity.empty()) preview = Json{{"entity_id", id}, {"preview", preview}};
                std::cout << preview.dump() << '\n';
            }
            if (filter_save) ws.save_session(s);
        } else if (*set_ref) {
            const Workspace ws = open_workspace(workspace_root);
            std::cout << update_reference(ws, ref_entity, ref_face).dump() << '\n';
        } else if (*build) {
            const Workspace ws = open_workspace(workspace_root);
            const SessionSettings s = build_opts.resolve(ws);
            std::vector<std::pair<SampleSet, FilterReport>> filtered;
            for (const auto& id : ws.entity_ids()) {
                SampleSet set = ws.load(id);
                FilterReport report = cleanse(set, s.strategy, s.lambda1);
                spdlog::info("{}: kept {} of {}", id, report.kept.size(), set.faces.size());
                filtered.emplace_back(std::move(set), std::move(report));
            }
            DictionaryBuild result = build_dictionary(filtered);
            for (const auto& id : result.dropped) spdlog::warn("{} dropped: no face survived cleansing", id);
            result.dictionary.config = Json{{"lambda1", s.lambda1}, {"strategy", to_string(s.strategy)}};
            const fs::path out = dict_out.empty() ? ws.dictionary_path() : fs::path(dict_out);
            write_dictionary(out, result.dictionary);
            spdlog::info("dictionary with {} entities written to {}", result.dictionary.entries.size(), out.string());
        } else if (*eval) {
            const Workspace ws = open_workspace(workspace_root);
            const double l1 = eval_lambda1.value_or(ws.session().lambda1);
            const auto labels = annotations.empty() ? std::map<std::string, bool>{} : read_annotations(annotations);
            std::cout << "entity\tstrategy\tprecision\trecall\tf1\tkept\n";
            for (const auto& id : selected_entities(ws, eval_entity)) {
                SampleSet set = ws.load(id);
                apply_annotations(set, labels);
                std::vector<std::pair<std::string, FilterReport>> rows{{"none", keep_all(set)},
                                                                        {"mean", cleanse(set, TargetStrategy::Mean, l1)}};
                if (set.reference_face_id) rows.emplace_back("reference", cleanse(set, TargetStrategy::Reference, l1));
                for (const auto& [name, report] : rows) {
                    const FilterMetrics m = evaluate_filtering(report, set);
                    std::cout << id << '\t' << name << '\t' << format_fixed(m.precision) << '\t'
                              << format_fixed(m.recall) << '\t' << format_fixed(m.f1) << '\t' << m.kept
                              << (m.degenerate ? "\t(degenerate)" : "") << '\n';
                }
            }
        } else if (*calibrate) {
            const EmbeddingManifest manifest = read_embedding_manifest(embeddings_path);
            std::map<std::string, std::size_t> index;
            for (std::size_t i = 0; i < manifest.ids.size(); ++i) index.emplace(manifest.ids[i], i);
            std::vector<VerificationPair> pairs;
            for_each_jsonl(pairs_path, [&](const Json& j, std::size_t line) {
                const auto a = index.find(j.at("id_a").get<std::string>());
                const auto b = index.find(j.at("id_b").get<std::string>());
                if (a == index.end() || b == index.end()) {
                    throw NotFoundError(pairs_path + ":" + std::to_string(line) + ": unknown embedding id");
                }
                pairs.push_back({manifest.embeddings[a->second], manifest.embeddings[b->second],
                                 j.at("same_person").get<bool>()});
            });
            const CalibrationResult r = kfold_calibrate(pairs, folds, calib_seed);
            std::cout << "pairs            " << pairs.size() << '\n'
                      << "folds            " << r.fold_count << '\n'
                      << "mean threshold   " << format_fixed(r.mean_threshold, 4) << '\n'
                      << "threshold std    " << format_fixed(r.threshold_std, 4) << '\n'
                      << "mean accuracy    " << format_fixed(r.mean_accuracy, 4) << '\n';
            for (std::size_t f = 0; f < r.fold_count; ++f) {
                std::cout << "fold " << f << "           threshold " << format_fixed(r.per_fold_thresholds[f], 4)
                          << "  accuracy " << format_fixed(r.per_fold_accuracies[f], 4) << '\n';
            }
            const Json j{{"mean_threshold", r.mean_threshold},
                         {"threshold_std", r.threshold_std},
                         {"mean_accuracy", r.mean_accuracy},
                         {"fold_count", r.fold_count},
                         {"per_fold_thresholds", r.per_fold_thresholds},
                         {"per_fold_accuracies", r.per_fold_accuracies}};
            std::cout << j.dump() << '\n';
            if (!calib_json.empty()) write_file_atomic(calib_json, dump_pretty(j));
        } else if (*identify) {
            const Workspace ws(workspace_root);
            const fs::path dict_file = dictionary_path.empty() ? ws.dictionary_path() : fs::path(dictionary_path);
            const EntityDictionary dictionary = read_dictionary(dict_file);

            std::set<std::string> allowed;
            for (auto d : split_list(domains)) {
                std::transform(d.begin(), d.end(), d.begin(), [](unsigned char c) { return std::tolower(c); });
                allowed.insert(registrable_domain(d));
            }
            SearchSpace space = year ? SearchSpace::for_year(*year, allowed) : SearchSpace{};
            if (!year) {
                space.allowed_domains = allowed;
                if (!from.empty()) space.start = from;
                if (!to.empty()) space.end = to;
            }
            space.allowed_formats.clear();
            for (const auto& f : split_list(formats)) space.allowed_formats.insert(mime_for_format(f));
            space.validate();

            ParsedManifest parsed = parse_manifest(manifest_path);
            for (const auto& r : parsed.rejects) {
                spdlog::warn("{}:{}: {} ({})", manifest_path, r.line_number, r.reason, r.line);
            }
            // Relative locators are relative to the manifest.
            const fs::path base = fs::path(manifest_path).parent_path();
            for (auto& r : parsed.records) {
                if (r.locator.find("://") == std::string::npos && fs::path(r.locator).is_relative()) {
                    r.locator = (base / r.locator).string();
                }
            }
            const auto admitted = apply_constraints(parsed.records, space);
            const auto unique = dedupe(admitted);
            spdlog::info("{} records, {} admitted, {} after de-duplication", parsed.records.size(), admitted.size(),
                         unique.size());

            auto provider = identify_provider.make();
            const CorpusScan scan = scan_corpus(unique, *provider, workers, dictionary.embedding_dim);
            const auto results = identify_corpus(scan.observations, dictionary, lambda2, scan.images);
            const fs::path out = results_out.empty() ? ws.results_path() : fs::path(results_out);
            write_results(out, results);
            if (!obs_out.empty()) write_embedding_manifest(obs_out, dictionary.embedding_dim, scan.observations);
            std::size_t recognized = 0;
            for (const auto& r : results) recognized += r.recognized.size();
            spdlog::info("{} images scanned, {} faces, {} identifications, {} failures; results in {}",
                         scan.images.size(), scan.observations.size(), recognized, scan.failures.size(), out.string());
        } else if (*graph) {
            std::map<std::string, std::string> names;
            if (!graph_dict.empty()) {
                for (const auto& [id, entry] : read_dictionary(graph_dict).entries) names[id] = entry.display_name;
            }
            const auto counts = count_occurrences(read_results(graph_results));
            emit(export_graph(build_graph(counts, names, min_edge_weight), graph_format), graph_out);
        } else if (*serve) {
            CurationService service(Workspace(workspace_root), service_opts);
            service.run();
        } else if (*demo) {
            synthetic::write_demo(demo_out, demo_seed);
            spdlog::info("demo corpus written to {}", demo_out);
        }
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const Json::exception& e) {
        spdlog::error("malformed JSON: {}", e.what());
        return 1;
    } catch (const fs::filesystem_error& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
