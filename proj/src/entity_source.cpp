#include "archface/entity_source.hpp"

#include "archface/errors.hpp"
#include "archface/http.hpp"
#include "archface/io.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <mutex>
#include <set>
#include <thread>

namespace archface {

namespace {

const Json* binding(const Json& row, const char* var) {
    const auto it = row.find(var);
    if (it == row.end()) return nullptr;
    if (!it->is_object() || !it->contains("value") || !(*it)["value"].is_string()) {
        throw ParseError(std::string("binding '") + var + "' has no string value");
    }
    return &(*it)["value"];
}

const std::string& required(const Json& row, const char* var) {
    const Json* v = binding(row, var);
    if (!v) throw ParseError(std::string("missing binding '") + var + "'");
    return v->get_ref<const std::string&>();
}

template <typename Int>
Int parse_int(std::string_view text, const char* what) {
    Int value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        throw ParseError(std::string("bad ") + what + " '" + std::string(text) + "'");
    }
    return value;
}

// "1954", "1954-07-17T00:00:00Z" and "-0044-..." all carry a leading year.
int parse_year(const std::string& text) {
    std::size_t end = text.empty() ? 0 : (text[0] == '-' || text[0] == '+' ? 1 : 0);
    while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) ++end;
    std::string_view digits(text.data(), end);
    if (!digits.empty() && digits.front() == '+') digits.remove_prefix(1);
    return parse_int<int>(digits, "year");
}

// Wikidata returns full entity URIs; keep the trailing identifier.
std::string entity_id_from(const std::string& value) {
    const auto slash = value.find_last_of('/');
    return slash == std::string::npos ? value : value.substr(slash + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::mutex& endpoint_lock(const std::string& endpoint) {
    static std::mutex registry_mutex;
    static std::map<std::string, std::mutex> locks;
    std::lock_guard guard(registry_mutex);
    return locks[endpoint];
}

void replace_all(std::string& text, const std::string& from, const std::string& to) {
    for (std::size_t pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
        text.replace(pos, from.size(), to);
    }
}

Json to_json(const EntityRecord& r) {
    return Json{{"entity_id", r.entity_id},
                {"display_name", r.display_name},
                {"page_views", r.page_views},
                {"birth_year", r.birth_year}};
}

} // namespace

void EntityQuery::validate() const {
    if (limit == 0) throw ConfigError("entity query limit must be at least 1");
    if (occupation.empty()) throw ConfigError("entity query needs an occupation");
}

std::vector<SparqlRow> parse_sparql_results(const std::string& body) {
    Json doc;
    try {
        doc = Json::parse(body);
    } catch (const Json::exception& e) {
        throw ParseError(std::string("SPARQL response is not JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("results") || !doc["results"].is_object() ||
        !doc["results"].contains("bindings") || !doc["results"]["bindings"].is_array()) {
        throw ParseError("SPARQL response lacks results.bindings");
    }
    std::vector<SparqlRow> rows;
    for (const auto& row : doc["results"]["bindings"]) {
        if (!row.is_object()) throw ParseError("SPARQL binding row is not an object");
        SparqlRow out;
        out.record.entity_id = entity_id_from(required(row, "item"));
        out.record.display_name = required(row, "itemLabel");
        out.record.birth_year = parse_year(required(row, "birthYear"));
        out.record.page_views = parse_int<std::uint64_t>(required(row, "views"), "page view count");
        if (const Json* occ = binding(row, "occupation")) out.occupation = occ->get<std::string>();
        if (const Json* year = binding(row, "viewsYear")) out.views_year = parse_year(year->get<std::string>());
        if (out.record.entity_id.empty()) throw ParseError("empty entity id");
        rows.push_back(std::move(out));
    }
    return rows;
}

std::string occupation_item_id(const std::string& occupation) {
    static const std::map<std::string, std::string> known{
        {"politician", "Q82955"}, {"politicians", "Q82955"},
        {"actor", "Q33999"},      {"actors", "Q33999"},
        {"athlete", "Q2066131"},  {"musician", "Q639669"},
    };
    const std::string key = lower(occupation);
    if (const auto it = known.find(key); it != known.end()) return it->second;
    if (occupation.size() > 1 && (occupation[0] == 'Q' || occupation[0] == 'q') &&
        std::all_of(occupation.begin() + 1, occupation.end(), [](unsigned char c) { return std::isdigit(c); })) {
        return "Q" + occupation.substr(1);
    }
    throw ConfigError("unknown occupation '" + occupation + "'; pass a knowledge-base item id instead");
}

std::vector<EntityRecord> select_entities(const std::vector<SparqlRow>& rows, const EntityQuery& query) {
    query.validate();
    const std::string wanted = lower(query.occupation);
    std::string wanted_id;
    try {
        wanted_id = occupation_item_id(query.occupation);
    } catch (const ConfigError&) {
    }
    std::vector<EntityRecord> kept;
    for (const auto& row : rows) {
        if (row.record.birth_year <= query.min_birth_year) continue;
        if (!row.occupation.empty()) {
            const std::string occ = lower(row.occupation);
            const std::string occ_id = entity_id_from(row.occupation);
            if (occ != wanted && (wanted_id.empty() || occ_id != wanted_id)) continue;
        }
        if (row.views_year != 0 && row.views_year != query.page_view_year) continue;
        kept.push_back(row.record);
    }
    // An item with several birth dates or occupations comes back once per
    // combination; ranking puts its best row first.
    const std::size_t all = kept.size();
    kept = rank_and_truncate(std::move(kept), all);
    std::set<std::string> seen;
    std::erase_if(kept, [&](const EntityRecord& r) { return !seen.insert(r.entity_id).second; });
    return rank_and_truncate(std::move(kept), query.limit);
}

std::vector<EntityRecord> rank_and_truncate(std::vector<EntityRecord> records, std::size_t limit) {
    std::sort(records.begin(), records.end(), [](const EntityRecord& a, const EntityRecord& b) {
        if (a.page_views != b.page_views) return a.page_views > b.page_views;
        return a.entity_id < b.entity_id;
    });
    if (records.size() > limit) records.resize(limit);
    return records;
}

std::string render_query(const std::string& query_template, const EntityQuery& query,
                         const std::string& language) {
    query.validate();
    std::string text = query_template;
    replace_all(text, "{{occupation}}", query.occupation);
    replace_all(text, "{{occupation_id}}", occupation_item_id(query.occupation));
    replace_all(text, "{{min_birth_year}}", std::to_string(query.min_birth_year));
    replace_all(text, "{{page_view_year}}", std::to_string(query.page_view_year));
    replace_all(text, "{{limit}}", std::to_string(query.limit));
    replace_all(text, "{{language}}", language);
    return text;
}

HttpGet default_http_get() {
    return [](const std::string& url) {
        const auto res = http_get(url, {{"Accept", "application/sparql-results+json"},
                                        {"User-Agent", "archface/0.1 (entity selection)"}});
        if (res.status < 200 || res.status >= 300) {
            throw SourceUnavailableError("GET " + url + " returned HTTP " + std::to_string(res.status));
        }
        return res.body;
    };
}

SparqlClient::SparqlClient(std::string endpoint, RetryPolicy retry, HttpGet get)
    : endpoint_(std::move(endpoint)), retry_(retry), get_(std::move(get)) {
    if (retry_.attempts < 1) throw ConfigError("retry policy needs at least one attempt");
}

std::string SparqlClient::fetch(const std::string& sparql) const {
    const std::string url = endpoint_ + (endpoint_.find('?') == std::string::npos ? "?" : "&") +
                            "format=json&query=" + percent_encode(sparql);
    std::lock_guard one_in_flight(endpoint_lock(endpoint_));
    auto backoff = retry_.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        try {
            return get_(url);
        } catch (const SourceUnavailableError& e) {
            if (attempt >= retry_.attempts) {
                throw SourceUnavailableError(endpoint_ + " unavailable after " + std::to_string(attempt) +
                                             " attempts: " + e.what());
            }
            spdlog::warn("attempt {} against {} failed ({}); retrying in {} ms", attempt, endpoint_,
                         e.what(), backoff.count());
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
}

std::vector<EntityRecord> fetch_entities(const EntityQuery& query, const std::filesystem::path& fixture) {
    query.validate();
    return select_entities(parse_sparql_results(read_text_file(fixture)), query);
}

std::vector<EntityRecord> fetch_entities(const EntityQuery& query, const SparqlClient& client,
                                         const std::string& query_template) {
    query.validate();
    return select_entities(parse_sparql_results(client.fetch(render_query(query_template, query))), query);
}

std::string entity_to_jsonl(const EntityRecord& record) { return to_json(record).dump(); }

std::vector<EntityRecord> read_entities_jsonl(const std::filesystem::path& path) {
    std::vector<EntityRecord> out;
    for_each_jsonl(path, [&](const Json& j, std::size_t) {
        out.push_back({j.at("entity_id").get<std::string>(), j.value("display_name", j.at("entity_id").get<std::string>()),
                       j.value("page_views", std::uint64_t{0}), j.value("birth_year", 0)});
    });
    return out;
}

void write_entities_jsonl(const std::filesystem::path& path, const std::vector<EntityRecord>& records) {
    std::string text;
    for (const auto& r : records) text += entity_to_jsonl(r) + "\n";
    write_file_atomic(path, text);
}

} // namespace archface
