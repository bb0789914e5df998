#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace archface {

// Knowledge-base selection of the persons of interest for one domain.
struct EntityQuery {
    std::string occupation;
    int min_birth_year = 1920; // exclusive: born strictly after
    int page_view_year = 2016;
    std::size_t limit = 100;

    // Throws ConfigError on limit == 0 or an empty occupation.
    void validate() const;
};

struct EntityRecord {
    std::string entity_id;
    std::string display_name;
    std::uint64_t page_views = 0;
    int birth_year = 0;

    friend bool operator==(const EntityRecord&, const EntityRecord&) = default;
};

// Parses a SPARQL 1.1 JSON results document. Recognised variables:
//   item (uri or literal, required)   -> entity_id (last path segment)
//   itemLabel (required)              -> display_name
//   birthYear (required)              -> birth_year (year prefix of a date is accepted)
//   views (required)                  -> page_views
//   occupation, viewsYear (optional)  -> used for filtering when present
// Throws ParseError on malformed documents or bindings.
struct SparqlRow {
    EntityRecord record;
    std::string occupation;   // empty when the binding is absent
    int views_year = 0;       // 0 when the binding is absent
};
std::vector<SparqlRow> parse_sparql_results(const std::string& body);

// Rows that satisfy the query: birth year after min_birth_year, matching
// occupation and view year when those bindings were returned. Repeated
// items keep their highest-ranked row. Ranked and truncated to query.limit.
std::vector<EntityRecord> select_entities(const std::vector<SparqlRow>& rows, const EntityQuery& query);

// Sort by page_views descending, entity_id ascending on ties; keep `limit`.
std::vector<EntityRecord> rank_and_truncate(std::vector<EntityRecord> records, std::size_t limit);

// Substitutes {{occupation}}, {{occupation_id}}, {{min_birth_year}},
// {{page_view_year}}, {{limit}} and {{language}} in a query template.
std::string render_query(const std::string& query_template, const EntityQuery& query,
                         const std::string& language = "de");

// Maps a few occupation names to knowledge-base item ids; anything that
// already looks like an item id (Q123) passes through. ConfigError otherwise.
std::string occupation_item_id(const std::string& occupation);

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
};

// One GET of `url`, returning the body. Throws SourceUnavailableError on
// transport failure or non-2xx status.
using HttpGet = std::function<std::string(const std::string& url)>;

HttpGet default_http_get();

class SparqlClient {
public:
    explicit SparqlClient(std::string endpoint, RetryPolicy retry = {}, HttpGet get = default_http_get());

    // Runs the query with retries and exponential backoff; at most one
    // request per endpoint is in flight across all clients in the process.
    std::string fetch(const std::string& sparql) const;

    const std::string& endpoint() const { return endpoint_; }

private:
    std::string endpoint_;
    RetryPolicy retry_;
    HttpGet get_;
};

// Fixture mode: the file holds a stored raw response.
std::vector<EntityRecord> fetch_entities(const EntityQuery& query, const std::filesystem::path& fixture);

// Live mode: renders the template, queries the endpoint, parses the response.
std::vector<EntityRecord> fetch_entities(const EntityQuery& query, const SparqlClient& client,
                                         const std::string& query_template);

std::string entity_to_jsonl(const EntityRecord& record);
std::vector<EntityRecord> read_entities_jsonl(const std::filesystem::path& path);
void write_entities_jsonl(const std::filesystem::path& path, const std::vector<EntityRecord>& records);

} // namespace archface
