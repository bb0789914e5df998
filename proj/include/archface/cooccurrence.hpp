#pragma once

#include "archface/identification.hpp"

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace archface {

// Unordered entity pair stored as (smaller id, larger id).
using EntityPair = std::pair<std::string, std::string>;
EntityPair entity_pair(const std::string& a, const std::string& b); // ConfigError when a == b

struct OccurrenceCounts {
    std::map<std::string, std::size_t> singles;
    std::map<EntityPair, std::size_t> joints;

    std::size_t joint(const std::string& a, const std::string& b) const;

    // Sums counts from a disjoint set of images.
    OccurrenceCounts& operator+=(const OccurrenceCounts& other);

    // joints{a,b} <= min(singles[a], singles[b]) and a != b for every key.
    bool consistent() const;

    friend bool operator==(const OccurrenceCounts&, const OccurrenceCounts&) = default;
};

// Per image: every recognized entity counts once, every unordered pair of
// distinct recognized entities counts once.
OccurrenceCounts count_occurrences(std::span<const IdentificationResult> results);

struct GraphNode {
    std::string id;
    std::string label;
    std::size_t weight = 0; // images showing the entity

    friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct GraphEdge {
    std::string source;
    std::string target;
    std::size_t weight = 0; // images showing both

    friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

struct RelationGraph {
    std::vector<GraphNode> nodes; // sorted by id
    std::vector<GraphEdge> edges; // sorted by (source, target), source < target

    friend bool operator==(const RelationGraph&, const RelationGraph&) = default;
};

// Nodes for entities seen at least once (labelled via `names`, else the
// id); edges for pairs seen together at least max(1, min_edge_weight) times.
RelationGraph build_graph(const OccurrenceCounts& counts, const std::map<std::string, std::string>& names = {},
                          std::size_t min_edge_weight = 1);

enum class GraphFormat { GraphML, Dot, Json };
GraphFormat parse_graph_format(const std::string& name); // ConfigError on unknown formats

std::string export_graph(const RelationGraph& graph, GraphFormat format);
std::string export_graph(const RelationGraph& graph, const std::string& format);

// Inverse of the JSON export. ParseError on malformed documents.
RelationGraph graph_from_json(const std::string& document);

} // namespace archface
