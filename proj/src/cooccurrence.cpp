#include "archface/cooccurrence.hpp"

#include "archface/errors.hpp"
#include "archface/io.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace archface {

namespace {

std::string xml_escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string dot_quote(const std::string& text) {
    std::string out = "\"";
    for (char c : text) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out += c;
    }
    return out + "\"";
}

std::string to_graphml(const RelationGraph& g) {
    std::string out =
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\"\n"
        "         xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\"\n"
        "         xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns "
        "http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n"
        "  <key id=\"label\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n"
        "  <key id=\"occurrences\" for=\"node\" attr.name=\"occurrences\" attr.type=\"int\"/>\n"
        "  <key id=\"joint_occurrences\" for=\"edge\" attr.name=\"joint_occurrences\" attr.type=\"int\"/>\n"
        "  <graph id=\"cooccurrence\" edgedefault=\"undirected\">\n";
    for (const auto& n : g.nodes) {
        out += "    <node id=\"" + xml_escape(n.id) + "\">\n";
        out += "      <data key=\"label\">" + xml_escape(n.label) + "</data>\n";
        out += "      <data key=\"occurrences\">" + std::to_string(n.weight) + "</data>\n";
        out += "    </node>\n";
    }
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        const auto& e = g.edges[i];
        out += "    <edge id=\"e" + std::to_string(i) + "\" source=\"" + xml_escape(e.source) + "\" target=\"" +
               xml_escape(e.target) + "\">\n";
        out += "      <data key=\"joint_occurrences\">" + std::to_string(e.weight) + "</data>\n";
        out += "    </edge>\n";
    }
    out += "  </graph>\n</graphml>\n";
    return out;
}

std::string to_dot(const RelationGraph& g) {
    std::string out = "graph cooccurrence {\n";
    for (const auto& n : g.nodes) {
        out += "  " + dot_quote(n.id) + " [label=" + dot_quote(n.label) +
               ", occurrences=" + std::to_string(n.weight) + "];\n";
    }
    for (const auto& e : g.edges) {
        out += "  " + dot_quote(e.source) + " -- " + dot_quote(e.target) + " [weight=" + std::to_string(e.weight) +
               "];\n";
    }
    out += "}\n";
    return out;
}

std::string to_json(const RelationGraph& g) {
    Json nodes = Json::array();
    for (const auto& n : g.nodes) nodes.push_back({{"id", n.id}, {"label", n.label}, {"weight", n.weight}});
    Json edges = Json::array();
    for (const auto& e : g.edges) edges.push_back({{"source", e.source}, {"target", e.target}, {"weight", e.weight}});
    return dump_pretty(Json{{"nodes", nodes}, {"edges", edges}});
}

} // namespace

EntityPair entity_pair(const std::string& a, const std::string& b) {
    if (a == b) throw ConfigError("an entity cannot pair with itself: " + a);
    return a < b ? EntityPair{a, b} : EntityPair{b, a};
}

std::size_t OccurrenceCounts::joint(const std::string& a, const std::string& b) const {
    if (a == b) return 0;
    const auto it = joints.find(entity_pair(a, b));
    return it == joints.end() ? 0 : it->second;
}

OccurrenceCounts& OccurrenceCounts::operator+=(const OccurrenceCounts& other) {
    for (const auto& [id, n] : other.singles) singles[id] += n;
    for (const auto& [pair, n] : other.joints) joints[pair] += n;
    return *this;
}

bool OccurrenceCounts::consistent() const {
    for (const auto& [pair, n] : joints) {
        if (pair.first >= pair.second) return false;
        const auto a = singles.find(pair.first);
        const auto b = singles.find(pair.second);
        if (a == singles.end() || b == singles.end()) return false;
        if (n > std::min(a->second, b->second)) return false;
    }
    return true;
}

OccurrenceCounts count_occurrences(std::span<const IdentificationResult> results) {
    OccurrenceCounts counts;
    for (const auto& r : results) {
        std::set<std::string> present;
        for (const auto& m : r.recognized) present.insert(m.entity_id);
        for (auto a = present.begin(); a != present.end(); ++a) {
            ++counts.singles[*a];
            for (auto b = std::next(a); b != present.end(); ++b) ++counts.joints[{*a, *b}];
        }
    }
    if (!counts.consistent()) throw std::logic_error("occurrence counts violate joints <= min(singles)");
    return counts;
}

RelationGraph build_graph(const OccurrenceCounts& counts, const std::map<std::string, std::string>& names,
                          std::size_t min_edge_weight) {
    RelationGraph g;
    for (const auto& [id, n] : counts.singles) {
        if (n == 0) continue;
        const auto it = names.find(id);
        g.nodes.push_back({id, it == names.end() ? id : it->second, n});
    }
    const std::size_t floor = std::max<std::size_t>(1, min_edge_weight);
    for (const auto& [pair, n] : counts.joints) {
        if (n >= floor) g.edges.push_back({pair.first, pair.second, n});
    }
    return g;
}

GraphFormat parse_graph_format(const std::string& name) {
    if (name == "graphml") return GraphFormat::GraphML;
    if (name == "dot") return GraphFormat::Dot;
    if (name == "json") return GraphFormat::Json;
    throw ConfigError("unsupported graph format '" + name + "' (expected graphml, dot or json)");
}

std::string export_graph(const RelationGraph& graph, GraphFormat format) {
    switch (format) {
    case GraphFormat::GraphML: return to_graphml(graph);
    case GraphFormat::Dot: return to_dot(graph);
    case GraphFormat::Json: return to_json(graph);
    }
    throw ConfigError("unsupported graph format");
}

std::string export_graph(const RelationGraph& graph, const std::string& format) {
    return export_graph(graph, parse_graph_format(format));
}

RelationGraph graph_from_json(const std::string& document) {
    try {
        const Json doc = Json::parse(document);
        RelationGraph g;
        for (const auto& n : doc.at("nodes")) {
            g.nodes.push_back({n.at("id").get<std::string>(), n.at("label").get<std::string>(),
                               n.at("weight").get<std::size_t>()});
        }
        for (const auto& e : doc.at("edges")) {
            g.edges.push_back({e.at("source").get<std::string>(), e.at("target").get<std::string>(),
                               e.at("weight").get<std::size_t>()});
        }
        return g;
    } catch (const Json::exception& e) {
        throw ParseError(std::string("bad graph document: ") + e.what());
    }
}

} // namespace archface
