#include "relrad/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

namespace relrad {

const char* to_string(DataType t) {
    switch (t) {
        case DataType::Int: return "int";
        case DataType::Float: return "float";
        case DataType::Text: return "text";
        case DataType::Date: return "date";
        case DataType::Bool: return "bool";
    }
    return "?";
}

const char* to_string(EdgeKind k) {
    switch (k) {
        case EdgeKind::Membership: return "membership";
        case EdgeKind::Candidate: return "candidate";
        case EdgeKind::ForeignKey: return "foreign_key";
    }
    return "?";
}

std::optional<DataType> data_type_from_string(const std::string& s) {
    if (s == "int") return DataType::Int;
    if (s == "float") return DataType::Float;
    if (s == "text") return DataType::Text;
    if (s == "date") return DataType::Date;
    if (s == "bool") return DataType::Bool;
    return std::nullopt;
}

// ---- SchemaGraph ------------------------------------------------------------

NodeKind SchemaGraph::node_kind(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw UnknownNodeError(id);
    return it->second.kind;
}

const AttributeNode& SchemaGraph::attribute(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end() || it->second.kind != NodeKind::Attribute) {
        throw UnknownNodeError(id);
    }
    return attributes_[it->second.index];
}

void SchemaGraph::set_record(const std::string& attr_id, FeatureRecord rec) {
    auto it = index_.find(attr_id);
    if (it == index_.end() || it->second.kind != NodeKind::Attribute) {
        throw UnknownNodeError(attr_id);
    }
    attributes_[it->second.index].record = std::move(rec);
}

void SchemaGraph::set_marker(const std::string& attr_id, bool marker) {
    auto it = index_.find(attr_id);
    if (it == index_.end() || it->second.kind != NodeKind::Attribute) {
        throw UnknownNodeError(attr_id);
    }
    attributes_[it->second.index].marker = marker;
}

void SchemaGraph::set_candidate_label(int edge_index, std::optional<double> label) {
    if (edge_index < 0 || edge_index >= static_cast<int>(edges_.size())) {
        throw ConfigError("edge index " + std::to_string(edge_index) + " out of range");
    }
    auto& e = edges_[static_cast<std::size_t>(edge_index)];
    if (e.kind != EdgeKind::Candidate) {
        throw ConfigError("labels only attach to candidate edges");
    }
    e.label = label;
}

std::optional<std::string> SchemaGraph::owner_table(const std::string& attr_id) const {
    for (const auto& [nbr, ei] : adjacent(attr_id)) {
        if (edges_[ei].kind == EdgeKind::Membership) return nbr;
    }
    return std::nullopt;
}

std::vector<std::string> SchemaGraph::table_attributes(const std::string& table_id) const {
    std::vector<std::string> out;
    for (const auto& [nbr, ei] : adjacent(table_id)) {
        if (edges_[ei].kind == EdgeKind::Membership) out.push_back(nbr);
    }
    // adjacency is sorted, but membership may repeat on malformed graphs
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

const std::vector<std::pair<std::string, int>>& SchemaGraph::adjacent(
    const std::string& id) const {
    auto it = adj_.find(id);
    if (it == adj_.end()) {
        if (!has_node(id)) throw UnknownNodeError(id);
        static const std::vector<std::pair<std::string, int>> kEmpty;
        return kEmpty;
    }
    return it->second;
}

std::vector<std::string> SchemaGraph::node_ids() const {
    std::vector<std::string> out;
    out.reserve(index_.size());
    for (const auto& [id, ref] : index_) out.push_back(id);
    return out;  // std::map iteration is already sorted
}

// ---- SchemaGraphBuilder -----------------------------------------------------

std::string SchemaGraphBuilder::add_table(const std::string& name) {
    if (g_.index_.count(name)) throw DuplicateNodeError(name);
    g_.index_[name] = {NodeKind::Table, static_cast<int>(g_.tables_.size())};
    g_.tables_.push_back(TableNode{name});
    return name;
}

std::string SchemaGraphBuilder::add_attribute(const std::string& table_id,
                                              const std::string& name, FeatureRecord rec,
                                              bool marker) {
    auto it = g_.index_.find(table_id);
    if (it == g_.index_.end() || it->second.kind != NodeKind::Table) {
        throw UnknownNodeError(table_id);
    }
    const std::string id = add_detached_attribute(table_id + "." + name, std::move(rec), marker);
    add_edge(table_id, id, EdgeKind::Membership, std::nullopt);
    return id;
}

std::string SchemaGraphBuilder::add_detached_attribute(const std::string& id,
                                                       FeatureRecord rec, bool marker) {
    if (g_.index_.count(id)) throw DuplicateNodeError(id);
    g_.index_[id] = {NodeKind::Attribute, static_cast<int>(g_.attributes_.size())};
    g_.attributes_.push_back(AttributeNode{id, marker, std::move(rec)});
    return id;
}

void SchemaGraphBuilder::add_membership(const std::string& table_id,
                                        const std::string& attr_id) {
    add_edge(table_id, attr_id, EdgeKind::Membership, std::nullopt);
}

void SchemaGraphBuilder::add_candidate(const std::string& a, const std::string& b,
                                       std::optional<double> label) {
    add_edge(a, b, EdgeKind::Candidate, label);
}

void SchemaGraphBuilder::add_foreign_key(const std::string& src, const std::string& dst) {
    add_edge(src, dst, EdgeKind::ForeignKey, std::nullopt);
}

void SchemaGraphBuilder::add_edge(const std::string& src, const std::string& dst,
                                  EdgeKind kind, std::optional<double> label) {
    if (!g_.has_node(src)) throw UnknownNodeError(src);
    if (!g_.has_node(dst)) throw UnknownNodeError(dst);
    const int ei = static_cast<int>(g_.edges_.size());
    g_.edges_.push_back(SchemaEdge{src, dst, kind, label});
    g_.adj_[src].emplace_back(dst, ei);
    if (dst != src) g_.adj_[dst].emplace_back(src, ei);
}

SchemaGraph SchemaGraphBuilder::build() {
    for (auto& [id, list] : g_.adj_) {
        std::sort(list.begin(), list.end());
    }
    return std::move(g_);
}

// ---- validation -------------------------------------------------------------

namespace {

bool record_ok(const FeatureRecord& r) {
    if (r.distinct_count < 0 || r.row_count < 0) return false;
    if (r.distinct_count > r.row_count) return false;
    if (!(r.null_fraction >= 0.0 && r.null_fraction <= 1.0)) return false;
    if (!(r.mean_length >= 0.0) || !std::isfinite(r.mean_length)) return false;
    return true;
}

std::string edge_subject(const SchemaEdge& e) { return e.src + "->" + e.dst; }

}  // namespace

std::vector<Violation> validate(const SchemaGraph& g) {
    std::vector<Violation> out;

    for (const auto& e : g.edges()) {
        if (e.src == e.dst) {
            out.push_back({ViolationKind::SelfLoop, edge_subject(e),
                           std::string(to_string(e.kind)) + " edge loops on one node"});
            continue;
        }
        const NodeKind sk = g.node_kind(e.src);
        const NodeKind dk = g.node_kind(e.dst);
        switch (e.kind) {
            case EdgeKind::Membership:
                if (sk != NodeKind::Table || dk != NodeKind::Attribute) {
                    out.push_back({ViolationKind::MembershipEndpointKind, edge_subject(e),
                                   "membership must run table -> attribute"});
                }
                break;
            case EdgeKind::Candidate:
                if (sk != NodeKind::Attribute || dk != NodeKind::Attribute) {
                    out.push_back({ViolationKind::CandidateEndpointKind, edge_subject(e),
                                   "candidate must join two attributes"});
                }
                break;
            case EdgeKind::ForeignKey:
                if (sk != NodeKind::Attribute || dk != NodeKind::Attribute) {
                    out.push_back({ViolationKind::ForeignKeyEndpointKind, edge_subject(e),
                                   "foreign key must join two attributes"});
                }
                break;
        }
    }

    for (const auto& a : g.attributes()) {
        int memberships = 0;
        for (const auto& [nbr, ei] : g.adjacent(a.id)) {
            const auto& e = g.edges()[ei];
            if (e.kind == EdgeKind::Membership && e.src == nbr) ++memberships;
        }
        if (memberships == 0) {
            out.push_back({ViolationKind::MissingMembership, a.id,
                           "attribute belongs to no table"});
        } else if (memberships > 1) {
            out.push_back({ViolationKind::MultipleMembership, a.id,
                           "attribute belongs to " + std::to_string(memberships) + " tables"});
        }
        if (!record_ok(a.record)) {
            out.push_back({ViolationKind::BadRecord, a.id,
                           "feature record fails range checks"});
        }
    }

    return out;
}

// ---- traversal --------------------------------------------------------------

std::map<std::string, int> bfs_distances(const SchemaGraph& g,
                                         const std::vector<std::string>& sources,
                                         int max_hops) {
    std::map<std::string, int> dist;
    std::deque<std::string> queue;
    for (const auto& s : sources) {
        if (!g.has_node(s)) throw UnknownNodeError(s);
        if (dist.emplace(s, 0).second) queue.push_back(s);
    }
    while (!queue.empty()) {
        const std::string cur = queue.front();
        queue.pop_front();
        const int d = dist[cur];
        if (max_hops >= 0 && d >= max_hops) continue;
        for (const auto& [nbr, ei] : g.adjacent(cur)) {
            if (dist.emplace(nbr, d + 1).second) queue.push_back(nbr);
        }
    }
    return dist;
}

Neighborhood k_hop_neighborhood(const SchemaGraph& g, const std::string& src,
                                const std::string& dst, int k) {
    if (k < 0) throw ConfigError("neighborhood hops must be >= 0");
    if (g.node_kind(src) != NodeKind::Attribute) throw UnknownNodeError(src);
    if (g.node_kind(dst) != NodeKind::Attribute) throw UnknownNodeError(dst);

    const auto dist = bfs_distances(g, {src, dst}, k);

    Neighborhood n;
    n.src = src;
    n.dst = dst;
    n.hops = k;
    n.nodes.reserve(dist.size());
    for (const auto& [id, d] : dist) {  // std::map: already sorted by id
        n.nodes.push_back(id);
        n.dist.push_back(d);
    }

    std::set<std::string> member(n.nodes.begin(), n.nodes.end());
    for (const auto& e : g.edges()) {
        if (member.count(e.src) && member.count(e.dst)) n.edges.push_back(e);
    }
    std::sort(n.edges.begin(), n.edges.end(), [](const SchemaEdge& a, const SchemaEdge& b) {
        if (a.src != b.src) return a.src < b.src;
        if (a.dst != b.dst) return a.dst < b.dst;
        return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    });
    return n;
}

}  // namespace relrad
