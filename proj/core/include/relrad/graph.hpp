#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "relrad/errors.hpp"

namespace relrad {

enum class NodeKind { Table, Attribute };

enum class DataType { Int, Float, Text, Date, Bool };

// Membership links a table to one of its attributes; candidate and foreign-key
// edges link attributes of (usually) different tables. Traversal treats every
// kind as undirected; direction only matters for feature semantics.
enum class EdgeKind { Membership, Candidate, ForeignKey };

const char* to_string(DataType t);
const char* to_string(EdgeKind k);
std::optional<DataType> data_type_from_string(const std::string& s);

// Column profile attached to each attribute node. This is the only per-node
// payload models may read; everything else about a node is structure.
struct FeatureRecord {
    std::string name;  // display name; edge features read this, not the node id
    DataType data_type = DataType::Int;
    std::int64_t distinct_count = 0;
    std::int64_t row_count = 0;
    double null_fraction = 0.0;
    double mean_length = 0.0;  // text columns; 0 elsewhere

    bool operator==(const FeatureRecord&) const = default;
};

struct TableNode {
    std::string id;  // equals the table name
};

struct AttributeNode {
    std::string id;  // "<table>.<attr>" by convention
    bool marker = false;  // structural category used by the synthetic generator
    FeatureRecord record;
};

struct SchemaEdge {
    std::string src;
    std::string dst;
    EdgeKind kind = EdgeKind::Candidate;
    std::optional<double> label;  // candidate edges may carry a supervision label

    bool operator==(const SchemaEdge&) const = default;
};

enum class ViolationKind {
    MembershipEndpointKind,   // membership must run table -> attribute
    CandidateEndpointKind,    // candidate must join two attributes
    ForeignKeyEndpointKind,   // foreign key must join two attributes
    MissingMembership,        // attribute owned by no table
    MultipleMembership,       // attribute owned by several tables
    SelfLoop,                 // edge with identical endpoints
    BadRecord,                // FeatureRecord fails its range checks
};

struct Violation {
    ViolationKind kind;
    std::string subject;  // node id or "src->dst" for edges
    std::string detail;
};

// Induced k-hop neighborhood around an attribute pair. `nodes` is sorted by
// id; `dist` is parallel to `nodes` and holds the hop distance to the nearer
// anchor endpoint; `edges` are the induced edges sorted by (src, dst, kind).
struct Neighborhood {
    std::string src;
    std::string dst;
    int hops = 0;
    std::vector<std::string> nodes;
    std::vector<int> dist;
    std::vector<SchemaEdge> edges;
};

class SchemaGraphBuilder;

class SchemaGraph {
  public:
    int node_count() const { return static_cast<int>(tables_.size() + attributes_.size()); }
    int edge_count() const { return static_cast<int>(edges_.size()); }

    const std::vector<TableNode>& tables() const { return tables_; }
    const std::vector<AttributeNode>& attributes() const { return attributes_; }
    const std::vector<SchemaEdge>& edges() const { return edges_; }

    bool has_node(const std::string& id) const { return index_.count(id) != 0; }
    NodeKind node_kind(const std::string& id) const;  // throws UnknownNodeError

    const AttributeNode& attribute(const std::string& id) const;  // throws UnknownNodeError
    const FeatureRecord& record(const std::string& id) const { return attribute(id).record; }

    // Mutators used by the generator's calibration pass and by feature
    // permutation checks. Structure (nodes, edges) stays frozen after build.
    void set_record(const std::string& attr_id, FeatureRecord rec);
    void set_marker(const std::string& attr_id, bool marker);
    // Supervision label on a candidate edge (payload, not structure).
    // Throws ConfigError on a bad index or a non-candidate edge.
    void set_candidate_label(int edge_index, std::optional<double> label);

    // Owning table via the membership edge; empty if none.
    std::optional<std::string> owner_table(const std::string& attr_id) const;
    // Member attribute ids of a table, sorted.
    std::vector<std::string> table_attributes(const std::string& table_id) const;

    // (neighbor id, index into edges()) pairs, sorted by neighbor id then
    // edge index. Sorted adjacency keeps every traversal deterministic.
    const std::vector<std::pair<std::string, int>>& adjacent(const std::string& id) const;

    // All node ids (tables and attributes), sorted.
    std::vector<std::string> node_ids() const;

  private:
    friend class SchemaGraphBuilder;

    struct NodeRef {
        NodeKind kind;
        int index;
    };

    std::vector<TableNode> tables_;
    std::vector<AttributeNode> attributes_;
    std::vector<SchemaEdge> edges_;
    std::map<std::string, NodeRef> index_;
    std::map<std::string, std::vector<std::pair<std::string, int>>> adj_;
};

// Incremental construction with early existence/uniqueness checks. Kind-level
// invariants (endpoint kinds, membership arity, record ranges) are deliberately
// not enforced here; validate() reports them so malformed inputs can be
// ingested, diagnosed, and rejected with a full list instead of the first hit.
class SchemaGraphBuilder {
  public:
    // Returns the node id (= name). Throws DuplicateNodeError.
    std::string add_table(const std::string& name);

    // Adds "<table>.<name>" plus its membership edge. Throws UnknownNodeError
    // if the table is missing, DuplicateNodeError on id collision.
    std::string add_attribute(const std::string& table_id, const std::string& name,
                              FeatureRecord rec, bool marker = false);

    // Attribute node with no membership edge (callers wire edges themselves).
    std::string add_detached_attribute(const std::string& id, FeatureRecord rec,
                                       bool marker = false);

    void add_membership(const std::string& table_id, const std::string& attr_id);
    void add_candidate(const std::string& a, const std::string& b,
                       std::optional<double> label = std::nullopt);
    void add_foreign_key(const std::string& src, const std::string& dst);

    bool has_node(const std::string& id) const { return g_.has_node(id); }

    // Finalizes adjacency and moves the graph out; the builder is spent.
    SchemaGraph build();

  private:
    void add_edge(const std::string& src, const std::string& dst, EdgeKind kind,
                  std::optional<double> label);

    SchemaGraph g_;
};

// Full invariant sweep; empty result means the graph is well-formed.
std::vector<Violation> validate(const SchemaGraph& g);

// Hop distances from `sources` over all edges, treated as undirected.
// `max_hops` < 0 means unbounded. Result maps reached node id -> distance.
std::map<std::string, int> bfs_distances(const SchemaGraph& g,
                                         const std::vector<std::string>& sources,
                                         int max_hops = -1);

// Induced neighborhood of the (src, dst) attribute pair: all nodes within k
// hops of either endpoint plus every edge whose endpoints both made the cut.
// k = 0 yields just the two endpoints and any edges directly between them.
Neighborhood k_hop_neighborhood(const SchemaGraph& g, const std::string& src,
                                const std::string& dst, int k);

}  // namespace relrad
