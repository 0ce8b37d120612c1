#include "relrad/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "relrad/errors.hpp"

namespace relrad {

const char* to_string(TaskKind k) {
    return k == TaskKind::Classification ? "classification" : "regression";
}

namespace {

std::string owner_or_throw(const SchemaGraph& g, const std::string& attr_id) {
    const auto t = g.owner_table(attr_id);
    if (!t) throw LinkError("attribute '" + attr_id + "' has no owner table");
    return *t;
}

// Directed propagation adjacency: referenced table -> referencing tables.
std::map<std::string, std::set<std::string>> fk_propagation_adjacency(const SchemaGraph& g) {
    std::map<std::string, std::set<std::string>> adj;
    for (const auto& t : g.tables()) adj[t.id];
    for (const auto& e : g.edges()) {
        if (e.kind != EdgeKind::ForeignKey) continue;
        const auto referencing = owner_or_throw(g, e.src);
        const auto referenced = owner_or_throw(g, e.dst);
        if (referencing == referenced) continue;
        adj[referenced].insert(referencing);
    }
    return adj;
}

void require_table(const SchemaGraph& g, const std::string& id) {
    if (!g.has_node(id) || g.node_kind(id) != NodeKind::Table) {
        throw UnknownNodeError(id);
    }
}

}  // namespace

std::map<std::string, std::set<std::string>> fk_table_adjacency(const SchemaGraph& g) {
    std::map<std::string, std::set<std::string>> adj;
    for (const auto& t : g.tables()) adj[t.id];  // every table present, even isolated
    for (const auto& e : g.edges()) {
        if (e.kind != EdgeKind::ForeignKey) continue;
        const auto a = owner_or_throw(g, e.src);
        const auto b = owner_or_throw(g, e.dst);
        if (a == b) continue;
        adj[a].insert(b);
        adj[b].insert(a);
    }
    return adj;
}

std::vector<std::string> check_dataset(const TaskDataset& ds) {
    std::vector<std::string> problems;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const auto& s = ds.samples[i];
        for (const auto* id : {&s.src, &s.dst}) {
            if (!ds.graph.has_node(*id)) {
                problems.push_back("sample " + std::to_string(i) + ": unknown anchor '" +
                                   *id + "'");
            }
        }
        if (!std::isfinite(s.label)) {
            problems.push_back("sample " + std::to_string(i) + ": non-finite label");
        } else if (ds.kind == TaskKind::Classification && s.label != 0.0 && s.label != 1.0) {
            problems.push_back("sample " + std::to_string(i) + ": classification label " +
                               std::to_string(s.label) + " not in {0,1}");
        }
    }
    if (!ds.split.empty() && ds.split.size() != ds.samples.size()) {
        problems.push_back("split assignment length " + std::to_string(ds.split.size()) +
                           " does not match " + std::to_string(ds.samples.size()) +
                           " samples");
    }
    if (ds.nominal_radius < 0) problems.push_back("negative nominal radius");
    return problems;
}

TaskDataset fk_labels(const SchemaGraph& g, bool allow_empty,
                      std::vector<std::string>* warnings) {
    std::set<std::pair<std::string, std::string>> fk;
    for (const auto& e : g.edges()) {
        if (e.kind == EdgeKind::ForeignKey) fk.insert({e.src, e.dst});
    }

    TaskDataset ds;
    ds.graph = g;
    ds.task = "fk_discovery";
    ds.kind = TaskKind::Classification;
    ds.nominal_radius = 0;

    std::set<std::pair<std::string, std::string>> covered;
    for (const auto& e : g.edges()) {
        if (e.kind != EdgeKind::Candidate) continue;
        const bool forward = fk.count({e.src, e.dst}) != 0;
        const bool backward = fk.count({e.dst, e.src}) != 0;
        if (forward || backward) {
            ds.samples.push_back({e.src, e.dst, 1.0});
            if (forward) covered.insert({e.src, e.dst});
            if (backward) covered.insert({e.dst, e.src});
        }
    }
    if (warnings != nullptr) {
        for (const auto& [src, dst] : fk) {
            if (covered.count({src, dst}) == 0) {
                warnings->push_back("foreign key " + src + " -> " + dst +
                                   " has no covering candidate edge; it contributes no sample");
            }
        }
    }
    if (ds.samples.empty() && !allow_empty) {
        throw NoPositivesError(
            "no candidate edge coincides with a foreign key; nothing to label");
    }
    return ds;
}

int cascade_impact_label(const SchemaGraph& g, const std::string& src_attr,
                         const std::string& dst_attr, int threshold) {
    if (!g.has_node(src_attr)) throw UnknownNodeError(src_attr);
    if (!g.has_node(dst_attr)) throw UnknownNodeError(dst_attr);
    const auto table = owner_or_throw(g, dst_attr);
    std::set<std::string> referencing;
    for (const auto& e : g.edges()) {
        if (e.kind != EdgeKind::ForeignKey) continue;
        if (owner_or_throw(g, e.dst) != table) continue;
        const auto from = owner_or_throw(g, e.src);
        if (from != table) referencing.insert(from);
    }
    return static_cast<int>(referencing.size()) >= threshold ? 1 : 0;
}

TaskDataset cascade_dataset(const SchemaGraph& g, int threshold) {
    TaskDataset ds;
    ds.graph = g;
    ds.task = "cascade_impact";
    ds.kind = TaskKind::Classification;
    ds.nominal_radius = 1;
    for (const auto& e : g.edges()) {
        if (e.kind != EdgeKind::Candidate) continue;
        ds.samples.push_back(
            {e.src, e.dst,
             static_cast<double>(cascade_impact_label(g, e.src, e.dst, threshold))});
    }
    return ds;
}

double table_rows(const SchemaGraph& g, const std::string& table_id) {
    require_table(g, table_id);
    std::int64_t rows = 1;
    for (const auto& attr : g.table_attributes(table_id)) {
        rows = std::max(rows, g.record(attr).row_count);
    }
    return static_cast<double>(rows);
}

namespace {

// Cost of the shortest join path of length <= 2, or nullopt when none exists.
std::optional<double> join_cost_raw(const SchemaGraph& g,
                                    const std::map<std::string, std::set<std::string>>& adj,
                                    const std::string& table_a, const std::string& table_b) {
    if (table_a == table_b) return std::log10(table_rows(g, table_a));
    const double ra = table_rows(g, table_a);
    const double rb = table_rows(g, table_b);
    if (adj.at(table_a).count(table_b)) return std::log10(ra * rb);
    double best = -1.0;
    for (const auto& mid : adj.at(table_a)) {
        if (adj.at(mid).count(table_b)) {
            const double product = ra * table_rows(g, mid) * rb;
            if (best < 0.0 || product < best) best = product;
        }
    }
    if (best < 0.0) return std::nullopt;
    return std::log10(best);
}

}  // namespace

double join_cost_target(const SchemaGraph& g, const std::string& table_a,
                        const std::string& table_b, double cap) {
    require_table(g, table_a);
    require_table(g, table_b);
    return join_cost_raw(g, fk_table_adjacency(g), table_a, table_b).value_or(cap);
}

TaskDataset join_dataset(const SchemaGraph& g, double cap, bool keep_unreachable) {
    TaskDataset ds;
    ds.graph = g;
    ds.task = "join_cost";
    ds.kind = TaskKind::Regression;
    ds.nominal_radius = 2;
    const auto adj = fk_table_adjacency(g);
    std::vector<std::string> ids;
    for (const auto& t : g.tables()) ids.push_back(t.id);
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        for (std::size_t j = i + 1; j < ids.size(); ++j) {
            const auto y = join_cost_raw(g, adj, ids[i], ids[j]);
            if (!y && !keep_unreachable) continue;
            ds.samples.push_back({ids[i], ids[j], y.value_or(cap)});
        }
    }
    return ds;
}

double blast_radius_target(const SchemaGraph& g, const std::string& table_id,
                           int horizon, double decay) {
    require_table(g, table_id);
    if (horizon < 1) throw ConfigError("blast radius horizon must be >= 1");
    if (!(decay > 0.0 && decay <= 1.0)) {
        throw ConfigError("blast radius decay must lie in (0, 1]");
    }
    const auto adj = fk_propagation_adjacency(g);
    std::map<std::string, int> depth{{table_id, 0}};
    std::deque<std::string> frontier{table_id};
    double total = 0.0;
    while (!frontier.empty()) {
        const auto cur = frontier.front();
        frontier.pop_front();
        const int d = depth[cur];
        if (d == horizon) continue;
        for (const auto& next : adj.at(cur)) {
            if (depth.count(next)) continue;
            depth[next] = d + 1;
            total += std::pow(decay, d + 1);
            frontier.push_back(next);
        }
    }
    return total;
}

TaskDataset blast_dataset(const SchemaGraph& g, int horizon, double decay) {
    TaskDataset ds;
    ds.graph = g;
    ds.task = "blast_radius";
    ds.kind = TaskKind::Regression;
    ds.nominal_radius = horizon;
    std::vector<std::string> ids;
    for (const auto& t : g.tables()) ids.push_back(t.id);
    std::sort(ids.begin(), ids.end());
    for (const auto& id : ids) {
        ds.samples.push_back({id, id, blast_radius_target(g, id, horizon, decay)});
    }
    return ds;
}

SchemaGraph restrict_to_table_radius(const SchemaGraph& g,
                                     const std::vector<std::string>& anchor_tables,
                                     int radius) {
    if (radius < 0) throw ConfigError("restriction radius must be >= 0");
    for (const auto& t : anchor_tables) require_table(g, t);
    const auto adj = fk_table_adjacency(g);

    std::map<std::string, int> depth;
    std::deque<std::string> frontier;
    for (const auto& t : anchor_tables) {
        if (!depth.count(t)) {
            depth[t] = 0;
            frontier.push_back(t);
        }
    }
    while (!frontier.empty()) {
        const auto cur = frontier.front();
        frontier.pop_front();
        if (depth[cur] == radius) continue;
        for (const auto& next : adj.at(cur)) {
            if (depth.count(next)) continue;
            depth[next] = depth[cur] + 1;
            frontier.push_back(next);
        }
    }

    SchemaGraphBuilder b;
    for (const auto& t : g.tables()) {
        if (depth.count(t.id)) b.add_table(t.id);
    }
    for (const auto& a : g.attributes()) {
        const auto owner = g.owner_table(a.id);
        if (owner && depth.count(*owner)) {
            b.add_detached_attribute(a.id, a.record, a.marker);
        }
    }
    for (const auto& e : g.edges()) {
        if (!b.has_node(e.src) || !b.has_node(e.dst)) continue;
        switch (e.kind) {
            case EdgeKind::Membership: b.add_membership(e.src, e.dst); break;
            case EdgeKind::Candidate: b.add_candidate(e.src, e.dst, e.label); break;
            case EdgeKind::ForeignKey: b.add_foreign_key(e.src, e.dst); break;
        }
    }
    return b.build();
}

void assign_split(TaskDataset& ds, std::array<double, 3> fractions,
                  std::uint64_t seed, bool stratify) {
    std::vector<int> labels;
    labels.reserve(ds.samples.size());
    if (ds.kind == TaskKind::Classification) {
        for (const auto& s : ds.samples) labels.push_back(static_cast<int>(s.label));
    } else {
        std::vector<double> y;
        y.reserve(ds.samples.size());
        for (const auto& s : ds.samples) y.push_back(s.label);
        const int bins = std::clamp<int>(static_cast<int>(y.size()) / 10, 1, 10);
        labels = quantile_bins(y, bins);
    }
    ds.split = split(labels, fractions, stratify, seed);
}

}  // namespace relrad
