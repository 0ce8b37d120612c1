#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "relrad/graph.hpp"
#include "relrad/sampling.hpp"

namespace relrad {

// Undirected table adjacency induced by foreign keys: A ~ B when some FK
// joins an attribute of A to an attribute of B (self references dropped).
// Every table appears; isolated ones map to an empty set.
std::map<std::string, std::set<std::string>> fk_table_adjacency(const SchemaGraph& g);

enum class TaskKind { Classification, Regression };

const char* to_string(TaskKind k);

// One labeled anchor. Edge tasks anchor an attribute pair; table-level tasks
// anchor a table pair (blast radius uses a (t, t) self pair so every task
// flows through the same pair-scoring interface).
struct Sample {
    std::string src;
    std::string dst;
    double label = 0.0;

    bool operator==(const Sample&) const = default;
};

// A task instance: the graph, its labeled samples, the task's nominal
// locality radius in table hops, and (once assigned) the split, parallel to
// `samples`.
struct TaskDataset {
    SchemaGraph graph;
    std::string task;
    TaskKind kind = TaskKind::Classification;
    int nominal_radius = 0;
    std::vector<Sample> samples;
    std::vector<Split> split;  // empty until assign_split
};

// Invariant sweep; empty result means the dataset is well-formed
// (anchors resolve, classification labels are 0/1, regression labels finite,
// split either empty or parallel to samples).
std::vector<std::string> check_dataset(const TaskDataset& ds);

// Foreign-key discovery (radius 0): positives are candidate edges whose
// endpoint pair carries a foreign-key edge in either orientation. Negatives
// come from the sampling module later. Foreign keys with no covering
// candidate edge contribute nothing and are reported through `warnings`.
// Throws NoPositivesError when nothing qualifies, unless `allow_empty`.
TaskDataset fk_labels(const SchemaGraph& g, bool allow_empty = false,
                      std::vector<std::string>* warnings = nullptr);

// Cascade impact (radius 1): 1 iff the table owning `dst_attr` is referenced
// by at least `threshold` distinct other tables, i.e. deleting it cascades
// widely.
int cascade_impact_label(const SchemaGraph& g, const std::string& src_attr,
                         const std::string& dst_attr, int threshold);
TaskDataset cascade_dataset(const SchemaGraph& g, int threshold);

// Declared row count of a table: the largest row_count among its attributes,
// floored at 1 so logs stay finite.
double table_rows(const SchemaGraph& g, const std::string& table_id);

// Join cost (radius 2): log10 of the row-count product along the shortest
// foreign-key join path of length <= 2 between the tables (path length 0 for
// a table joined to itself, then 1, then 2; among equal-length paths the
// smallest product wins). Pairs with no such path cost `cap`.
double join_cost_target(const SchemaGraph& g, const std::string& table_a,
                        const std::string& table_b, double cap = 9.0);
// One sample per unordered table pair; unreachable pairs are dropped unless
// `keep_unreachable`, which labels them with the cap instead.
TaskDataset join_dataset(const SchemaGraph& g, double cap = 9.0,
                         bool keep_unreachable = false);

// Blast radius (radius 3): sum of decay^d over tables first reached at depth
// d <= horizon when impact propagates from a referenced table to the tables
// referencing it. Self-references are ignored.
double blast_radius_target(const SchemaGraph& g, const std::string& table_id,
                           int horizon = 3, double decay = 0.5);
TaskDataset blast_dataset(const SchemaGraph& g, int horizon = 3, double decay = 0.5);

// Induced subgraph of the tables within `radius` table hops of the anchors,
// where two tables are adjacent when a foreign key joins their attributes
// (any direction). Keeps those tables' attributes, their membership edges,
// and every candidate/foreign-key edge whose endpoints both survive. This is
// the executable form of "the label reads nothing beyond its radius": a task
// labeled at nominal radius r must recompute identically on the restriction.
SchemaGraph restrict_to_table_radius(const SchemaGraph& g,
                                     const std::vector<std::string>& anchor_tables,
                                     int radius);

// Stratified split over the dataset (classification stratifies on the label,
// regression on equal-frequency label bins, up to 10). Stores the result in
// ds.split.
void assign_split(TaskDataset& ds, std::array<double, 3> fractions,
                  std::uint64_t seed, bool stratify = true);

}  // namespace relrad
