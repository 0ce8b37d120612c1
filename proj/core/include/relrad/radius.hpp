#pragma once

#include <optional>
#include <string>
#include <vector>

#include "relrad/graph.hpp"
#include "relrad/tasks.hpp"
#include "relrad/text.hpp"

namespace relrad {

// One recorded signature collision: samples `a` and `b` (indices into
// TaskDataset::samples) share the level-k neighborhood signature but carry
// different label classes, certifying that k hops do not determine the label.
struct WitnessPair {
    int k = 0;
    int sample_a = 0;
    int sample_b = 0;

    bool operator==(const WitnessPair&) const = default;
};

// Result of the empirical radius search. `r_hat` is the smallest k at which
// every signature group is label-pure, or nullopt (not determined) when
// collisions persist at `k_max_searched`. `certificate` holds one witness
// pair for each level that failed; `determinacy_rate[k]` is the fraction of
// samples whose level-k signature group is label-pure.
struct RadiusEstimate {
    std::optional<int> r_hat;
    int k_max_searched = 0;
    std::vector<WitnessPair> certificate;
    std::vector<double> determinacy_rate;
};

// Weisfeiler-Lehman signature of the k-hop neighborhood around the anchor
// pair (src, dst). Colors are seeded with (node category incl. the marker
// flag, the attribute's feature record with reals bucketed to 3 significant
// figures, anchor role), refined `wl_rounds` times over the induced edges
// (edge kind + orientation, never the supervision label), and digested as
// the sorted color multiset plus the two anchor colors. The digest is
// invariant under isomorphisms of the neighborhood that fix the anchors and
// preserve quantized features; it never depends on node ids.
//
// Anchors may be attribute or table nodes (table-level tasks anchor table
// pairs; blast uses a (t, t) self pair). Throws UnknownNodeError for missing
// nodes and ConfigError when k < 0 or wl_rounds < max(k, 1).
Hash128 khop_signature(const SchemaGraph& g, const std::string& src,
                       const std::string& dst, int k, int wl_rounds);

// Label classes used for collision checking: classification labels as 0/1;
// regression labels as decile bins of the empirical label distribution.
// Equal labels always map to the same class (ties never split, unlike the
// balance-first binning used for split stratification).
std::vector<int> label_classes(const TaskDataset& ds);

// Empirical radius: r̂ = min k ≤ k_max such that no two samples have equal
// level-k signatures but different label classes. Levels are chained
// (level k incorporates the digests of all levels ≤ k) so signature groups
// only refine as k grows and determinacy_rate is nondecreasing by
// construction. Records one witness pair per failed level. An all-same-label
// or empty dataset is vacuously determined at k=0. Throws ConfigError on
// k_max < 0 and FormatError when the dataset fails its invariant sweep.
RadiusEstimate estimate_radius(const TaskDataset& ds, int k_max = 5);

// Exact anchored isomorphism for small neighborhoods, used to validate the
// WL proxy: true iff there is a bijection between the node sets that maps
// src to src and dst to dst, preserves node category and quantized features,
// and maps the induced edge multiset (kind + orientation) exactly. Throws
// ConfigError when either neighborhood has more than 8 nodes.
bool exact_isomorphic(const SchemaGraph& ga, const Neighborhood& na,
                      const SchemaGraph& gb, const Neighborhood& nb);

// JSON report: r_hat (null when not determined), k_max_searched, per-level
// determinacy rates, and the witness certificate with sample anchors.
std::string radius_json(const RadiusEstimate& est, const TaskDataset& ds);

}  // namespace relrad
