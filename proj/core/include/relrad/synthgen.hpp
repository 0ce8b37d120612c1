#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "relrad/graph.hpp"
#include "relrad/tasks.hpp"

namespace relrad {

struct DegreeBin {
    int degree = 0;
    double probability = 0.0;
};

// Parameters for the radius-controlled schema generator. The degree profile
// governs the table-level foreign-key backbone; attributes per table are
// drawn uniformly from [attrs_min, attrs_max] (the first column is always an
// "id" key, FK columns claim further slots).
struct GeneratorParams {
    int n_tables = 20;
    int attrs_min = 3;
    int attrs_max = 8;
    int target_radius = 1;
    double candidate_density = 0.05;
    std::vector<DegreeBin> degree_profile = {{1, 0.5}, {2, 0.3}, {3, 0.2}};
    double positive_fraction = 0.3;
    std::uint64_t seed = 0;
};

// ConfigError on malformed fields (counts, ranges, probability sum,
// target_radius > 6); InfeasibleParamsError when a positive-probability
// degree exceeds what n_tables can realize.
void validate(const GeneratorParams& p);

// Generates a schema graph: a table-level FK backbone realizing the degree
// profile (largest-remainder quotas, so the realized histogram sits within
// total-variation 0.1 of the profile), per-table attribute sets, and
// candidate edges covering most FK pairs plus density-sampled type-compatible
// non-FK pairs. Fully determined by params.seed.
SchemaGraph generate_schema(const GeneratorParams& p);

// Realized table-level FK degree distribution (fraction of tables per degree).
std::map<int, double> fk_degree_histogram(const SchemaGraph& g);

// Total-variation distance between the realized degree histogram and a
// profile: 0.5 * sum over degrees of |realized - profile|.
double degree_profile_tv(const SchemaGraph& g, const std::vector<DegreeBin>& profile);

// Labels every candidate edge with a structural cue of radius exactly k and
// returns the dataset (graph copy carries the labels inline plus any marker
// flags). For k = 0 the label is a pure function of the endpoint records:
//   [types equal and distinct(src) <= distinct(dst) and name-token overlap >= 1]
// calibrated to the requested positive fraction by editing records. For
// k >= 1 a set of beacon attributes (marker flag, never a candidate-edge
// endpoint) is placed so that an edge is positive iff the nearest beacon sits
// at graph distance exactly k from an endpoint — no beacon closer. Realized
// positive rate lands within +-0.05 of positive_fraction or
// CueInfeasibleError is thrown. Deterministic under `seed`.
TaskDataset inject_radius_cue(const SchemaGraph& g, int k, double positive_fraction,
                              std::uint64_t seed);

// Evaluates the k >= 1 cue against the markers already set on the graph:
// one sample per candidate edge, labeled 1 iff the nearest marker sits at
// graph distance exactly k from an endpoint. This is the semantics
// inject_radius_cue calibrates; exposed so marker interventions (move a
// beacon, delete a far node) can be tested directly.
std::vector<Sample> radius_cue_labels(const SchemaGraph& g, int k);

// Permutation-test p-value for "some 0-hop edge feature predicts the label":
// the statistic is the largest absolute point-biserial correlation between
// any edge-feature column and the labels; labels are shuffled n_permutations
// times. Small p means dependence (expected for k = 0 cues), large p means
// the 0-hop view is uninformative (expected for k >= 1). Zero-variance
// columns or labels correlate as 0, so constant labels give p = 1.
double verify_feature_independence(const TaskDataset& ds, int n_permutations,
                                   std::uint64_t seed);

}  // namespace relrad
