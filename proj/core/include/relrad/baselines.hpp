#pragma once

#include <string>
#include <vector>

#include "relrad/graph.hpp"
#include "relrad/tasks.hpp"

namespace relrad {

enum class BaselineMethod { InclusionProxy, NameSimilarity };

const char* to_string(BaselineMethod m);

// A non-learned score attached to one candidate edge.
struct BaselineScore {
    SchemaEdge edge;
    double score = 0.0;  // always in [0, 1]
    BaselineMethod method = BaselineMethod::InclusionProxy;
};

// Profile-statistics stand-in for inclusion-dependency testing (row data is
// out of scope): how plausibly the values of `a` are contained in `b`.
// Directional by design. Type gate times target key-likeness times
// containment feasibility:
//
//   type(a) != type(b)  ->  0
//   otherwise           ->  (distinct_b / row_count_b) * min(1, distinct_b / distinct_a)
//
// so a same-typed pair whose target is a perfect key (distinct_b = row_count_b)
// with at least as many distinct values as the source scores exactly 1.
// Nonpositive distinct or row counts score 0; the key-likeness factor is
// clamped to 1 when a profile reports distinct_b > row_count_b.
double inclusion_proxy_score(const FeatureRecord& a, const FeatureRecord& b);

// max(token Jaccard, character-trigram Jaccard) over the two display names:
// the better of word-level and subword-level overlap. Symmetric, in [0, 1].
// Throws EmptyNameError when either name is empty.
double name_similarity_score(const std::string& name_a, const std::string& name_b);

// One BaselineScore per candidate edge of `g`, in edges() order. Inclusion
// scores run source -> destination; name similarity reads the display names
// of the two endpoint records.
std::vector<BaselineScore> score_candidates(const SchemaGraph& g, BaselineMethod m);

// Scores parallel to ds.samples for attribute-anchored tasks. Throws
// UnknownNodeError when an anchor is missing or is not an attribute.
std::vector<double> baseline_scores(const TaskDataset& ds, BaselineMethod m);

// Decision threshold maximizing F1 over the given rows, in the probability
// space used by classification_metrics (predicted positive iff
// sigmoid(score) >= threshold). Callers pass the validation split, mirroring
// how learned models pick their stopping epoch. Candidates are the sigmoid
// images of midpoints between adjacent distinct scores plus one sentinel
// below the minimum and one above the maximum; the lowest maximizing
// threshold wins, so the result is deterministic. Throws ConfigError on
// empty or mismatched inputs and DegenerateLabelsError (via the shared
// metrics path) when labels are single-class.
double threshold_by_f1(const std::vector<double>& scores, const std::vector<int>& labels);

}  // namespace relrad
