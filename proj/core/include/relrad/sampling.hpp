#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "relrad/graph.hpp"

namespace relrad {

// Ordered (src, dst) attribute-id pair; direction matters because foreign
// keys are directed.
using EdgePair = std::pair<std::string, std::string>;

// Negative-sampling plan. Mix weights cover the three strata:
//   type_compatible — same data type, not a foreign key
//   hard            — token-Jaccard of the names >= hard_similarity_threshold
//   random          — type-incompatible pairs
struct SamplingPlan {
    double ratio_neg_per_pos = 3.0;
    double mix_type_compatible = 0.5;
    double mix_hard = 0.3;
    double mix_random = 0.2;
    double hard_similarity_threshold = 0.6;
    std::uint64_t seed = 0;
};

// Throws ConfigError unless ratio > 0, weights are nonnegative and sum to
// 1 (+-1e-9), and the threshold lies in [0, 1].
void validate(const SamplingPlan& plan);

// Draws round(ratio * |positives|) negative attribute pairs from the graph,
// stratified by the plan's mix. Pairs equal to a positive or to a ground-truth
// foreign-key edge are never drawn; draws are deduplicated and deterministic
// under the plan seed. When a stratum runs out, its deficit refills from the
// type-compatible stratum first (then whatever pool remains), and a note is
// appended to `warnings` if given. Throws PoolExhaustedError when the whole
// pool is smaller than the request.
std::vector<EdgePair> sample_negatives(const SchemaGraph& g,
                                       const std::vector<EdgePair>& positives,
                                       const SamplingPlan& plan,
                                       std::vector<std::string>* warnings = nullptr);

enum class Split { Train, Val, Test };

const char* to_string(Split s);

// Assigns each sample to a split. Fractions are (train, val, test) and must
// sum to 1; sizes follow largest-remainder rounding, so they are exact when
// n * fraction is integral. When `stratify` is set the assignment is computed
// per label class and every class must land at least one sample in every
// split (TooFewSamplesError otherwise); labels are ignored when not
// stratifying. Deterministic under `seed`: every model family trained on the
// same inputs sees the byte-identical assignment.
std::vector<Split> split(const std::vector<int>& labels,
                         std::array<double, 3> fractions, bool stratify,
                         std::uint64_t seed);

// Audit rendering: {"<sample id>": "train"|"val"|"test", ...} in input order.
std::string split_json(const std::vector<std::string>& ids,
                       const std::vector<Split>& assignment);

// Equal-frequency bin index (0..n_bins-1) per value, assigned by rank with
// ties kept in input order so bins stay balanced. Lets regression targets be
// stratified like class labels.
std::vector<int> quantile_bins(const std::vector<double>& values, int n_bins);

}  // namespace relrad
