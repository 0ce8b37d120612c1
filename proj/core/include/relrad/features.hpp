#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "relrad/graph.hpp"

namespace relrad {

// Edge feature layout: fixed segment offsets, version 1.
//   [0,40)   lexical    — trigram buckets + name-shape scalars
//   [40,48)  typestat   — type and profile-statistic comparisons
//   [48,56)  structural — degree/entropy context with FK edges removed
struct FeatureLayout {
    static constexpr int kLexicalDim = 40;
    static constexpr int kTypestatDim = 8;
    static constexpr int kStructuralDim = 8;
    static constexpr int kLexicalOffset = 0;
    static constexpr int kTypestatOffset = 40;
    static constexpr int kStructuralOffset = 48;
    static constexpr int kTotalDim = 56;
};

// 40 lexical dims from the two display names: 32 hashed-trigram overlap
// buckets (L2-normalized count vectors multiplied elementwise, so their sum
// is the cosine similarity), token Jaccard, normalized edit distance,
// prefix/suffix/exact-match flags, length ratio, and 2 reserved zeros.
// Bucketing is FNV-1a 64 mod 32, fixed forever. Throws EmptyNameError.
std::vector<double> lexical_features(const std::string& name_a,
                                     const std::string& name_b);

// 8 typestat dims: [type-equal, type-coercible, min(1, distinct_a /
// max(1, distinct_b)), containment flag (distinct_a <= distinct_b),
// |null_frac difference|, row-count log10 ratio clamped to [-3,3] and mapped
// to [0,1], mean-length min/max ratio, b-uniqueness flag]. Zero-row inputs
// zero out the row-ratio and uniqueness dims instead of erroring.
std::vector<double> typestat_features(const FeatureRecord& a, const FeatureRecord& b);

// 8 structural dims computed on the graph WITH ALL FK EDGES IGNORED (leakage
// guard): log-scaled non-FK degrees of both owner tables and both endpoint
// attributes, outgoing-candidate count of a, incoming-candidate count of b,
// and the data-type entropy of each endpoint's candidate neighbors. All
// log1p-rescaled into [0,1]. Throws UnknownNodeError.
std::vector<double> structural_features(const SchemaGraph& g, const std::string& a,
                                        const std::string& b);

// Concatenation per FeatureLayout (56 dims).
std::vector<double> edge_features(const SchemaGraph& g, const std::string& a,
                                  const std::string& b);

// Column names for CSV export, length kTotalDim, layout order.
std::vector<std::string> edge_feature_names();

// ---- node features (input plumbing for the message-passing models) ------------

// 28 dims per node: [is_table, is_attribute, is_marker], data-type one-hot
// (5), log-scaled distinct/row counts, null fraction, scaled mean length,
// and 16 hashed-trigram buckets of the display name. Table nodes carry only
// the kind flag. Everything lands in [0,1].
constexpr int kNodeFeatureDim = 28;
std::vector<double> node_features(const SchemaGraph& g, const std::string& id);
std::vector<std::string> node_feature_names();

// ---- scaling -------------------------------------------------------------------

// Per-column min-max scaler; fit on the training split only, then transform
// every split with the training parameters. Transform clamps to [0,1] so
// out-of-range validation/test values stay bounded; constant columns map to 0.
class MinMaxScaler {
  public:
    void fit(const Eigen::MatrixXd& rows);
    Eigen::MatrixXd transform(const Eigen::MatrixXd& rows) const;
    bool fitted() const { return fitted_; }
    int dim() const { return static_cast<int>(min_.size()); }

  private:
    Eigen::VectorXd min_;
    Eigen::VectorXd max_;
    bool fitted_ = false;
};

// Raw (unscaled) edge-feature matrix for a pair list, one row per pair.
Eigen::MatrixXd edge_feature_matrix(
    const SchemaGraph& g, const std::vector<std::pair<std::string, std::string>>& pairs);

// Raw node-feature matrix over g.node_ids() order (sorted ids).
Eigen::MatrixXd node_feature_matrix(const SchemaGraph& g);

// CSV with a header naming each dimension; rows follow `pairs` order. The
// first two columns identify the pair.
std::string edge_features_csv(
    const SchemaGraph& g, const std::vector<std::pair<std::string, std::string>>& pairs);

}  // namespace relrad
