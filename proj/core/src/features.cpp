#include "relrad/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "relrad/text.hpp"

namespace relrad {

namespace {

constexpr int kTrigramBuckets = 32;
constexpr int kNodeTrigramBuckets = 16;

// log1p rescaling with a fixed cap, so counts land in [0,1]
double scale_count(double x, double cap) {
    if (x <= 0.0) return 0.0;
    return std::min(1.0, std::log1p(x) / std::log1p(cap));
}

std::vector<double> trigram_bucket_vector(const std::string& name, int buckets) {
    std::vector<double> v(buckets, 0.0);
    for (const auto& g : trigrams(name)) {
        v[fnv1a64(g) % buckets] += 1.0;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
    }
    return v;
}

bool type_coercible(DataType a, DataType b) {
    if (a == b) return true;
    auto pair_is = [&](DataType x, DataType y) {
        return (a == x && b == y) || (a == y && b == x);
    };
    // numeric widening and bool-as-int are the only coercions we admit
    return pair_is(DataType::Int, DataType::Float) || pair_is(DataType::Bool, DataType::Int);
}

// Shannon entropy of a data-type histogram, normalized by ln(5) into [0,1].
double type_entropy(const std::map<DataType, int>& hist) {
    int total = 0;
    for (const auto& [t, c] : hist) total += c;
    if (total == 0) return 0.0;
    double h = 0.0;
    for (const auto& [t, c] : hist) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / total;
        h -= p * std::log(p);
    }
    return h / std::log(5.0);
}

}  // namespace

std::vector<double> lexical_features(const std::string& name_a,
                                     const std::string& name_b) {
    if (name_a.empty() || name_b.empty()) {
        throw EmptyNameError("lexical features need nonempty names");
    }
    std::vector<double> out;
    out.reserve(FeatureLayout::kLexicalDim);

    const auto va = trigram_bucket_vector(name_a, kTrigramBuckets);
    const auto vb = trigram_bucket_vector(name_b, kTrigramBuckets);
    for (int i = 0; i < kTrigramBuckets; ++i) out.push_back(va[i] * vb[i]);

    const std::string la = lowercase(name_a), lb = lowercase(name_b);
    out.push_back(token_jaccard(tokenize(name_a), tokenize(name_b)));
    out.push_back(1.0 - edit_similarity(la, lb));  // normalized edit distance
    const bool prefix = la.size() <= lb.size() ? lb.compare(0, la.size(), la) == 0
                                               : la.compare(0, lb.size(), lb) == 0;
    const bool suffix = la.size() <= lb.size()
                            ? lb.compare(lb.size() - la.size(), la.size(), la) == 0
                            : la.compare(la.size() - lb.size(), lb.size(), lb) == 0;
    out.push_back(prefix ? 1.0 : 0.0);
    out.push_back(suffix ? 1.0 : 0.0);
    out.push_back(la == lb ? 1.0 : 0.0);
    const double len_ratio = static_cast<double>(std::min(la.size(), lb.size())) /
                             static_cast<double>(std::max(la.size(), lb.size()));
    out.push_back(len_ratio);
    out.push_back(0.0);  // reserved
    out.push_back(0.0);  // reserved
    return out;
}

std::vector<double> typestat_features(const FeatureRecord& a, const FeatureRecord& b) {
    std::vector<double> out;
    out.reserve(FeatureLayout::kTypestatDim);
    out.push_back(a.data_type == b.data_type ? 1.0 : 0.0);
    out.push_back(type_coercible(a.data_type, b.data_type) ? 1.0 : 0.0);
    out.push_back(std::min(1.0, static_cast<double>(a.distinct_count) /
                                    static_cast<double>(std::max<std::int64_t>(
                                        1, b.distinct_count))));
    out.push_back(a.distinct_count <= b.distinct_count ? 1.0 : 0.0);
    out.push_back(std::fabs(a.null_fraction - b.null_fraction));
    if (a.row_count > 0 && b.row_count > 0) {
        const double lr = std::log10(static_cast<double>(a.row_count) /
                                     static_cast<double>(b.row_count));
        out.push_back((std::clamp(lr, -3.0, 3.0) + 3.0) / 6.0);
    } else {
        out.push_back(0.0);  // flagged zero for missing row counts
    }
    const double max_len = std::max(a.mean_length, b.mean_length);
    out.push_back(max_len == 0.0 ? 1.0 : std::min(a.mean_length, b.mean_length) / max_len);
    out.push_back(b.row_count > 0 && b.distinct_count == b.row_count ? 1.0 : 0.0);
    return out;
}

std::vector<double> structural_features(const SchemaGraph& g, const std::string& a,
                                        const std::string& b) {
    // every count below skips FK edges, so ground-truth labels cannot leak in
    auto non_fk_degree = [&](const std::string& id) {
        int d = 0;
        for (const auto& [nbr, ei] : g.adjacent(id)) {
            if (g.edges()[ei].kind != EdgeKind::ForeignKey) ++d;
        }
        return d;
    };
    auto candidate_out = [&](const std::string& id) {
        int c = 0;
        for (const auto& [nbr, ei] : g.adjacent(id)) {
            const auto& e = g.edges()[ei];
            if (e.kind == EdgeKind::Candidate && e.src == id) ++c;
        }
        return c;
    };
    auto candidate_in = [&](const std::string& id) {
        int c = 0;
        for (const auto& [nbr, ei] : g.adjacent(id)) {
            const auto& e = g.edges()[ei];
            if (e.kind == EdgeKind::Candidate && e.dst == id) ++c;
        }
        return c;
    };
    auto neighbor_entropy = [&](const std::string& id) {
        std::map<DataType, int> hist;
        for (const auto& [nbr, ei] : g.adjacent(id)) {
            if (g.edges()[ei].kind != EdgeKind::Candidate) continue;
            hist[g.record(nbr).data_type]++;
        }
        return type_entropy(hist);
    };

    if (g.node_kind(a) != NodeKind::Attribute) throw UnknownNodeError(a);
    if (g.node_kind(b) != NodeKind::Attribute) throw UnknownNodeError(b);

    const auto ta = g.owner_table(a);
    const auto tb = g.owner_table(b);
    std::vector<double> out;
    out.reserve(FeatureLayout::kStructuralDim);
    out.push_back(scale_count(ta ? non_fk_degree(*ta) : 0, 64.0));
    out.push_back(scale_count(tb ? non_fk_degree(*tb) : 0, 64.0));
    out.push_back(scale_count(non_fk_degree(a), 64.0));
    out.push_back(scale_count(non_fk_degree(b), 64.0));
    out.push_back(scale_count(candidate_out(a), 64.0));
    out.push_back(scale_count(candidate_in(b), 64.0));
    out.push_back(neighbor_entropy(a));
    out.push_back(neighbor_entropy(b));
    return out;
}

std::vector<double> edge_features(const SchemaGraph& g, const std::string& a,
                                  const std::string& b) {
    std::vector<double> out;
    out.reserve(FeatureLayout::kTotalDim);
    const auto lex = lexical_features(g.record(a).name, g.record(b).name);
    const auto ts = typestat_features(g.record(a), g.record(b));
    const auto st = structural_features(g, a, b);
    out.insert(out.end(), lex.begin(), lex.end());
    out.insert(out.end(), ts.begin(), ts.end());
    out.insert(out.end(), st.begin(), st.end());
    return out;
}

std::vector<std::string> edge_feature_names() {
    std::vector<std::string> names;
    names.reserve(FeatureLayout::kTotalDim);
    for (int i = 0; i < kTrigramBuckets; ++i) {
        names.push_back("lex_tri_" + std::to_string(i));
    }
    names.insert(names.end(), {"lex_token_jaccard", "lex_edit_dist", "lex_prefix",
                               "lex_suffix", "lex_exact", "lex_len_ratio", "lex_rsv0",
                               "lex_rsv1"});
    names.insert(names.end(), {"ts_type_eq", "ts_coercible", "ts_card_ratio",
                               "ts_containment", "ts_null_diff", "ts_row_log_ratio",
                               "ts_len_ratio", "ts_unique_b"});
    names.insert(names.end(), {"st_tbl_deg_a", "st_tbl_deg_b", "st_attr_deg_a",
                               "st_attr_deg_b", "st_cand_out_a", "st_cand_in_b",
                               "st_type_entropy_a", "st_type_entropy_b"});
    return names;
}

std::vector<double> node_features(const SchemaGraph& g, const std::string& id) {
    std::vector<double> out(kNodeFeatureDim, 0.0);
    if (g.node_kind(id) == NodeKind::Table) {
        out[0] = 1.0;
        return out;
    }
    const AttributeNode& a = g.attribute(id);
    out[1] = 1.0;
    out[2] = a.marker ? 1.0 : 0.0;
    out[3 + static_cast<int>(a.record.data_type)] = 1.0;
    out[8] = scale_count(static_cast<double>(a.record.distinct_count), 1e6);
    out[9] = scale_count(static_cast<double>(a.record.row_count), 1e6);
    out[10] = a.record.null_fraction;
    out[11] = scale_count(a.record.mean_length, 256.0);
    if (!a.record.name.empty()) {
        const auto tri = trigram_bucket_vector(a.record.name, kNodeTrigramBuckets);
        for (int i = 0; i < kNodeTrigramBuckets; ++i) out[12 + i] = tri[i];
    }
    return out;
}

std::vector<std::string> node_feature_names() {
    std::vector<std::string> names{"is_table", "is_attribute", "is_marker",
                                   "type_int",  "type_float",  "type_text",
                                   "type_date", "type_bool",   "distinct_scaled",
                                   "rows_scaled", "null_fraction", "mean_len_scaled"};
    for (int i = 0; i < kNodeTrigramBuckets; ++i) {
        names.push_back("name_tri_" + std::to_string(i));
    }
    return names;
}

void MinMaxScaler::fit(const Eigen::MatrixXd& rows) {
    if (rows.rows() == 0) throw ScalerStateError("cannot fit a scaler on zero rows");
    min_ = rows.colwise().minCoeff();
    max_ = rows.colwise().maxCoeff();
    fitted_ = true;
}

Eigen::MatrixXd MinMaxScaler::transform(const Eigen::MatrixXd& rows) const {
    if (!fitted_) throw ScalerStateError("transform called before fit");
    if (rows.cols() != min_.size()) {
        throw ScalerStateError("transform dimensionality differs from fit");
    }
    Eigen::MatrixXd out(rows.rows(), rows.cols());
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
        const double lo = min_(c);
        const double range = max_(c) - lo;
        for (Eigen::Index r = 0; r < rows.rows(); ++r) {
            const double v = range > 0.0 ? (rows(r, c) - lo) / range : 0.0;
            out(r, c) = std::clamp(v, 0.0, 1.0);
        }
    }
    return out;
}

Eigen::MatrixXd edge_feature_matrix(
    const SchemaGraph& g,
    const std::vector<std::pair<std::string, std::string>>& pairs) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(pairs.size()), FeatureLayout::kTotalDim);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto row = edge_features(g, pairs[i].first, pairs[i].second);
        for (int j = 0; j < FeatureLayout::kTotalDim; ++j) {
            m(static_cast<Eigen::Index>(i), j) = row[j];
        }
    }
    return m;
}

Eigen::MatrixXd node_feature_matrix(const SchemaGraph& g) {
    const auto ids = g.node_ids();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(ids.size()), kNodeFeatureDim);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto row = node_features(g, ids[i]);
        for (int j = 0; j < kNodeFeatureDim; ++j) {
            m(static_cast<Eigen::Index>(i), j) = row[j];
        }
    }
    return m;
}

std::string edge_features_csv(
    const SchemaGraph& g,
    const std::vector<std::pair<std::string, std::string>>& pairs) {
    std::ostringstream out;
    out << "src,dst";
    for (const auto& name : edge_feature_names()) out << "," << name;
    out << "\n";
    for (const auto& [a, b] : pairs) {
        out << a << "," << b;
        for (double v : edge_features(g, a, b)) out << "," << fmt_double(v);
        out << "\n";
    }
    return out.str();
}

}  // namespace relrad
