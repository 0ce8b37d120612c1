#include "relrad/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "relrad/errors.hpp"
#include "relrad/metrics.hpp"
#include "relrad/text.hpp"

namespace relrad {

const char* to_string(BaselineMethod m) {
    switch (m) {
        case BaselineMethod::InclusionProxy: return "inclusion_proxy";
        case BaselineMethod::NameSimilarity: return "name_similarity";
    }
    return "?";
}

double inclusion_proxy_score(const FeatureRecord& a, const FeatureRecord& b) {
    if (a.data_type != b.data_type) return 0.0;
    if (a.distinct_count <= 0 || b.distinct_count <= 0 || b.row_count <= 0) return 0.0;
    const double key_likeness =
        std::min(1.0, static_cast<double>(b.distinct_count) /
                          static_cast<double>(b.row_count));
    const double containment =
        std::min(1.0, static_cast<double>(b.distinct_count) /
                          static_cast<double>(a.distinct_count));
    return key_likeness * containment;
}

double name_similarity_score(const std::string& name_a, const std::string& name_b) {
    if (name_a.empty() || name_b.empty())
        throw EmptyNameError("name_similarity: empty name");
    const double token = token_jaccard(tokenize(name_a), tokenize(name_b));
    const double gram = token_jaccard(trigrams(name_a), trigrams(name_b));
    return std::max(token, gram);
}

std::vector<BaselineScore> score_candidates(const SchemaGraph& g, BaselineMethod m) {
    std::vector<BaselineScore> out;
    for (const auto& e : g.edges()) {
        if (e.kind != EdgeKind::Candidate) continue;
        BaselineScore bs;
        bs.edge = e;
        bs.method = m;
        const FeatureRecord& ra = g.record(e.src);
        const FeatureRecord& rb = g.record(e.dst);
        bs.score = m == BaselineMethod::InclusionProxy
                       ? inclusion_proxy_score(ra, rb)
                       : name_similarity_score(ra.name, rb.name);
        out.push_back(std::move(bs));
    }
    return out;
}

std::vector<double> baseline_scores(const TaskDataset& ds, BaselineMethod m) {
    std::vector<double> out;
    out.reserve(ds.samples.size());
    for (const auto& s : ds.samples) {
        const FeatureRecord& ra = ds.graph.record(s.src);
        const FeatureRecord& rb = ds.graph.record(s.dst);
        out.push_back(m == BaselineMethod::InclusionProxy
                          ? inclusion_proxy_score(ra, rb)
                          : name_similarity_score(ra.name, rb.name));
    }
    return out;
}

double threshold_by_f1(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.empty()) throw ConfigError("threshold_by_f1: empty input");
    if (scores.size() != labels.size())
        throw ConfigError("threshold_by_f1: scores and labels differ in length");

    std::set<double> distinct(scores.begin(), scores.end());
    std::vector<double> cuts;
    cuts.push_back(*distinct.begin() - 1.0);  // everything predicted positive
    for (auto it = distinct.begin(); std::next(it) != distinct.end(); ++it)
        cuts.push_back((*it + *std::next(it)) / 2.0);
    cuts.push_back(*distinct.rbegin() + 1.0);  // nothing predicted positive

    double best_threshold = 0.0, best_f1 = -1.0;
    for (const double cut : cuts) {
        const double t = sigmoid(cut);
        const double f1 = classification_metrics(scores, labels, t).at("f1");
        if (f1 > best_f1) {
            best_f1 = f1;
            best_threshold = t;
        }
    }
    return best_threshold;
}

}  // namespace relrad
