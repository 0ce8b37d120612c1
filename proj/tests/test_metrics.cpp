#include "relrad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "relrad/rng.hpp"

using namespace relrad;

namespace {

// Independent brute-force Wilcoxon oracle: its own ranking and enumeration,
// sharing no code with the library implementation.
double wilcoxon_oracle_p(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) d.push_back(a[i] - b[i]);
    }
    const int n = static_cast<int>(d.size());
    // mid-ranks of |d| by counting comparisons
    std::vector<double> rank(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double less = 0, equal = 0;
        for (int j = 0; j < n; ++j) {
            if (std::fabs(d[j]) < std::fabs(d[i])) ++less;
            if (std::fabs(d[j]) == std::fabs(d[i])) ++equal;
        }
        rank[i] = less + (equal + 1.0) / 2.0;
    }
    double w_obs = 0.0;
    for (int i = 0; i < n; ++i) {
        if (d[i] > 0) w_obs += rank[i];
    }
    const double mu = n * (n + 1) / 4.0;
    long extreme = 0;
    const long total = 1L << n;
    for (long mask = 0; mask < total; ++mask) {
        double w = 0.0;
        for (int i = 0; i < n; ++i) {
            if (mask & (1L << i)) w += rank[i];
        }
        if (std::fabs(w - mu) >= std::fabs(w_obs - mu) - 1e-9) ++extreme;
    }
    return static_cast<double>(extreme) / static_cast<double>(total);
}

}  // namespace

TEST_CASE("student-t critical values match reference tables") {
    CHECK(t_critical(0.95, 1) == doctest::Approx(12.7062047).epsilon(1e-5));
    CHECK(t_critical(0.95, 4) == doctest::Approx(2.7764451).epsilon(1e-5));
    CHECK(t_critical(0.95, 10) == doctest::Approx(2.2281389).epsilon(1e-5));
    CHECK(t_critical(0.95, 30) == doctest::Approx(2.0422725).epsilon(1e-5));
    CHECK(t_critical(0.99, 4) == doctest::Approx(4.6040949).epsilon(1e-5));
    CHECK_THROWS_AS(t_critical(0.95, 0), ConfigError);
}

TEST_CASE("normal cdf and sigmoid basics") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
    CHECK(normal_cdf(1.959964) == doctest::Approx(0.975).epsilon(1e-5));
    CHECK(sigmoid(0.0) == doctest::Approx(0.5));
    CHECK(sigmoid(1000.0) == doctest::Approx(1.0));
    CHECK(sigmoid(-1000.0) == doctest::Approx(0.0));
}

TEST_CASE("rankify mid-ranks ties") {
    CHECK(rankify({3.0, 1.0, 2.0}) == std::vector<double>{3.0, 1.0, 2.0});
    CHECK(rankify({1.0, 1.0, 2.0}) == std::vector<double>{1.5, 1.5, 3.0});
    CHECK(rankify({5.0, 5.0, 5.0}) == std::vector<double>{2.0, 2.0, 2.0});
}

TEST_CASE("summarize computes the t interval") {
    const SummaryStat s = summarize({1, 2, 3, 4, 5});
    CHECK(s.mean == doctest::Approx(3.0));
    CHECK(s.sd == doctest::Approx(std::sqrt(2.5)));
    const double half = 2.7764451 * std::sqrt(2.5) / std::sqrt(5.0);
    CHECK(s.ci_lo == doctest::Approx(3.0 - half).epsilon(1e-5));
    CHECK(s.ci_hi == doctest::Approx(3.0 + half).epsilon(1e-5));

    const SummaryStat one = summarize({7.0});
    CHECK(one.mean == 7.0);
    CHECK(one.ci_lo == 7.0);
    CHECK(one.ci_hi == 7.0);
    CHECK_THROWS_AS(summarize({}), TooFewPointsError);
}

TEST_CASE("ci width shrinks like one over sqrt n") {
    Rng rng(7);
    std::vector<double> small_sample, large_sample;
    for (int i = 0; i < 10; ++i) small_sample.push_back(rng.normal());
    for (int i = 0; i < 40; ++i) large_sample.push_back(rng.normal());
    const SummaryStat s10 = summarize(small_sample);
    const SummaryStat s40 = summarize(large_sample);
    const double ratio = (s10.ci_hi - s10.ci_lo) / (s40.ci_hi - s40.ci_lo);
    // expected ~2 (sqrt(40/10)), 20% tolerance plus sampling slack
    CHECK(ratio > 1.4);
    CHECK(ratio < 3.0);
}

TEST_CASE("classification metrics on hand-built confusion") {
    // one TP, one FN, one FP, one TN
    const std::vector<double> scores{2.0, -2.0, 2.0, -2.0};
    const std::vector<int> labels{1, 1, 0, 0};
    const auto m = classification_metrics(scores, labels);
    CHECK(m.at("precision") == doctest::Approx(0.5));
    CHECK(m.at("recall") == doctest::Approx(0.5));
    CHECK(m.at("f1") == doctest::Approx(0.5));
    CHECK(m.at("roc_auc") == doctest::Approx(0.5));
}

TEST_CASE("perfect separation maxes every metric") {
    const auto m = classification_metrics({5.0, 4.0, -4.0, -5.0}, {1, 1, 0, 0});
    CHECK(m.at("f1") == doctest::Approx(1.0));
    CHECK(m.at("roc_auc") == doctest::Approx(1.0));
    CHECK(m.at("pr_auc") == doctest::Approx(1.0));
}

TEST_CASE("constant scores give chance-level roc auc") {
    const auto m = classification_metrics({1.0, 1.0, 1.0, 1.0}, {1, 0, 1, 0});
    CHECK(m.at("roc_auc") == doctest::Approx(0.5));
}

TEST_CASE("pr auc step interpolation by hand") {
    // descending scores, labels 1,0,1,0 -> 1/2 + 1/3 = 5/6
    const auto m = classification_metrics({4.0, 3.0, 2.0, 1.0}, {1, 0, 1, 0});
    CHECK(m.at("pr_auc") == doctest::Approx(5.0 / 6.0));
}

TEST_CASE("roc auc equals the mann-whitney identity on random inputs") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 10 + static_cast<int>(rng.below(20));
        std::vector<double> scores;
        std::vector<int> labels;
        int pos = 0;
        for (int i = 0; i < n; ++i) {
            scores.push_back(std::round(rng.normal() * 4.0) / 4.0);  // force ties
            labels.push_back(rng.uniform() < 0.5 ? 1 : 0);
            pos += labels.back();
        }
        if (pos == 0 || pos == n) continue;
        // direct U statistic: count pairwise wins + half-ties
        double u = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (labels[i] == 1 && labels[j] == 0) {
                    if (scores[i] > scores[j]) u += 1.0;
                    else if (scores[i] == scores[j]) u += 0.5;
                }
            }
        }
        const double expected = u / (static_cast<double>(pos) * (n - pos));
        const auto m = classification_metrics(scores, labels);
        CHECK(m.at("roc_auc") == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("classification metrics reject degenerate input") {
    CHECK_THROWS_AS(classification_metrics({1.0, 2.0}, {1, 1}), DegenerateLabelsError);
    CHECK_THROWS_AS(classification_metrics({1.0}, {1, 0}), ShapeMismatchError);
    CHECK_THROWS_AS(classification_metrics({}, {}), TooFewPointsError);
}

TEST_CASE("regression metrics") {
    const auto perfect = regression_metrics({1, 2, 3}, {1, 2, 3});
    CHECK(perfect.at("r2") == doctest::Approx(1.0));
    CHECK(perfect.at("mae") == doctest::Approx(0.0));

    const auto at_mean = regression_metrics({2, 2, 2}, {1, 2, 3});
    CHECK(at_mean.at("r2") == doctest::Approx(0.0));

    const auto shifted = regression_metrics({2, 3, 4}, {1, 2, 3});
    CHECK(shifted.at("mae") == doctest::Approx(1.0));
    CHECK(shifted.at("r2") == doctest::Approx(1.0 - 3.0 / 2.0));

    CHECK_THROWS_AS(regression_metrics({1, 2}, {5, 5}), ZeroVarianceError);
    CHECK_THROWS_AS(regression_metrics({1}, {1}), TooFewPointsError);
}

TEST_CASE("ece hand cases") {
    // all confident, half right -> 0.5
    CHECK(ece({1.0, 1.0, 1.0, 1.0}, {1, 0, 1, 0}) == doctest::Approx(0.5));
    // perfectly calibrated bin
    CHECK(ece({0.25, 0.25, 0.25, 0.25}, {1, 0, 0, 0}) == doctest::Approx(0.0));
    // empty bins are skipped without effect
    CHECK(ece({0.05, 0.95}, {0, 1}, 10) == doctest::Approx(0.05));
    CHECK_THROWS_AS(ece({1.5}, {1}), ConfigError);
}

TEST_CASE("wilcoxon exact case from five positive differences") {
    const TestResult r = wilcoxon_signed_rank({1, 2, 3, 4, 5}, {0, 0, 0, 0, 0});
    CHECK(r.statistic == doctest::Approx(15.0));
    CHECK(r.p_value == doctest::Approx(0.0625));
    CHECK(r.n == 5);
}

TEST_CASE("wilcoxon drops zeros and is antisymmetric") {
    const std::vector<double> a{1, 2, 3, 4, 5, 7, 7};
    const std::vector<double> b{0, 0, 0, 0, 0, 7, 7};  // two zero diffs dropped
    const TestResult r = wilcoxon_signed_rank(a, b);
    CHECK(r.n == 5);
    CHECK(r.p_value == doctest::Approx(0.0625));

    const TestResult swapped = wilcoxon_signed_rank(b, a);
    CHECK(swapped.p_value == doctest::Approx(r.p_value));

    CHECK_THROWS_AS(wilcoxon_signed_rank({1, 1, 1}, {1, 1, 1}), TooFewPairsError);
    CHECK_THROWS_AS(wilcoxon_signed_rank({1, 2, 3, 4}, {0, 0, 0, 0}), TooFewPairsError);
}

TEST_CASE("wilcoxon exact matches the brute-force oracle on random inputs") {
    Rng rng(13);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 5 + static_cast<int>(rng.below(6));  // 5..10 pairs
        std::vector<double> a, b;
        for (int i = 0; i < n; ++i) {
            // quantized so tied |differences| actually occur
            a.push_back(std::round(rng.normal() * 2.0) / 2.0);
            b.push_back(std::round(rng.normal() * 2.0) / 2.0);
        }
        int nonzero = 0;
        for (int i = 0; i < n; ++i) nonzero += a[i] != b[i];
        if (nonzero < 5) continue;
        const double expected = wilcoxon_oracle_p(a, b);
        const TestResult r = wilcoxon_signed_rank(a, b);
        CHECK(r.p_value == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("wilcoxon normal approximation tracks the exact tail") {
    Rng rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> a, b;
        for (int i = 0; i < 13; ++i) {  // n = 13 is just past the exact cutoff
            a.push_back(rng.normal() + 0.8);
            b.push_back(rng.normal());
        }
        const double exact = wilcoxon_oracle_p(a, b);
        const TestResult r = wilcoxon_signed_rank(a, b);
        CHECK(std::fabs(r.p_value - exact) < 0.05);
    }
}

TEST_CASE("holm-bonferroni worked examples") {
    CHECK(holm_bonferroni({0.01, 0.04}) == std::vector<double>{0.02, 0.04});
    CHECK(holm_bonferroni({0.04, 0.01}) == std::vector<double>{0.04, 0.02});
    CHECK(holm_bonferroni({0.5, 0.9}) == std::vector<double>{1.0, 1.0});
    CHECK(holm_bonferroni({0.2}) == std::vector<double>{0.2});
    CHECK_THROWS_AS(holm_bonferroni({0.0}), ConfigError);
}

TEST_CASE("holm adjustment is monotone and dominates raw p") {
    Rng rng(19);
    for (int trial = 0; trial < 20; ++trial) {
        const int m = 2 + static_cast<int>(rng.below(6));
        std::vector<double> p;
        for (int i = 0; i < m; ++i) p.push_back(0.001 + 0.998 * rng.uniform());
        const auto adj = holm_bonferroni(p);
        std::vector<std::size_t> order(m);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t i, std::size_t j) { return p[i] < p[j]; });
        for (int i = 0; i < m; ++i) {
            CHECK(adj[i] >= p[i]);
            CHECK(adj[i] <= 1.0);
            if (i > 0) CHECK(adj[order[i]] >= adj[order[i - 1]]);
        }
    }
}

TEST_CASE("cohens d on crafted samples") {
    CHECK(cohens_d({1, 2, 3}, {1, 2, 3}) == doctest::Approx(0.0));
    CHECK(cohens_d({0, 1, 2}, {-1, 0, 1}) == doctest::Approx(1.0));
    CHECK(cohens_d({-1, 0, 1}, {0, 1, 2}) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(cohens_d({1.0}, {1, 2}), TooFewPointsError);
    CHECK_THROWS_AS(cohens_d({2, 2}, {1, 1}), ZeroVarianceError);
    CHECK(cohens_d({2, 2}, {2, 2}) == 0.0);  // equal constants: defined as 0
}

TEST_CASE("spearman reproduces the rank-formula value") {
    // ranks {1,2,3,4} vs {1,2,4,3}: rho = 1 - 6*2/(4*15) = 0.8 exactly
    const double rho = spearman_rho({0, 1, 2, 3}, {-0.28, 0.02, 0.49, 0.32});
    CHECK(rho == 0.8);
    CHECK(spearman_rho({1, 2, 3}, {10, 20, 30}) == doctest::Approx(1.0));
    CHECK(spearman_rho({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(spearman_rho({1, 1, 1}, {1, 2, 3}), ZeroVarianceError);
    CHECK_THROWS_AS(spearman_rho({1, 2}, {1, 2}), TooFewPointsError);
}

TEST_CASE("spearman bootstrap brackets the point estimate") {
    const SpearmanResult r =
        spearman_bootstrap({0, 1, 2, 3, 4, 5}, {0.1, 0.5, 0.4, 0.9, 0.8, 1.2}, 2000, 42);
    CHECK(!r.tie_degenerate);
    CHECK(r.ci_lo <= r.rho);
    CHECK(r.rho <= r.ci_hi);
    CHECK(r.rho > 0.5);

    // degenerate ranks report rho = 0 with the flag
    const SpearmanResult d = spearman_bootstrap({1, 1, 1, 1}, {1, 2, 3, 4}, 100, 0);
    CHECK(d.tie_degenerate);
    CHECK(d.rho == 0.0);

    // determinism under seed
    const SpearmanResult r2 =
        spearman_bootstrap({0, 1, 2, 3, 4, 5}, {0.1, 0.5, 0.4, 0.9, 0.8, 1.2}, 2000, 42);
    CHECK(r2.ci_lo == r.ci_lo);
    CHECK(r2.ci_hi == r.ci_hi);
}
