#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "relrad/errors.hpp"

namespace relrad {

// ---- basic numerics ----------------------------------------------------------

double sigmoid(double x);

// Standard normal CDF.
double normal_cdf(double z);

// Two-sided Student-t critical value t such that P(|T| <= t) = level, with
// df degrees of freedom (e.g. level 0.95, df 4 -> 2.776445...).
double t_critical(double level, int df);

// Mid-rank transform (average ranks for ties), 1-based ranks.
std::vector<double> rankify(const std::vector<double>& v);

// ---- per-seed summaries ------------------------------------------------------

// Mean, sample standard deviation, and t-distribution CI95 (df = n - 1).
// A single value yields sd 0 and a degenerate interval at the mean.
struct SummaryStat {
    std::vector<double> values;
    double mean = 0.0;
    double sd = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};
SummaryStat summarize(const std::vector<double>& values);

// Per-metric summaries keyed by metric name (f1, r2, ...).
using MetricReport = std::map<std::string, SummaryStat>;

// ---- evaluation metrics ------------------------------------------------------

// Scores are raw logits; predictions are sigmoid(score) >= threshold.
// Returns {f1, precision, recall, roc_auc, pr_auc}. Zero-denominator
// precision/recall/F1 are defined as 0. ROC-AUC uses the rank (Mann-Whitney)
// statistic with mid-rank ties; PR-AUC uses step interpolation over
// descending-score groups. Throws DegenerateLabelsError when one class is
// absent (the AUCs are undefined).
std::map<std::string, double> classification_metrics(const std::vector<double>& scores,
                                                     const std::vector<int>& labels,
                                                     double threshold = 0.5);

// {r2, mae}; r2 = 1 - SSE/SST. Throws ZeroVarianceError when SST = 0 and
// TooFewPointsError below 2 points.
std::map<std::string, double> regression_metrics(const std::vector<double>& preds,
                                                 const std::vector<double>& targets);

// Expected calibration error over equal-width probability bins (empty bins
// are skipped). `probs` must already be in [0, 1].
double ece(const std::vector<double>& probs, const std::vector<int>& labels,
           int n_bins = 10);

// ---- statistical tests -------------------------------------------------------

struct TestResult {
    double statistic = 0.0;    // W+ for Wilcoxon
    double p_value = 1.0;
    double adjusted_p = 1.0;   // = p_value until a Holm family adjusts it
    double effect_size_d = 0.0;
    int n = 0;                 // pairs remaining after zero-difference removal
};

// Paired two-sided Wilcoxon signed-rank test. Zero differences are dropped;
// absolute differences are mid-ranked. For n <= 12 the p-value is exact by
// enumerating all 2^n sign assignments (two-sided via deviation of W+ from
// its null mean); beyond that a normal approximation with continuity
// correction and tie-corrected variance is used. Throws TooFewPairsError when
// fewer than 5 nonzero differences remain.
TestResult wilcoxon_signed_rank(const std::vector<double>& a,
                                const std::vector<double>& b);

// Holm-Bonferroni step-down adjustment; result is in input order, capped at 1.
std::vector<double> holm_bonferroni(const std::vector<double>& p_values);

// (mean_a - mean_b) / pooled sd, with (n-1)-weighted pooled variance.
// Throws ZeroVarianceError when the pooled variance is 0.
double cohens_d(const std::vector<double>& a, const std::vector<double>& b);

// Spearman rank correlation: Pearson over mid-ranks. If either side's ranks
// are all tied the coefficient is undefined; spearman_rho throws
// ZeroVarianceError, while the bootstrap wrapper reports rho = 0 with
// tie_degenerate set (callers surface the flag).
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

struct SpearmanResult {
    double rho = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    bool tie_degenerate = false;
};

// rho plus a percentile-bootstrap CI95 over paired resamples. Resamples whose
// ranks degenerate (all-equal x or y) are redrawn. Throws TooFewPointsError
// below 3 points.
SpearmanResult spearman_bootstrap(const std::vector<double>& x,
                                  const std::vector<double>& y, int n_boot = 10000,
                                  std::uint64_t seed = 0);

}  // namespace relrad
