#include "relrad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "relrad/rng.hpp"

namespace relrad {

double sigmoid(double x) {
    // split to avoid overflow in exp for large |x|
    if (x >= 0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// ---- regularized incomplete beta, for the Student-t CDF -----------------------

namespace {

// Continued fraction for I_x(a,b) (modified Lentz).
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kFpMin = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

double inc_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * betacf(a, b, x) / a;
    }
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

// CDF of Student-t with df degrees of freedom.
double t_cdf(double t, int df) {
    const double v = static_cast<double>(df);
    const double x = v / (v + t * t);
    const double half_tail = 0.5 * inc_beta(v / 2.0, 0.5, x);
    return t >= 0.0 ? 1.0 - half_tail : half_tail;
}

}  // namespace

double t_critical(double level, int df) {
    if (df < 1) throw ConfigError("t_critical needs df >= 1");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("t_critical level in (0,1)");
    const double target = 0.5 + level / 2.0;  // upper quantile of two-sided interval
    double lo = 0.0, hi = 1.0;
    while (t_cdf(hi, df) < target) hi *= 2.0;  // bracket
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (t_cdf(mid, df) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> rankify(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = mid;
        i = j + 1;
    }
    return ranks;
}

SummaryStat summarize(const std::vector<double>& values) {
    if (values.empty()) throw TooFewPointsError("summarize needs at least one value");
    SummaryStat s;
    s.values = values;
    const double n = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() == 1) {
        s.ci_lo = s.ci_hi = s.mean;
        return s;
    }
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / (n - 1.0));
    const double half = t_critical(0.95, static_cast<int>(values.size()) - 1) * s.sd /
                        std::sqrt(n);
    s.ci_lo = s.mean - half;
    s.ci_hi = s.mean + half;
    return s;
}

// ---- evaluation metrics ------------------------------------------------------

std::map<std::string, double> classification_metrics(const std::vector<double>& scores,
                                                     const std::vector<int>& labels,
                                                     double threshold) {
    if (scores.size() != labels.size()) {
        throw ShapeMismatchError("scores and labels length differ");
    }
    if (scores.empty()) throw TooFewPointsError("no samples to evaluate");

    std::size_t n_pos = 0, n_neg = 0;
    for (int y : labels) (y ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0) {
        throw DegenerateLabelsError("both classes required for classification metrics");
    }

    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = sigmoid(scores[i]) >= threshold;
        if (pred && labels[i]) ++tp;
        if (pred && !labels[i]) ++fp;
        if (!pred && labels[i]) ++fn;
    }
    const double precision = (tp + fp) ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double recall = (tp + fn) ? static_cast<double>(tp) / (tp + fn) : 0.0;
    const double f1 =
        (precision + recall > 0) ? 2 * precision * recall / (precision + recall) : 0.0;

    // ROC-AUC by the Mann-Whitney rank identity with mid-rank ties.
    const std::vector<double> ranks = rankify(scores);
    double pos_rank_sum = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i]) pos_rank_sum += ranks[i];
    }
    const double n1 = static_cast<double>(n_pos), n0 = static_cast<double>(n_neg);
    const double roc_auc = (pos_rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);

    // PR-AUC by step interpolation over descending-score tie groups.
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return scores[i] > scores[j]; });
    double pr_auc = 0.0, prev_recall = 0.0;
    std::size_t ctp = 0, cfp = 0, i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        for (std::size_t t = i; t <= j; ++t) (labels[order[t]] ? ctp : cfp)++;
        const double rec = static_cast<double>(ctp) / n1;
        const double prec = static_cast<double>(ctp) / static_cast<double>(ctp + cfp);
        pr_auc += (rec - prev_recall) * prec;
        prev_recall = rec;
        i = j + 1;
    }

    return {{"f1", f1},
            {"precision", precision},
            {"recall", recall},
            {"roc_auc", roc_auc},
            {"pr_auc", pr_auc}};
}

std::map<std::string, double> regression_metrics(const std::vector<double>& preds,
                                                 const std::vector<double>& targets) {
    if (preds.size() != targets.size()) {
        throw ShapeMismatchError("preds and targets length differ");
    }
    if (preds.size() < 2) throw TooFewPointsError("regression metrics need >= 2 points");
    const double n = static_cast<double>(targets.size());
    const double mean = std::accumulate(targets.begin(), targets.end(), 0.0) / n;
    double sse = 0.0, sst = 0.0, abs_err = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double e = preds[i] - targets[i];
        sse += e * e;
        sst += (targets[i] - mean) * (targets[i] - mean);
        abs_err += std::fabs(e);
    }
    if (sst == 0.0) throw ZeroVarianceError("targets have zero variance; r2 undefined");
    return {{"r2", 1.0 - sse / sst}, {"mae", abs_err / n}};
}

double ece(const std::vector<double>& probs, const std::vector<int>& labels, int n_bins) {
    if (probs.size() != labels.size()) {
        throw ShapeMismatchError("probs and labels length differ");
    }
    if (n_bins < 1) throw ConfigError("ece needs >= 1 bin");
    if (probs.empty()) throw TooFewPointsError("no samples for ece");
    std::vector<double> conf_sum(n_bins, 0.0), acc_sum(n_bins, 0.0);
    std::vector<int> count(n_bins, 0);
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = probs[i];
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("ece probabilities must be in [0,1]");
        int b = static_cast<int>(p * n_bins);
        if (b == n_bins) b = n_bins - 1;  // p = 1.0 lands in the top bin
        conf_sum[b] += p;
        acc_sum[b] += labels[i];
        ++count[b];
    }
    double out = 0.0;
    const double n = static_cast<double>(probs.size());
    for (int b = 0; b < n_bins; ++b) {
        if (count[b] == 0) continue;
        const double conf = conf_sum[b] / count[b];
        const double acc = acc_sum[b] / count[b];
        out += (count[b] / n) * std::fabs(acc - conf);
    }
    return out;
}

// ---- statistical tests -------------------------------------------------------

TestResult wilcoxon_signed_rank(const std::vector<double>& a,
                                const std::vector<double>& b) {
    if (a.size() != b.size()) throw ShapeMismatchError("paired samples differ in length");
    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d != 0.0) diffs.push_back(d);
    }
    const int n = static_cast<int>(diffs.size());
    if (n < 5) throw TooFewPairsError("need >= 5 nonzero differences, have " +
                                      std::to_string(n));

    std::vector<double> abs_d(diffs.size());
    for (std::size_t i = 0; i < diffs.size(); ++i) abs_d[i] = std::fabs(diffs[i]);
    const std::vector<double> ranks = rankify(abs_d);

    double w_plus = 0.0;
    for (std::size_t i = 0; i < diffs.size(); ++i) {
        if (diffs[i] > 0) w_plus += ranks[i];
    }
    const double mu = n * (n + 1) / 4.0;

    double p;
    if (n <= 12) {
        // exact null: all 2^n sign assignments of the observed ranks
        const double obs_dev = std::fabs(w_plus - mu);
        const std::uint64_t total = 1ULL << n;
        std::uint64_t extreme = 0;
        for (std::uint64_t mask = 0; mask < total; ++mask) {
            double w = 0.0;
            for (int i = 0; i < n; ++i) {
                if (mask & (1ULL << i)) w += ranks[i];
            }
            if (std::fabs(w - mu) >= obs_dev - 1e-9) ++extreme;
        }
        p = static_cast<double>(extreme) / static_cast<double>(total);
    } else {
        // normal approximation, tie-corrected variance, continuity correction
        double tie_term = 0.0;
        std::vector<double> sorted = abs_d;
        std::sort(sorted.begin(), sorted.end());
        std::size_t i = 0;
        while (i < sorted.size()) {
            std::size_t j = i;
            while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
            const double t = static_cast<double>(j - i + 1);
            tie_term += t * t * t - t;
            i = j + 1;
        }
        const double var = n * (n + 1) * (2.0 * n + 1) / 24.0 - tie_term / 48.0;
        if (var <= 0.0) {
            p = 1.0;
        } else {
            const double dev = w_plus - mu;
            const double cc = dev > 0 ? -0.5 : (dev < 0 ? 0.5 : 0.0);
            const double z = (dev + cc) / std::sqrt(var);
            p = std::min(1.0, 2.0 * (1.0 - normal_cdf(std::fabs(z))));
        }
    }

    TestResult r;
    r.statistic = w_plus;
    r.p_value = std::max(p, std::numeric_limits<double>::min());
    r.adjusted_p = r.p_value;
    r.n = n;
    try {
        r.effect_size_d = cohens_d(a, b);
    } catch (const Error&) {
        // constant samples: direction-only effect
        const double ma = std::accumulate(a.begin(), a.end(), 0.0);
        const double mb = std::accumulate(b.begin(), b.end(), 0.0);
        r.effect_size_d = ma == mb ? 0.0
                          : std::copysign(std::numeric_limits<double>::infinity(),
                                          ma - mb);
    }
    return r;
}

std::vector<double> holm_bonferroni(const std::vector<double>& p_values) {
    const std::size_t m = p_values.size();
    for (double p : p_values) {
        if (!(p > 0.0 && p <= 1.0)) throw ConfigError("p-values must lie in (0,1]");
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return p_values[i] < p_values[j]; });
    std::vector<double> adjusted(m, 0.0);
    double running = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double scaled = std::min(1.0, (m - i) * p_values[order[i]]);
        running = std::max(running, scaled);
        adjusted[order[i]] = running;
    }
    return adjusted;
}

double cohens_d(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2) {
        throw TooFewPointsError("cohens_d needs >= 2 values per sample");
    }
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / na;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / nb;
    double va = 0.0, vb = 0.0;
    for (double v : a) va += (v - ma) * (v - ma);
    for (double v : b) vb += (v - mb) * (v - mb);
    va /= na - 1.0;
    vb /= nb - 1.0;
    const double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
    if (pooled == 0.0) {
        if (ma == mb) return 0.0;
        throw ZeroVarianceError("pooled variance is zero");
    }
    return (ma - mb) / std::sqrt(pooled);
}

namespace {

// Pearson on pre-ranked data; throws ZeroVarianceError on degenerate ranks.
double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw ZeroVarianceError("degenerate ranks");
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ShapeMismatchError("paired samples differ in length");
    if (x.size() < 3) throw TooFewPointsError("spearman needs >= 3 points");
    return pearson(rankify(x), rankify(y));
}

SpearmanResult spearman_bootstrap(const std::vector<double>& x,
                                  const std::vector<double>& y, int n_boot,
                                  std::uint64_t seed) {
    if (x.size() != y.size()) throw ShapeMismatchError("paired samples differ in length");
    if (x.size() < 3) throw TooFewPointsError("spearman needs >= 3 points");
    if (n_boot < 1) throw ConfigError("n_boot must be >= 1");

    SpearmanResult res;
    try {
        res.rho = spearman_rho(x, y);
    } catch (const ZeroVarianceError&) {
        res.tie_degenerate = true;
        return res;  // rho reported as 0 with the flag set
    }

    const std::size_t n = x.size();
    Rng rng(seed);
    std::vector<double> boots;
    boots.reserve(n_boot);
    std::vector<double> bx(n), by(n);
    for (int b = 0; b < n_boot; ++b) {
        double rho = 0.0;
        bool ok = false;
        for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t j = static_cast<std::size_t>(rng.below(n));
                bx[i] = x[j];
                by[i] = y[j];
            }
            try {
                rho = pearson(rankify(bx), rankify(by));
                ok = true;
            } catch (const ZeroVarianceError&) {
                // resample drew a constant side; redraw
            }
        }
        boots.push_back(ok ? rho : 0.0);
    }
    std::sort(boots.begin(), boots.end());
    const std::size_t last = boots.size() - 1;
    const auto lo_idx = static_cast<std::size_t>(std::floor(0.025 * last));
    const auto hi_idx = static_cast<std::size_t>(std::ceil(0.975 * last));
    res.ci_lo = boots[lo_idx];
    res.ci_hi = boots[hi_idx];
    return res;
}

}  // namespace relrad
