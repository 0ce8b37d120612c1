#include "relrad/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <sstream>

#include "nlohmann/json.hpp"
#include "relrad/errors.hpp"
#include "relrad/rng.hpp"
#include "relrad/text.hpp"

namespace relrad {

void validate(const SamplingPlan& plan) {
    if (!(plan.ratio_neg_per_pos > 0.0)) {
        throw ConfigError("sampling plan: ratio_neg_per_pos must be positive");
    }
    const double w[3] = {plan.mix_type_compatible, plan.mix_hard, plan.mix_random};
    for (double x : w) {
        if (!(x >= 0.0)) throw ConfigError("sampling plan: mix weights must be nonnegative");
    }
    const double sum = w[0] + w[1] + w[2];
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ConfigError("sampling plan: mix weights must sum to 1, got " + fmt_double(sum));
    }
    if (!(plan.hard_similarity_threshold >= 0.0 && plan.hard_similarity_threshold <= 1.0)) {
        throw ConfigError("sampling plan: hard_similarity_threshold must lie in [0, 1]");
    }
}

namespace {

// Largest-remainder apportionment of `total` over `weights`; counts sum to
// `total` exactly, ties broken by index.
std::array<std::size_t, 3> apportion(std::size_t total, const std::array<double, 3>& weights) {
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> frac{};
    std::size_t used = 0;
    for (int i = 0; i < 3; ++i) {
        const double t = static_cast<double>(total) * weights[i];
        counts[i] = static_cast<std::size_t>(std::floor(t + 1e-12));
        frac[i] = t - static_cast<double>(counts[i]);
        used += counts[i];
    }
    std::array<int, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return frac[a] > frac[b]; });
    for (std::size_t r = 0; used + r < total; ++r) counts[order[r]] += 1;
    return counts;
}

}  // namespace

std::vector<EdgePair> sample_negatives(const SchemaGraph& g,
                                       const std::vector<EdgePair>& positives,
                                       const SamplingPlan& plan,
                                       std::vector<std::string>* warnings) {
    validate(plan);
    const auto want = static_cast<std::size_t>(std::llround(
        plan.ratio_neg_per_pos * static_cast<double>(positives.size())));
    if (want == 0) return {};

    std::set<EdgePair> excluded(positives.begin(), positives.end());
    for (const auto& e : g.edges()) {
        if (e.kind == EdgeKind::ForeignKey) excluded.insert({e.src, e.dst});
    }

    // Attribute ids in sorted order so the pools (and therefore the draws)
    // do not depend on graph construction order.
    std::vector<std::string> ids;
    for (const auto& id : g.node_ids()) {
        if (g.node_kind(id) == NodeKind::Attribute) ids.push_back(id);
    }
    std::vector<DataType> types(ids.size());
    std::vector<std::vector<std::string>> tokens(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto& rec = g.record(ids[i]);
        types[i] = rec.data_type;
        tokens[i] = tokenize(rec.name);
    }

    // Stratum pools. The hard stratum overlaps the other two by design;
    // dedup happens at draw time.
    enum { kTypeCompat = 0, kHard = 1, kRandom = 2 };
    static const char* kStratumName[3] = {"type-compatible", "hard", "random-incompatible"};
    std::array<std::vector<EdgePair>, 3> pool;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        for (std::size_t j = 0; j < ids.size(); ++j) {
            if (i == j) continue;
            EdgePair p{ids[i], ids[j]};
            if (excluded.count(p)) continue;
            if (types[i] == types[j]) {
                pool[kTypeCompat].push_back(p);
            } else {
                pool[kRandom].push_back(p);
            }
            if (token_jaccard(tokens[i], tokens[j]) >= plan.hard_similarity_threshold) {
                pool[kHard].push_back(p);
            }
        }
    }
    const std::size_t universe = pool[kTypeCompat].size() + pool[kRandom].size();
    if (universe < want) {
        std::ostringstream msg;
        msg << "negative pool exhausted: requested " << want << " but only " << universe
            << " candidate pairs exist";
        throw PoolExhaustedError(msg.str());
    }

    Rng rng(plan.seed);
    for (auto& p : pool) rng.shuffle(p);

    const auto target = apportion(
        want, {plan.mix_type_compatible, plan.mix_hard, plan.mix_random});

    std::vector<EdgePair> drawn;
    drawn.reserve(want);
    std::set<EdgePair> seen;
    std::array<std::size_t, 3> cursor{};
    const auto draw_from = [&](int s, std::size_t count) {
        std::size_t got = 0;
        while (got < count && cursor[s] < pool[s].size()) {
            const EdgePair& p = pool[s][cursor[s]++];
            if (seen.insert(p).second) {
                drawn.push_back(p);
                ++got;
            }
        }
        return got;
    };

    for (int s = 0; s < 3; ++s) {
        const std::size_t got = draw_from(s, target[s]);
        if (got < target[s] && warnings != nullptr) {
            std::ostringstream msg;
            msg << kStratumName[s] << " stratum exhausted: drew " << got << " of "
                << target[s] << "; deficit spills to the type-compatible stratum";
            warnings->push_back(msg.str());
        }
    }
    // Deficit refill: type-compatible first, then whatever remains elsewhere.
    for (int s : {kTypeCompat, kHard, kRandom}) {
        if (drawn.size() >= want) break;
        draw_from(s, want - drawn.size());
    }
    if (drawn.size() < want) {
        // Unreachable given the universe check above, but kept as a guard.
        std::ostringstream msg;
        msg << "negative pool exhausted: requested " << want << " but drew " << drawn.size();
        throw PoolExhaustedError(msg.str());
    }
    return drawn;
}

const char* to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

std::vector<Split> split(const std::vector<int>& labels,
                         std::array<double, 3> fractions, bool stratify,
                         std::uint64_t seed) {
    for (double f : fractions) {
        if (!(f >= 0.0)) throw ConfigError("split: fractions must be nonnegative");
    }
    const double sum = fractions[0] + fractions[1] + fractions[2];
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ConfigError("split: fractions must sum to 1, got " + fmt_double(sum));
    }

    const std::size_t n = labels.size();
    std::vector<Split> out(n, Split::Train);
    Rng rng(seed);

    const auto assign = [&](std::vector<std::size_t>& members) {
        rng.shuffle(members);
        const auto counts = apportion(members.size(), fractions);
        std::size_t at = 0;
        for (int s = 0; s < 3; ++s) {
            for (std::size_t k = 0; k < counts[s]; ++k) {
                out[members[at++]] = static_cast<Split>(s);
            }
        }
        return counts;
    };

    if (!stratify) {
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        assign(all);
        return out;
    }

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(i);
    for (auto& [label, members] : by_class) {
        const auto counts = assign(members);
        for (int s = 0; s < 3; ++s) {
            if (counts[s] == 0) {
                std::ostringstream msg;
                msg << "stratified split leaves class " << label << " empty in the "
                    << to_string(static_cast<Split>(s)) << " split ("
                    << members.size() << " samples in class)";
                throw TooFewSamplesError(msg.str());
            }
        }
    }
    return out;
}

std::string split_json(const std::vector<std::string>& ids,
                       const std::vector<Split>& assignment) {
    if (ids.size() != assignment.size()) {
        throw ShapeMismatchError("split_json: ids and assignment differ in length");
    }
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < ids.size(); ++i) j[ids[i]] = to_string(assignment[i]);
    return j.dump();
}

std::vector<int> quantile_bins(const std::vector<double>& values, int n_bins) {
    if (n_bins <= 0) throw ConfigError("quantile_bins: n_bins must be positive");
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<int> bins(n, 0);
    for (std::size_t r = 0; r < n; ++r) {
        bins[order[r]] = static_cast<int>(r * static_cast<std::size_t>(n_bins) / n);
    }
    return bins;
}

}  // namespace relrad
