#include "relrad/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <set>
#include <sstream>
#include <utility>

#include <Eigen/Dense>

#include "relrad/errors.hpp"
#include "relrad/features.hpp"
#include "relrad/rng.hpp"
#include "relrad/text.hpp"

namespace relrad {

void validate(const GeneratorParams& p) {
    if (p.n_tables < 1) throw ConfigError("generator: n_tables must be >= 1");
    if (p.attrs_min < 1 || p.attrs_max < p.attrs_min) {
        throw ConfigError("generator: need 1 <= attrs_min <= attrs_max");
    }
    if (p.target_radius < 0 || p.target_radius > 6) {
        throw ConfigError("generator: target_radius must lie in [0, 6]");
    }
    if (!(p.candidate_density > 0.0 && p.candidate_density <= 1.0)) {
        throw ConfigError("generator: candidate_density must lie in (0, 1]");
    }
    if (p.degree_profile.empty()) throw ConfigError("generator: degree profile is empty");
    double sum = 0.0;
    for (const auto& bin : p.degree_profile) {
        if (bin.degree < 0) throw ConfigError("generator: negative degree in profile");
        if (!(bin.probability >= 0.0)) {
            throw ConfigError("generator: negative probability in profile");
        }
        sum += bin.probability;
        if (bin.probability > 0.0 && bin.degree > p.n_tables - 1) {
            std::ostringstream msg;
            msg << "degree " << bin.degree << " cannot be realized on " << p.n_tables
                << " tables";
            throw InfeasibleParamsError(msg.str());
        }
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ConfigError("generator: degree probabilities must sum to 1, got " +
                          fmt_double(sum));
    }
    if (!(p.positive_fraction > 0.0 && p.positive_fraction < 1.0)) {
        throw ConfigError("generator: positive_fraction must lie in (0, 1)");
    }
}

namespace {

constexpr const char* kPalette[] = {
    "name",       "status",   "code",     "created_at", "updated_at", "amount",
    "qty",        "price",    "email",    "phone",      "address",    "city",
    "country",    "note",     "flag",     "score",      "rank",       "level",
    "size",       "weight",   "length",   "width",      "height",     "owner",
    "grp",        "kind",     "category", "label",      "title",      "body",
    "url",        "state",    "region",   "zip",        "active",     "total",
    "balance",    "currency", "started_on", "ended_on"};
constexpr int kPaletteSize = static_cast<int>(sizeof(kPalette) / sizeof(kPalette[0]));

// Fraction of FK pairs that also appear as candidate edges — the candidate
// heuristic "recall". Below 1 so some true keys lack a covering candidate.
constexpr double kCandidateRecall = 0.9;

std::string table_name(int index, int n_tables) {
    int width = 1, x = n_tables - 1;
    while (x >= 10) {
        x /= 10;
        ++width;
    }
    width = std::max(width, 2);
    std::string digits = std::to_string(index);
    return "t" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits;
}

DataType draw_type(Rng& rng) {
    const double u = rng.uniform();
    if (u < 0.35) return DataType::Int;
    if (u < 0.65) return DataType::Text;
    if (u < 0.80) return DataType::Float;
    if (u < 0.90) return DataType::Date;
    return DataType::Bool;
}

// Largest-remainder quotas: how many tables get each profile degree.
std::vector<int> degree_quotas(int n, const std::vector<DegreeBin>& profile) {
    std::vector<int> quota(profile.size(), 0);
    std::vector<double> frac(profile.size(), 0.0);
    int used = 0;
    for (std::size_t i = 0; i < profile.size(); ++i) {
        const double t = n * profile[i].probability;
        quota[i] = static_cast<int>(std::floor(t + 1e-12));
        frac[i] = t - quota[i];
        used += quota[i];
    }
    std::vector<std::size_t> order(profile.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (int r = 0; used + r < n; ++r) quota[order[static_cast<std::size_t>(r)]] += 1;
    return quota;
}

// Havel-Hakimi realization of the degree sequence with a seeded priority
// order breaking ties, so equal-degree tables are wired differently run to
// run (but identically for one seed). Unsatisfiable residue is dropped; the
// TV tolerance absorbs the (rare) resulting deficit.
std::vector<std::pair<int, int>> realize_degrees(std::vector<int> residual, Rng& rng) {
    const int n = static_cast<int>(residual.size());
    std::vector<int> prio(n);
    for (int i = 0; i < n; ++i) prio[i] = i;
    rng.shuffle(prio);
    std::vector<int> rank(n);
    for (int i = 0; i < n; ++i) rank[prio[i]] = i;

    std::vector<std::set<int>> adj(n);
    std::vector<std::pair<int, int>> edges;
    const auto by_priority = [&](int a, int b) {
        return residual[a] != residual[b] ? residual[a] > residual[b] : rank[a] < rank[b];
    };
    for (;;) {
        int u = -1;
        for (int i = 0; i < n; ++i) {
            if (residual[i] > 0 && (u < 0 || by_priority(i, u))) u = i;
        }
        if (u < 0) break;
        std::vector<int> targets;
        for (int v = 0; v < n; ++v) {
            if (v != u && residual[v] > 0 && !adj[u].count(v)) targets.push_back(v);
        }
        std::sort(targets.begin(), targets.end(), by_priority);
        const int want = residual[u];
        const int take = std::min<int>(want, static_cast<int>(targets.size()));
        residual[u] = 0;
        for (int i = 0; i < take; ++i) {
            const int v = targets[static_cast<std::size_t>(i)];
            adj[u].insert(v);
            adj[v].insert(u);
            residual[v] -= 1;
            edges.emplace_back(std::min(u, v), std::max(u, v));
        }
    }
    return edges;
}

struct AttrPlan {
    std::string name;
    FeatureRecord rec;
};

}  // namespace

SchemaGraph generate_schema(const GeneratorParams& p) {
    validate(p);
    Rng rng(p.seed);

    // Degree sequence from quotas, shuffled onto tables, parity-fixed.
    const auto quota = degree_quotas(p.n_tables, p.degree_profile);
    std::vector<int> degrees;
    degrees.reserve(static_cast<std::size_t>(p.n_tables));
    for (std::size_t i = 0; i < quota.size(); ++i) {
        for (int c = 0; c < quota[i]; ++c) degrees.push_back(p.degree_profile[i].degree);
    }
    rng.shuffle(degrees);
    int total = 0;
    for (int d : degrees) total += d;
    if (total % 2 != 0) {
        for (auto& d : degrees) {
            if (d < p.n_tables - 1) {
                d += 1;
                break;
            }
        }
    }
    const auto backbone = realize_degrees(degrees, rng);

    // Per-table plans: row count, id column, filler columns.
    std::vector<std::vector<AttrPlan>> plan(static_cast<std::size_t>(p.n_tables));
    std::vector<std::int64_t> rows(static_cast<std::size_t>(p.n_tables));
    std::vector<int> budget(static_cast<std::size_t>(p.n_tables));
    for (int t = 0; t < p.n_tables; ++t) {
        rows[t] = std::llround(std::pow(10.0, rng.uniform(1.0, 4.0)));
        budget[t] = p.attrs_min +
                    static_cast<int>(rng.below(
                        static_cast<std::uint64_t>(p.attrs_max - p.attrs_min + 1)));
        FeatureRecord id;
        id.name = "id";
        id.data_type = DataType::Int;
        id.row_count = rows[t];
        id.distinct_count = rows[t];
        plan[t].push_back({"id", id});
    }

    // FK columns claim slots on the referencing side; the referenced side
    // always exposes its id column.
    struct FkPlan {
        int from_table;
        std::size_t from_col;
        int to_table;
    };
    std::vector<FkPlan> fks;
    for (const auto& [a, b] : backbone) {
        const bool a_free = static_cast<int>(plan[a].size()) < budget[a];
        const bool b_free = static_cast<int>(plan[b].size()) < budget[b];
        int from = a, to = b;
        if (a_free != b_free) {
            from = a_free ? a : b;
            to = a_free ? b : a;
        } else if (rng.below(2) == 1) {
            std::swap(from, to);
        }
        FeatureRecord fkrec;
        fkrec.data_type = DataType::Int;
        fkrec.row_count = rows[from];
        fkrec.distinct_count = std::max<std::int64_t>(
            1, std::llround(static_cast<double>(std::min(rows[from], rows[to])) *
                            rng.uniform(0.3, 1.0)));
        fkrec.distinct_count = std::min(fkrec.distinct_count, rows[from]);
        fkrec.null_fraction = rng.uniform(0.0, 0.1);
        if (static_cast<int>(plan[from].size()) < budget[from]) {
            std::string base = table_name(to, p.n_tables) + "_id";
            std::string name = base;
            int suffix = 2;
            const auto taken = [&](const std::string& s) {
                for (const auto& col : plan[from]) {
                    if (col.name == s) return true;
                }
                return false;
            };
            while (taken(name)) name = base + std::to_string(suffix++);
            fkrec.name = name;
            plan[from].push_back({name, fkrec});
            fks.push_back({from, plan[from].size() - 1, to});
        } else {
            // No slot left: repurpose an existing non-id column (or fall back
            // to the id itself) as the referencing column.
            std::size_t col = 0;
            for (std::size_t i = 1; i < plan[from].size(); ++i) {
                if (plan[from][i].rec.data_type == DataType::Int) {
                    col = i;
                    break;
                }
            }
            if (col == 0 && plan[from].size() > 1) col = 1;
            if (col != 0) {
                plan[from][col].rec.data_type = DataType::Int;
                plan[from][col].rec.distinct_count =
                    std::min(plan[from][col].rec.distinct_count, rows[from]);
            }
            fks.push_back({from, col, to});
        }
    }

    // Filler columns up to each table's budget.
    for (int t = 0; t < p.n_tables; ++t) {
        std::vector<int> palette(kPaletteSize);
        for (int i = 0; i < kPaletteSize; ++i) palette[i] = i;
        rng.shuffle(palette);
        int next = 0;
        while (static_cast<int>(plan[t].size()) < budget[t]) {
            std::string name = next < kPaletteSize
                                   ? kPalette[palette[next]]
                                   : "col" + std::to_string(next);
            ++next;
            bool dup = false;
            for (const auto& col : plan[t]) dup = dup || col.name == name;
            if (dup) continue;
            FeatureRecord rec;
            rec.name = name;
            rec.data_type = draw_type(rng);
            rec.row_count = rows[t];
            rec.distinct_count = std::max<std::int64_t>(
                1, std::llround(static_cast<double>(rows[t]) * rng.uniform(0.02, 1.0)));
            rec.null_fraction = rng.uniform(0.0, 0.3);
            rec.mean_length =
                rec.data_type == DataType::Text ? rng.uniform(3.0, 24.0) : 0.0;
            plan[t].push_back({name, rec});
        }
    }

    SchemaGraphBuilder b;
    for (int t = 0; t < p.n_tables; ++t) b.add_table(table_name(t, p.n_tables));
    for (int t = 0; t < p.n_tables; ++t) {
        const auto tid = table_name(t, p.n_tables);
        for (auto& col : plan[t]) {
            col.rec.name = col.name;
            b.add_attribute(tid, col.name, col.rec);
        }
    }
    std::set<std::pair<std::string, std::string>> fk_pairs;
    for (const auto& fk : fks) {
        const auto src =
            table_name(fk.from_table, p.n_tables) + "." + plan[fk.from_table][fk.from_col].name;
        const auto dst = table_name(fk.to_table, p.n_tables) + ".id";
        if (fk_pairs.insert({src, dst}).second) b.add_foreign_key(src, dst);
    }

    // Candidate edges: most FK pairs, plus density-sampled type-compatible
    // cross-table non-FK pairs (canonical orientation).
    for (const auto& [src, dst] : fk_pairs) {
        if (rng.uniform() < kCandidateRecall) b.add_candidate(src, dst);
    }
    std::vector<std::pair<std::string, std::string>> attrs;  // (id, owner table)
    for (int t = 0; t < p.n_tables; ++t) {
        const auto tid = table_name(t, p.n_tables);
        for (const auto& col : plan[t]) attrs.push_back({tid + "." + col.name, tid});
    }
    std::sort(attrs.begin(), attrs.end());
    std::map<std::string, DataType> type_of;
    for (int t = 0; t < p.n_tables; ++t) {
        const auto tid = table_name(t, p.n_tables);
        for (const auto& col : plan[t]) type_of[tid + "." + col.name] = col.rec.data_type;
    }
    for (std::size_t i = 0; i < attrs.size(); ++i) {
        for (std::size_t j = i + 1; j < attrs.size(); ++j) {
            if (attrs[i].second == attrs[j].second) continue;
            if (type_of[attrs[i].first] != type_of[attrs[j].first]) continue;
            if (fk_pairs.count({attrs[i].first, attrs[j].first}) ||
                fk_pairs.count({attrs[j].first, attrs[i].first})) {
                continue;
            }
            if (rng.uniform() < p.candidate_density) {
                b.add_candidate(attrs[i].first, attrs[j].first);
            }
        }
    }
    return b.build();
}

std::map<int, double> fk_degree_histogram(const SchemaGraph& g) {
    const auto adj = fk_table_adjacency(g);
    std::map<int, double> hist;
    for (const auto& [table, nbrs] : adj) hist[static_cast<int>(nbrs.size())] += 1.0;
    for (auto& [deg, count] : hist) count /= static_cast<double>(adj.size());
    return hist;
}

double degree_profile_tv(const SchemaGraph& g, const std::vector<DegreeBin>& profile) {
    auto hist = fk_degree_histogram(g);
    std::map<int, double> want;
    for (const auto& bin : profile) want[bin.degree] += bin.probability;
    double tv = 0.0;
    for (const auto& [deg, p] : want) tv += std::abs(p - (hist.count(deg) ? hist[deg] : 0.0));
    for (const auto& [deg, p] : hist) {
        if (!want.count(deg)) tv += p;
    }
    return 0.5 * tv;
}

namespace {

struct CandidateEdgeRef {
    int edge_index;
    std::string src;
    std::string dst;
};

std::vector<CandidateEdgeRef> candidate_edges(const SchemaGraph& g) {
    std::vector<CandidateEdgeRef> out;
    const auto& edges = g.edges();
    for (int i = 0; i < static_cast<int>(edges.size()); ++i) {
        if (edges[i].kind == EdgeKind::Candidate) out.push_back({i, edges[i].src, edges[i].dst});
    }
    return out;
}

// The k = 0 cue: a pure predicate over the two endpoint records.
bool zero_hop_rule(const FeatureRecord& a, const FeatureRecord& b) {
    if (a.data_type != b.data_type) return false;
    if (a.distinct_count > b.distinct_count) return false;
    const auto ta = tokenize(a.name);
    const auto tb = tokenize(b.name);
    for (const auto& t : ta) {
        if (std::find(tb.begin(), tb.end(), t) != tb.end()) return true;
    }
    return false;
}

DataType different_type(DataType t) {
    return static_cast<DataType>((static_cast<int>(t) + 1) % 5);
}

}  // namespace

std::vector<Sample> radius_cue_labels(const SchemaGraph& g, int k) {
    if (k < 1) throw ConfigError("radius_cue_labels: k must be >= 1 (k = 0 reads records)");
    std::vector<std::string> beacons;
    for (const auto& a : g.attributes()) {
        if (a.marker) beacons.push_back(a.id);
    }
    const auto dist = bfs_distances(g, beacons, k);
    std::vector<Sample> out;
    for (const auto& e : candidate_edges(g)) {
        int dmin = std::numeric_limits<int>::max();
        for (const auto* id : {&e.src, &e.dst}) {
            const auto it = dist.find(*id);
            if (it != dist.end()) dmin = std::min(dmin, it->second);
        }
        out.push_back({e.src, e.dst, dmin == k ? 1.0 : 0.0});
    }
    return out;
}

TaskDataset inject_radius_cue(const SchemaGraph& g, int k, double positive_fraction,
                              std::uint64_t seed) {
    if (k < 0 || k > 6) throw ConfigError("radius cue: k must lie in [0, 6]");
    if (!(positive_fraction > 0.0 && positive_fraction < 1.0)) {
        throw ConfigError("radius cue: positive_fraction must lie in (0, 1)");
    }

    TaskDataset ds;
    ds.graph = g;
    ds.task = "radius_cue";
    ds.kind = TaskKind::Classification;
    ds.nominal_radius = k;

    const auto cands = candidate_edges(ds.graph);
    const int n = static_cast<int>(cands.size());
    if (n == 0) throw CueInfeasibleError("graph has no candidate edges to label");
    const double target = positive_fraction * n;
    const int lo = static_cast<int>(std::ceil((positive_fraction - 0.05) * n - 1e-9));
    const int hi = static_cast<int>(std::floor((positive_fraction + 0.05) * n + 1e-9));
    if (lo > hi) {
        std::ostringstream msg;
        msg << "no integer count of " << n << " candidate edges lands within 0.05 of "
            << positive_fraction;
        throw CueInfeasibleError(msg.str());
    }
    const auto in_band = [&](int c) { return c >= lo && c <= hi; };

    Rng rng(seed);
    std::vector<double> labels(static_cast<std::size_t>(n), 0.0);

    if (k == 0) {
        const auto count_rule = [&] {
            int c = 0;
            for (std::size_t i = 0; i < cands.size(); ++i) {
                const bool on = zero_hop_rule(ds.graph.record(cands[i].src),
                                              ds.graph.record(cands[i].dst));
                labels[i] = on ? 1.0 : 0.0;
                c += on ? 1 : 0;
            }
            return c;
        };
        int current = count_rule();
        std::vector<std::size_t> order(cands.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);
        int edits = 0;
        const int max_edits = 8 * n + 16;
        std::size_t oi = 0;
        while (!in_band(current) && edits < max_edits) {
            const std::size_t i = order[oi];
            oi = (oi + 1) % order.size();
            const bool want_positive = current < lo;
            if ((labels[i] == 1.0) == want_positive) continue;
            auto a = ds.graph.record(cands[i].src);
            auto b = ds.graph.record(cands[i].dst);
            if (want_positive) {
                b.data_type = a.data_type;
                if (a.distinct_count > b.row_count) {
                    a.distinct_count = b.row_count;
                    ds.graph.set_record(cands[i].src, a);
                }
                b.distinct_count = std::max(b.distinct_count, a.distinct_count);
                if (!zero_hop_rule(a, b)) {
                    auto ta = tokenize(a.name);
                    b.name += "_" + (ta.empty() ? std::string("x") : ta.front());
                }
                ds.graph.set_record(cands[i].dst, b);
            } else {
                b.data_type = different_type(a.data_type);
                ds.graph.set_record(cands[i].dst, b);
            }
            current = count_rule();
            ++edits;
        }
        if (!in_band(current)) {
            std::ostringstream msg;
            msg << "record calibration stalled at " << current << "/" << n
                << " positives; wanted within [" << lo << ", " << hi << "]";
            throw CueInfeasibleError(msg.str());
        }
    } else {
        // Beacon pool: attributes that touch no candidate edge, so endpoint
        // (0-hop) features can never reveal a marker. Grouped by owner table
        // because hosts are drawn uniformly over tables — size-biased host
        // selection would let table-level features predict the label.
        std::set<std::string> endpoint;
        for (const auto& e : cands) {
            endpoint.insert(e.src);
            endpoint.insert(e.dst);
        }
        std::map<std::string, std::vector<std::string>> pool_by_table;
        for (const auto& a : ds.graph.attributes()) {
            if (endpoint.count(a.id)) continue;
            const auto owner = ds.graph.owner_table(a.id);
            if (owner) pool_by_table[*owner].push_back(a.id);
        }
        std::vector<std::string> hosts;
        for (const auto& [table, attrs] : pool_by_table) hosts.push_back(table);
        if (hosts.empty()) throw CueInfeasibleError("no attribute is free of candidate edges");

        const auto labels_for = [&](const std::set<std::string>& bset,
                                    std::vector<double>& out) {
            const std::vector<std::string> sources(bset.begin(), bset.end());
            const auto dist = bfs_distances(ds.graph, sources, k);
            int c = 0;
            for (std::size_t i = 0; i < cands.size(); ++i) {
                int dmin = std::numeric_limits<int>::max();
                for (const auto* id : {&cands[i].src, &cands[i].dst}) {
                    const auto it = dist.find(*id);
                    if (it != dist.end()) dmin = std::min(dmin, it->second);
                }
                out[i] = dmin == k ? 1.0 : 0.0;
                c += dmin == k ? 1 : 0;
            }
            return c;
        };
        const auto count_for = [&](const std::set<std::string>& bset) {
            std::vector<double> scratch(cands.size());
            return labels_for(bset, scratch);
        };

        // Per-edge candidate-degree statistics. High-degree attributes sit
        // closer to everything, so an arbitrary in-band placement lets the
        // endpoint degree predict the label; placements are scored below so
        // the chosen cue is degree-fair.
        std::map<std::string, double> cdeg, cout_deg, cin_deg;
        for (const auto& e : cands) {
            cdeg[e.src] += 1.0;
            cdeg[e.dst] += 1.0;
            cout_deg[e.src] += 1.0;
            cin_deg[e.dst] += 1.0;
        }
        std::vector<std::array<double, 4>> degstats(cands.size());
        for (std::size_t i = 0; i < cands.size(); ++i) {
            degstats[i] = {cdeg[cands[i].src], cdeg[cands[i].dst],
                           cout_deg[cands[i].src], cin_deg[cands[i].dst]};
        }
        const auto degree_coupling = [&](const std::vector<double>& y) {
            const double dn = static_cast<double>(y.size());
            double my = 0.0;
            for (double v : y) my += v;
            my /= dn;
            double sy = 0.0;
            for (double v : y) sy += (v - my) * (v - my);
            sy = std::sqrt(sy);
            if (sy == 0.0) return 0.0;
            double worst = 0.0;
            for (int j = 0; j < 4; ++j) {
                double mx = 0.0;
                for (const auto& row : degstats) mx += row[static_cast<std::size_t>(j)];
                mx /= dn;
                double sx = 0.0, dot = 0.0;
                for (std::size_t i = 0; i < degstats.size(); ++i) {
                    const double xd = degstats[i][static_cast<std::size_t>(j)] - mx;
                    sx += xd * xd;
                    dot += xd * (y[i] - my);
                }
                sx = std::sqrt(sx);
                if (sx == 0.0) continue;
                worst = std::max(worst, std::abs(dot / (sx * sy)));
            }
            return worst;
        };

        // Rejection-sample beacon sets: each trial picks a host-table count,
        // chooses that many tables uniformly, and plants one beacon per host
        // at a uniform pool slot. Among placements whose rate lands in the
        // band, keep the one whose labels are least predictable from the
        // endpoints' candidate degrees — the only 0-hop-visible quantity a
        // structural cue can accidentally encode once profiles are flat.
        std::set<std::string> beacons;
        int realized = 0;
        bool accepted = false;
        double best_coupling = std::numeric_limits<double>::infinity();
        std::set<std::string> nearest;
        int nearest_realized = 0;
        double nearest_gap = std::numeric_limits<double>::infinity();
        std::vector<double> trial_labels(cands.size());
        const int max_trials = 240;
        for (int trial = 0; trial < max_trials; ++trial) {
            const int h = 1 + static_cast<int>(rng.below(hosts.size()));
            auto order = hosts;
            rng.shuffle(order);
            std::set<std::string> bset;
            for (int i = 0; i < h; ++i) {
                const auto& pool = pool_by_table[order[static_cast<std::size_t>(i)]];
                bset.insert(pool[rng.below(pool.size())]);
            }
            const int r = labels_for(bset, trial_labels);
            const double gap = std::abs(r - target);
            if (gap < nearest_gap) {
                nearest = bset;
                nearest_realized = r;
                nearest_gap = gap;
            }
            if (in_band(r)) {
                const double coupling = degree_coupling(trial_labels);
                if (coupling < best_coupling) {
                    beacons = std::move(bset);
                    realized = r;
                    best_coupling = coupling;
                    accepted = true;
                }
            }
        }
        std::vector<std::string> pool;
        for (const auto& [table, attrs] : pool_by_table) {
            pool.insert(pool.end(), attrs.begin(), attrs.end());
        }
        rng.shuffle(pool);
        if (accepted) {
            // Polish: band-preserving local moves that cut the degree
            // coupling further. The random stage rarely finds the fairest
            // placement on its own once k grows and in-band sets get scarce.
            // Toggles resize the beacon set; swaps relocate one beacon, which
            // roughly preserves the rate and keeps the walk inside the band.
            int evals = 0;
            const int max_evals = 1500;
            const auto consider = [&](std::set<std::string> trial) {
                if (trial.empty()) return false;
                ++evals;
                const int r = labels_for(trial, trial_labels);
                if (!in_band(r)) return false;
                const double coupling = degree_coupling(trial_labels);
                if (coupling >= best_coupling - 1e-12) return false;
                beacons = std::move(trial);
                realized = r;
                best_coupling = coupling;
                return true;
            };
            bool improved = true;
            while (improved && evals < max_evals) {
                improved = false;
                for (const auto& site : pool) {
                    if (evals >= max_evals) break;
                    auto trial = beacons;
                    if (trial.count(site)) {
                        trial.erase(site);
                    } else {
                        trial.insert(site);
                    }
                    improved = consider(std::move(trial)) || improved;
                }
                for (int s = 0; s < 64 && evals < max_evals; ++s) {
                    if (beacons.size() >= pool.size()) break;
                    const std::vector<std::string> cur(beacons.begin(), beacons.end());
                    const auto& out = cur[rng.below(cur.size())];
                    const auto& in = pool[rng.below(pool.size())];
                    if (beacons.count(in)) continue;
                    auto trial = beacons;
                    trial.erase(out);
                    trial.insert(in);
                    improved = consider(std::move(trial)) || improved;
                }
            }
        } else {
            // Local repair from the closest miss: toggle single beacons while
            // the gap shrinks. Only reached when random search cannot land in
            // the band at all (tiny graphs, extreme positive fractions).
            beacons = std::move(nearest);
            realized = nearest_realized;
            for (int round = 0; round < 4 && !in_band(realized); ++round) {
                bool changed = false;
                for (const auto& candidate : pool) {
                    if (in_band(realized)) break;
                    auto trial = beacons;
                    if (trial.count(candidate)) {
                        trial.erase(candidate);
                    } else {
                        trial.insert(candidate);
                    }
                    const int r = count_for(trial);
                    if (std::abs(r - target) < std::abs(realized - target)) {
                        beacons = std::move(trial);
                        realized = r;
                        changed = true;
                    }
                }
                if (!changed) break;
            }
        }
        if (!in_band(realized)) {
            std::ostringstream msg;
            msg << "beacon placement stalled at " << realized << "/" << n
                << " positives; wanted within [" << lo << ", " << hi << "]";
            throw CueInfeasibleError(msg.str());
        }
        for (const auto& id : beacons) ds.graph.set_marker(id, true);

        // With the cue in place, flatten every attribute profile to one fixed
        // record. Labels here are purely structural, so this cannot touch
        // them, and it removes the endpoint-profile shortcut entirely: edges
        // sharing an endpoint share that endpoint's profile AND (through the
        // beacon distance) tend to share a label, so any per-attribute
        // profile variation couples with the labels no matter how it is
        // drawn. Holding the profile fixed makes name/type/statistics
        // features carry zero information, which is the point of a depth-k
        // structural cue.
        FeatureRecord flat;
        flat.name = "field";
        flat.data_type = DataType::Int;
        flat.row_count = 1000;
        flat.distinct_count = 100;
        flat.null_fraction = 0.05;
        flat.mean_length = 0.0;
        for (const auto& a : ds.graph.attributes()) ds.graph.set_record(a.id, flat);

        const auto samples = radius_cue_labels(ds.graph, k);
        for (std::size_t i = 0; i < samples.size(); ++i) labels[i] = samples[i].label;
    }

    for (std::size_t i = 0; i < cands.size(); ++i) {
        ds.graph.set_candidate_label(cands[i].edge_index, labels[i]);
        ds.samples.push_back({cands[i].src, cands[i].dst, labels[i]});
    }
    return ds;
}

double verify_feature_independence(const TaskDataset& ds, int n_permutations,
                                   std::uint64_t seed) {
    if (ds.kind != TaskKind::Classification) {
        throw ConfigError("independence test is defined for classification labels");
    }
    if (n_permutations < 200) {
        throw ConfigError("independence test needs at least 200 permutations");
    }
    const int n = static_cast<int>(ds.samples.size());
    if (n < 20) {
        throw TooFewSamplesError("independence test needs at least 20 labeled edges, got " +
                                 std::to_string(n));
    }

    std::vector<std::pair<std::string, std::string>> pairs;
    std::vector<double> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        pairs.push_back({ds.samples[i].src, ds.samples[i].dst});
        y[static_cast<std::size_t>(i)] = ds.samples[i].label;
    }
    const Eigen::MatrixXd x = edge_feature_matrix(ds.graph, pairs);
    const Eigen::RowVectorXd col_mean = x.colwise().mean();
    const Eigen::MatrixXd xc = x.rowwise() - col_mean;
    const Eigen::VectorXd sx = xc.colwise().norm().transpose();

    double ymean = 0.0;
    for (double v : y) ymean += v;
    ymean /= n;
    double sy2 = 0.0;
    for (double v : y) sy2 += (v - ymean) * (v - ymean);
    const double sy = std::sqrt(sy2);

    const auto statistic = [&](const std::vector<double>& yy) {
        if (sy == 0.0) return 0.0;
        Eigen::VectorXd yc(n);
        for (int i = 0; i < n; ++i) yc[i] = yy[static_cast<std::size_t>(i)] - ymean;
        const Eigen::VectorXd numer = xc.transpose() * yc;
        double best = 0.0;
        for (int j = 0; j < numer.size(); ++j) {
            if (sx[j] == 0.0) continue;
            best = std::max(best, std::abs(numer[j] / (sx[j] * sy)));
        }
        return best;
    };

    const double observed = statistic(y);
    Rng rng(seed);
    std::vector<double> shuffled = y;
    int at_least = 0;
    for (int p = 0; p < n_permutations; ++p) {
        rng.shuffle(shuffled);
        if (statistic(shuffled) >= observed) ++at_least;
    }
    return static_cast<double>(1 + at_least) / static_cast<double>(n_permutations + 1);
}

}  // namespace relrad
