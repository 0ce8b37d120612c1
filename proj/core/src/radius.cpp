#include "relrad/radius.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <tuple>
#include <utility>

#include "nlohmann/json.hpp"
#include "relrad/errors.hpp"

namespace relrad {

namespace {

// Anchor roles baked into the seed colors so the digest fixes the endpoints.
// A (t, t) self anchor gets kBoth rather than losing one of its roles.
enum AnchorRole : int { kNone = 0, kSrc = 1, kDst = 2, kBoth = 3 };

void absorb_real(std::string& buf, double x) {
    if (x == 0.0) x = 0.0;  // fold -0.0 into +0.0 before rendering
    char tmp[32];
    std::snprintf(tmp, sizeof tmp, "%.2e", x);  // 3 significant figures
    buf += tmp;
    buf += '|';
}

void absorb_hash(std::string& buf, const Hash128& h) {
    buf.append(reinterpret_cast<const char*>(&h.hi), sizeof h.hi);
    buf.append(reinterpret_cast<const char*>(&h.lo), sizeof h.lo);
}

// Serialized node payload: category (table / attribute / marked attribute),
// the feature record with reals bucketed to 3 significant figures, and the
// anchor role. Node ids never enter. Shared by the WL seed and the exact
// validator so both agree on what "identical features" means.
std::string node_payload(const SchemaGraph& g, const std::string& id, int role) {
    std::string buf;
    if (g.node_kind(id) == NodeKind::Table) {
        buf += "T|";
    } else {
        const auto& a = g.attribute(id);
        buf += a.marker ? "AM|" : "A|";
        buf += a.record.name;
        buf += '|';
        buf += to_string(a.record.data_type);
        buf += '|';
        buf += std::to_string(a.record.distinct_count);
        buf += '|';
        buf += std::to_string(a.record.row_count);
        buf += '|';
        absorb_real(buf, a.record.null_fraction);
        absorb_real(buf, a.record.mean_length);
    }
    buf += 'r';
    buf += static_cast<char>('0' + role);
    return buf;
}

int role_of(const std::string& id, const std::string& src, const std::string& dst) {
    int role = kNone;
    if (id == src) role |= kSrc;
    if (id == dst) role |= kDst;
    return role;
}

}  // namespace

Hash128 khop_signature(const SchemaGraph& g, const std::string& src,
                       const std::string& dst, int k, int wl_rounds) {
    if (k < 0) throw ConfigError("khop_signature: k must be >= 0");
    if (wl_rounds < std::max(k, 1))
        throw ConfigError("khop_signature: wl_rounds must be >= max(k, 1)");
    if (!g.has_node(src)) throw UnknownNodeError(src);
    if (!g.has_node(dst)) throw UnknownNodeError(dst);

    const auto dist = bfs_distances(g, src == dst ? std::vector<std::string>{src}
                                                  : std::vector<std::string>{src, dst},
                                    k);

    // Dense index over the neighborhood, in sorted-id order (bfs_distances
    // returns an ordered map), so traversal order never depends on insertion.
    std::vector<std::string> nodes;
    nodes.reserve(dist.size());
    std::map<std::string, int> index;
    for (const auto& [id, d] : dist) {
        index.emplace(id, static_cast<int>(nodes.size()));
        nodes.push_back(id);
    }

    // Incident induced edges per node as (kind, outgoing flag, other index).
    // The supervision label on candidate edges is payload, not structure, and
    // is deliberately excluded: signatures must not peek at what they predict.
    std::vector<std::vector<std::tuple<int, int, int>>> incident(nodes.size());
    for (const auto& e : g.edges()) {
        const auto is = index.find(e.src);
        const auto id_ = index.find(e.dst);
        if (is == index.end() || id_ == index.end()) continue;
        incident[is->second].emplace_back(static_cast<int>(e.kind), 1, id_->second);
        incident[id_->second].emplace_back(static_cast<int>(e.kind), 0, is->second);
    }

    std::vector<Hash128> color(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i)
        color[i] = fnv1a128(node_payload(g, nodes[i], role_of(nodes[i], src, dst)));

    std::vector<Hash128> next(nodes.size());
    for (int round = 0; round < wl_rounds; ++round) {
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            std::vector<std::string> msgs;
            msgs.reserve(incident[i].size());
            for (const auto& [kind, out, other] : incident[i]) {
                std::string m;
                m += static_cast<char>('0' + kind);
                m += static_cast<char>('0' + out);
                absorb_hash(m, color[other]);
                msgs.push_back(std::move(m));
            }
            std::sort(msgs.begin(), msgs.end());
            std::string buf;
            absorb_hash(buf, color[i]);
            for (const auto& m : msgs) buf += m;
            next[i] = fnv1a128(buf);
        }
        color.swap(next);
    }

    std::vector<Hash128> sorted = color;
    std::sort(sorted.begin(), sorted.end());
    std::string buf;
    for (const auto& c : sorted) absorb_hash(buf, c);
    absorb_hash(buf, color[index.at(src)]);
    absorb_hash(buf, color[index.at(dst)]);
    return fnv1a128(buf);
}

std::vector<int> label_classes(const TaskDataset& ds) {
    std::vector<int> cls(ds.samples.size(), 0);
    if (ds.kind == TaskKind::Classification) {
        for (std::size_t i = 0; i < ds.samples.size(); ++i)
            cls[i] = ds.samples[i].label != 0.0 ? 1 : 0;
        return cls;
    }
    // Decile bins by value against nearest-rank cut points, so equal labels
    // always share a bin (heavy ties collapse bins rather than split).
    std::vector<double> sorted;
    sorted.reserve(ds.samples.size());
    for (const auto& s : ds.samples) sorted.push_back(s.label);
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    std::vector<double> cuts;
    for (int q = 1; q <= 9 && n > 0; ++q) {
        const std::size_t r = q * n / 10;
        if (r < n) cuts.push_back(sorted[r]);
    }
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        int b = 0;
        for (const double c : cuts)
            if (ds.samples[i].label >= c) ++b;
        cls[i] = b;
    }
    return cls;
}

RadiusEstimate estimate_radius(const TaskDataset& ds, int k_max) {
    if (k_max < 0) throw ConfigError("estimate_radius: k_max must be >= 0");
    const auto issues = check_dataset(ds);
    if (!issues.empty())
        throw FormatError("estimate_radius: malformed dataset: " + issues.front());

    const auto cls = label_classes(ds);
    const std::size_t n = ds.samples.size();

    RadiusEstimate est;
    // Level digests are chained: equal chains at level k mean equal raw
    // signatures at every level <= k, so groups only refine as k grows and
    // determinacy_rate is nondecreasing by construction.
    std::vector<Hash128> chain(n, fnv1a128(""));
    for (int k = 0; k <= k_max; ++k) {
        est.k_max_searched = k;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& s = ds.samples[i];
            const auto d = khop_signature(ds.graph, s.src, s.dst, k, std::max(k, 1));
            std::string buf;
            absorb_hash(buf, d);
            chain[i] = fnv1a128_extend(chain[i], buf.data(), buf.size());
        }

        std::map<Hash128, std::vector<int>> groups;
        for (std::size_t i = 0; i < n; ++i) groups[chain[i]].push_back(static_cast<int>(i));

        std::size_t undetermined = 0;
        std::optional<WitnessPair> witness;
        for (const auto& [digest, members] : groups) {
            bool mixed = false;
            for (const int m : members)
                if (cls[m] != cls[members.front()]) { mixed = true; break; }
            if (!mixed) continue;
            undetermined += members.size();
            if (!witness) {
                int b = members[1];
                for (const int m : members)
                    if (cls[m] != cls[members.front()]) { b = m; break; }
                witness = WitnessPair{k, members.front(), b};
            }
        }

        est.determinacy_rate.push_back(
            n == 0 ? 1.0 : static_cast<double>(n - undetermined) / static_cast<double>(n));
        if (!witness) {
            est.r_hat = k;
            return est;
        }
        est.certificate.push_back(*witness);
    }
    return est;  // collisions persisted at k_max: r_hat stays empty
}

bool exact_isomorphic(const SchemaGraph& ga, const Neighborhood& na,
                      const SchemaGraph& gb, const Neighborhood& nb) {
    if (na.nodes.size() > 8 || nb.nodes.size() > 8)
        throw ConfigError("exact_isomorphic: limited to neighborhoods of <= 8 nodes");
    if (na.nodes.size() != nb.nodes.size() || na.edges.size() != nb.edges.size())
        return false;

    const int n = static_cast<int>(na.nodes.size());
    std::map<std::string, int> ia, ib;
    for (int i = 0; i < n; ++i) ia.emplace(na.nodes[i], i);
    for (int i = 0; i < n; ++i) ib.emplace(nb.nodes[i], i);

    std::vector<std::string> pa(n), pb(n);
    for (int i = 0; i < n; ++i)
        pa[i] = node_payload(ga, na.nodes[i], role_of(na.nodes[i], na.src, na.dst));
    for (int i = 0; i < n; ++i)
        pb[i] = node_payload(gb, nb.nodes[i], role_of(nb.nodes[i], nb.src, nb.dst));

    // Edge multisets as (src index, dst index, kind); labels are payload.
    std::vector<std::tuple<int, int, int>> eb;
    eb.reserve(nb.edges.size());
    for (const auto& e : nb.edges)
        eb.emplace_back(ib.at(e.src), ib.at(e.dst), static_cast<int>(e.kind));
    std::sort(eb.begin(), eb.end());

    std::vector<int> map_ab(n, -1);
    std::vector<bool> used(n, false);

    const auto force = [&](const std::string& a, const std::string& b) {
        const int i = ia.at(a), j = ib.at(b);
        if (pa[i] != pb[j]) return false;
        if (map_ab[i] == j) return true;  // (t, t) self anchor maps once
        if (map_ab[i] != -1 || used[j]) return false;
        map_ab[i] = j;
        used[j] = true;
        return true;
    };
    if (!force(na.src, nb.src) || !force(na.dst, nb.dst)) return false;

    const auto edges_match = [&] {
        std::vector<std::tuple<int, int, int>> ea;
        ea.reserve(na.edges.size());
        for (const auto& e : na.edges)
            ea.emplace_back(map_ab[ia.at(e.src)], map_ab[ia.at(e.dst)],
                            static_cast<int>(e.kind));
        std::sort(ea.begin(), ea.end());
        return ea == eb;
    };

    // Backtracking over the unanchored nodes, candidates constrained to equal
    // payloads. At most 6 free nodes, so 6! worst case before the edge check.
    std::vector<int> free;
    for (int i = 0; i < n; ++i)
        if (map_ab[i] == -1) free.push_back(i);

    const auto assign = [&](const auto& self, std::size_t pos) -> bool {
        if (pos == free.size()) return edges_match();
        const int i = free[pos];
        for (int j = 0; j < n; ++j) {
            if (used[j] || pa[i] != pb[j]) continue;
            map_ab[i] = j;
            used[j] = true;
            if (self(self, pos + 1)) return true;
            map_ab[i] = -1;
            used[j] = false;
        }
        return false;
    };
    return assign(assign, 0);
}

std::string radius_json(const RadiusEstimate& est, const TaskDataset& ds) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    if (est.r_hat)
        j["r_hat"] = *est.r_hat;
    else
        j["r_hat"] = nullptr;
    j["determined"] = est.r_hat.has_value();
    j["k_max_searched"] = est.k_max_searched;
    j["determinacy_rate"] = est.determinacy_rate;
    auto cert = nlohmann::ordered_json::array();
    for (const auto& w : est.certificate) {
        nlohmann::ordered_json p;
        p["k"] = w.k;
        p["sample_a"] = w.sample_a;
        p["sample_b"] = w.sample_b;
        if (w.sample_a >= 0 && w.sample_a < static_cast<int>(ds.samples.size())) {
            p["a"] = {{"src", ds.samples[w.sample_a].src},
                      {"dst", ds.samples[w.sample_a].dst},
                      {"label", ds.samples[w.sample_a].label}};
            p["b"] = {{"src", ds.samples[w.sample_b].src},
                      {"dst", ds.samples[w.sample_b].dst},
                      {"label", ds.samples[w.sample_b].label}};
        }
        cert.push_back(std::move(p));
    }
    j["certificate"] = std::move(cert);
    return j.dump(2);
}

}  // namespace relrad
