#include "relrad/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "relrad/errors.hpp"
#include "relrad/ingest.hpp"
#include "relrad/rng.hpp"
#include "relrad/text.hpp"

using namespace relrad;

namespace {

GeneratorParams small_params(std::uint64_t seed) {
    GeneratorParams p;
    p.n_tables = 20;
    p.attrs_min = 3;
    p.attrs_max = 6;
    p.candidate_density = 0.03;
    p.seed = seed;
    return p;
}

FeatureRecord rec(const std::string& name, DataType t = DataType::Int,
                  std::int64_t distinct = 10, std::int64_t rows = 100) {
    FeatureRecord r;
    r.name = name;
    r.data_type = t;
    r.distinct_count = distinct;
    r.row_count = rows;
    return r;
}

// Independent restatement of the documented k=0 cue.
bool zero_rule_oracle(const FeatureRecord& a, const FeatureRecord& b) {
    if (a.data_type != b.data_type || a.distinct_count > b.distinct_count) return false;
    const auto ta = tokenize(a.name);
    const auto tb = tokenize(b.name);
    std::set<std::string> sa(ta.begin(), ta.end());
    for (const auto& t : tb) {
        if (sa.count(t)) return true;
    }
    return false;
}

// A path of attributes hanging off one table:
// hub.c0 - hub.c1 (via candidate) plus a chain of FK hops for distance.
// Returns a graph where dist(hub.c0 -> chainN.id) is easy to read off.
SchemaGraph chain_graph(int chain_len) {
    SchemaGraphBuilder b;
    const auto hub = b.add_table("hub");
    b.add_attribute(hub, "c0", rec("c0"));
    b.add_attribute(hub, "c1", rec("c1"));
    b.add_candidate("hub.c0", "hub.c1");
    std::string prev = "hub.c0";
    for (int i = 0; i < chain_len; ++i) {
        const auto t = b.add_table("chain" + std::to_string(i));
        b.add_attribute(t, "id", rec("id"));
        b.add_foreign_key("chain" + std::to_string(i) + ".id", prev);
        prev = "chain" + std::to_string(i) + ".id";
    }
    return b.build();
}

}  // namespace

TEST_CASE("generator parameter validation") {
    GeneratorParams p;
    CHECK_NOTHROW(validate(p));

    p.n_tables = 0;
    CHECK_THROWS_AS(validate(p), ConfigError);
    p.n_tables = 20;

    p.attrs_min = 5;
    p.attrs_max = 3;
    CHECK_THROWS_AS(validate(p), ConfigError);
    p.attrs_min = 3;
    p.attrs_max = 8;

    p.target_radius = 7;
    CHECK_THROWS_AS(validate(p), ConfigError);
    p.target_radius = 1;

    p.candidate_density = 0.0;
    CHECK_THROWS_AS(validate(p), ConfigError);
    p.candidate_density = 0.05;

    p.positive_fraction = 1.0;
    CHECK_THROWS_AS(validate(p), ConfigError);
    p.positive_fraction = 0.3;

    p.degree_profile = {{1, 0.5}, {2, 0.4}};
    CHECK_THROWS_AS(validate(p), ConfigError);

    // A positive-probability degree too large for the table count.
    p.degree_profile = {{5, 0.5}, {1, 0.5}};
    p.n_tables = 4;
    CHECK_THROWS_AS(validate(p), InfeasibleParamsError);
    // ...but a zero-probability bin is inert.
    p.degree_profile = {{5, 0.0}, {0, 1.0}};
    CHECK_NOTHROW(validate(p));
}

TEST_CASE("minimal generation: one table, one attribute, no edges") {
    GeneratorParams p;
    p.n_tables = 1;
    p.attrs_min = 1;
    p.attrs_max = 1;
    p.degree_profile = {{0, 1.0}};
    const auto g = generate_schema(p);
    CHECK(g.tables().size() == 1);
    CHECK(g.attributes().size() == 1);
    CHECK(g.edges().size() == 1);  // just the membership edge
    CHECK(g.edges()[0].kind == EdgeKind::Membership);
    CHECK(validate(g).empty());
}

TEST_CASE("generation is deterministic under the seed") {
    const auto a = emit_json(generate_schema(small_params(11)));
    const auto b = emit_json(generate_schema(small_params(11)));
    const auto c = emit_json(generate_schema(small_params(12)));
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("realized degree histogram stays within TV 0.1 of the profile") {
    GeneratorParams p;
    p.n_tables = 50;
    p.attrs_min = 3;
    p.attrs_max = 8;
    p.degree_profile = {{1, 0.5}, {2, 0.3}, {3, 0.2}};
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        p.seed = seed;
        const auto g = generate_schema(p);
        CHECK(degree_profile_tv(g, p.degree_profile) <= 0.1);
        CHECK(validate(g).empty());
    }
}

TEST_CASE("generated schemas respect attribute budgets and edge typing") {
    const auto g = generate_schema(small_params(3));
    CHECK(validate(g).empty());
    for (const auto& t : g.tables()) {
        const auto attrs = g.table_attributes(t.id);
        CHECK(attrs.size() >= 3);
        CHECK(attrs.size() <= 6);
        // Every table exposes an id key.
        CHECK(std::find(attrs.begin(), attrs.end(), t.id + ".id") != attrs.end());
    }
    int candidates = 0, fks = 0;
    for (const auto& e : g.edges()) {
        if (e.kind == EdgeKind::Candidate) {
            ++candidates;
            // Type-compatible, cross-table.
            CHECK(g.record(e.src).data_type == g.record(e.dst).data_type);
            CHECK(*g.owner_table(e.src) != *g.owner_table(e.dst));
        } else if (e.kind == EdgeKind::ForeignKey) {
            ++fks;
            CHECK(g.record(e.src).data_type == DataType::Int);
            CHECK(g.record(e.dst).data_type == DataType::Int);
        }
    }
    CHECK(candidates > 0);
    CHECK(fks > 0);
}

TEST_CASE("degree histogram arithmetic on a hand-built backbone") {
    SchemaGraphBuilder b;
    for (const char* t : {"a", "bb", "c"}) {
        const auto tid = b.add_table(t);
        b.add_attribute(tid, "id", rec("id"));
        b.add_attribute(tid, "x", rec("x"));
    }
    b.add_foreign_key("a.x", "bb.id");
    b.add_foreign_key("c.x", "bb.id");
    const auto g = b.build();
    const auto hist = fk_degree_histogram(g);
    CHECK(hist.at(1) == doctest::Approx(2.0 / 3.0));
    CHECK(hist.at(2) == doctest::Approx(1.0 / 3.0));
    CHECK(degree_profile_tv(g, {{1, 2.0 / 3.0}, {2, 1.0 / 3.0}}) == doctest::Approx(0.0));
    CHECK(degree_profile_tv(g, {{1, 1.0}}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("k=0 cue is a pure function of endpoint records") {
    auto p = small_params(21);
    p.candidate_density = 0.08;
    const auto g = generate_schema(p);
    const auto ds = inject_radius_cue(g, 0, 0.4, 77);
    REQUIRE(ds.samples.size() >= 20);
    CHECK(ds.nominal_radius == 0);

    int positives = 0;
    for (const auto& s : ds.samples) {
        CHECK(s.label ==
              (zero_rule_oracle(ds.graph.record(s.src), ds.graph.record(s.dst)) ? 1.0 : 0.0));
        positives += s.label == 1.0 ? 1 : 0;
    }
    const double rate = static_cast<double>(positives) / ds.samples.size();
    CHECK(std::abs(rate - 0.4) <= 0.05 + 1e-12);

    // No markers are placed for k = 0.
    for (const auto& a : ds.graph.attributes()) CHECK_FALSE(a.marker);

    // Determinism.
    const auto ds2 = inject_radius_cue(g, 0, 0.4, 77);
    CHECK(ds2.samples == ds.samples);
}

TEST_CASE("k=2 cue places beacons exactly two hops out") {
    auto p = small_params(31);
    p.candidate_density = 0.08;
    const auto g = generate_schema(p);
    const auto ds = inject_radius_cue(g, 2, 0.3, 5);
    REQUIRE(ds.samples.size() >= 20);
    CHECK(ds.nominal_radius == 2);

    std::set<std::string> endpoints;
    for (const auto& s : ds.samples) {
        endpoints.insert(s.src);
        endpoints.insert(s.dst);
    }
    std::vector<std::string> beacons;
    for (const auto& a : ds.graph.attributes()) {
        if (a.marker) {
            beacons.push_back(a.id);
            CHECK(endpoints.count(a.id) == 0);  // beacons never anchor a sample
        }
    }
    REQUIRE(!beacons.empty());

    // Re-derive every label from the marker distances.
    const auto dist = bfs_distances(ds.graph, beacons, 3);
    int positives = 0;
    for (const auto& s : ds.samples) {
        int dmin = 1 << 20;
        for (const auto* id : {&s.src, &s.dst}) {
            const auto it = dist.find(*id);
            if (it != dist.end()) dmin = std::min(dmin, it->second);
        }
        CHECK(s.label == (dmin == 2 ? 1.0 : 0.0));
        positives += s.label == 1.0 ? 1 : 0;
    }
    const double rate = static_cast<double>(positives) / ds.samples.size();
    CHECK(std::abs(rate - 0.3) <= 0.05 + 1e-12);

    // Labels ride along on the emitted graph.
    int labeled = 0;
    for (const auto& e : ds.graph.edges()) {
        if (e.kind == EdgeKind::Candidate) {
            REQUIRE(e.label.has_value());
            ++labeled;
        }
    }
    CHECK(labeled == static_cast<int>(ds.samples.size()));
}

TEST_CASE("relocating the beacon from distance 2 to 3 flips the label") {
    auto g = chain_graph(4);
    // chain: hub.c0 -> chain0.id (1 hop) -> chain1.id (2) -> chain2.id (3) ...
    g.set_marker("chain1.id", true);
    auto cue = radius_cue_labels(g, 2);
    REQUIRE(cue.size() == 1);
    CHECK(cue[0].label == 1.0);

    g.set_marker("chain1.id", false);
    g.set_marker("chain2.id", true);
    cue = radius_cue_labels(g, 2);
    CHECK(cue[0].label == 0.0);

    // A second beacon closer than k spoils exactness ("none closer").
    g.set_marker("chain1.id", true);   // distance 2
    g.set_marker("chain0.id", true);   // distance 1
    cue = radius_cue_labels(g, 2);
    CHECK(cue[0].label == 0.0);
}

TEST_CASE("deleting a node beyond k never flips a label") {
    auto g = chain_graph(5);
    g.set_marker("chain1.id", true);  // distance 2 from hub.c0
    const auto before = radius_cue_labels(g, 2);
    REQUIRE(before.size() == 1);
    CHECK(before[0].label == 1.0);

    // Rebuild without chain4.id, which sits 5 hops from hub.c0 and farther
    // from hub.c1 (> k = 2 from both endpoints).
    SchemaGraphBuilder b;
    for (const auto& t : g.tables()) {
        if (t.id != "chain4") b.add_table(t.id);
    }
    for (const auto& a : g.attributes()) {
        if (a.id != "chain4.id") b.add_detached_attribute(a.id, a.record, a.marker);
    }
    for (const auto& e : g.edges()) {
        if (e.src == "chain4.id" || e.dst == "chain4.id") continue;
        if (e.src == "chain4" || e.dst == "chain4") continue;
        switch (e.kind) {
            case EdgeKind::Membership: b.add_membership(e.src, e.dst); break;
            case EdgeKind::Candidate: b.add_candidate(e.src, e.dst, e.label); break;
            case EdgeKind::ForeignKey: b.add_foreign_key(e.src, e.dst); break;
        }
    }
    const auto trimmed = b.build();
    const auto after = radius_cue_labels(trimmed, 2);
    REQUIRE(after.size() == 1);
    CHECK(after[0].label == before[0].label);
}

TEST_CASE("permuting node records leaves k>=1 labels fixed and changes k=0 labels") {
    auto p = small_params(41);
    p.candidate_density = 0.08;
    const auto g = generate_schema(p);

    const auto permute_records = [](SchemaGraph graph, std::uint64_t seed) {
        std::vector<std::string> ids;
        for (const auto& a : graph.attributes()) ids.push_back(a.id);
        std::sort(ids.begin(), ids.end());
        std::vector<FeatureRecord> recs;
        for (const auto& id : ids) recs.push_back(graph.record(id));
        Rng rng(seed);
        rng.shuffle(recs);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            auto r = recs[i];
            // Keep records internally valid after the swap.
            r.distinct_count = std::min(r.distinct_count, r.row_count);
            graph.set_record(ids[i], r);
        }
        return graph;
    };

    const auto ds2 = inject_radius_cue(g, 2, 0.3, 5);
    const auto permuted = permute_records(ds2.graph, 99);
    const auto relabeled = radius_cue_labels(permuted, 2);
    REQUIRE(relabeled.size() == ds2.samples.size());
    for (std::size_t i = 0; i < relabeled.size(); ++i) {
        CHECK(relabeled[i].label == ds2.samples[i].label);
    }

    const auto ds0 = inject_radius_cue(g, 0, 0.4, 5);
    const auto permuted0 = permute_records(ds0.graph, 99);
    int flips = 0;
    for (const auto& s : ds0.samples) {
        const bool now = zero_rule_oracle(permuted0.record(s.src), permuted0.record(s.dst));
        flips += (now ? 1.0 : 0.0) != s.label ? 1 : 0;
    }
    CHECK(flips > 0);
}

TEST_CASE("cue infeasibility is reported") {
    // k larger than the graph diameter: no beacon can sit 5 hops out.
    SchemaGraphBuilder b;
    const auto t = b.add_table("t");
    b.add_attribute(t, "a", rec("a"));
    b.add_attribute(t, "b", rec("b"));
    b.add_attribute(t, "c", rec("c"));
    b.add_candidate("t.a", "t.b");
    const auto g = b.build();
    CHECK_THROWS_AS(inject_radius_cue(g, 5, 0.5, 0), CueInfeasibleError);

    // One candidate edge cannot land within 0.05 of rate 0.9 (0 or 1 only;
    // 1 is outside [0.85, 0.95]).
    CHECK_THROWS_AS(inject_radius_cue(g, 0, 0.9, 0), CueInfeasibleError);

    // No candidate edges at all.
    SchemaGraphBuilder b2;
    const auto t2 = b2.add_table("t");
    b2.add_attribute(t2, "a", rec("a"));
    CHECK_THROWS_AS(inject_radius_cue(b2.build(), 1, 0.5, 0), CueInfeasibleError);
}

TEST_CASE("independence test contracts") {
    auto p = small_params(51);
    p.candidate_density = 0.08;
    const auto g = generate_schema(p);

    // Constant labels: statistic 0 under every permutation, p = 1.
    TaskDataset constant;
    constant.graph = g;
    constant.kind = TaskKind::Classification;
    for (const auto& e : g.edges()) {
        if (e.kind == EdgeKind::Candidate) constant.samples.push_back({e.src, e.dst, 1.0});
    }
    REQUIRE(constant.samples.size() >= 20);
    CHECK(verify_feature_independence(constant, 300, 1) == doctest::Approx(1.0));

    // Guard rails.
    TaskDataset tiny = constant;
    tiny.samples.resize(10);
    CHECK_THROWS_AS(verify_feature_independence(tiny, 300, 1), TooFewSamplesError);
    CHECK_THROWS_AS(verify_feature_independence(constant, 100, 1), ConfigError);
    TaskDataset reg = constant;
    reg.kind = TaskKind::Regression;
    CHECK_THROWS_AS(verify_feature_independence(reg, 300, 1), ConfigError);

    // p stays within its attainable range.
    const auto ds = inject_radius_cue(g, 0, 0.4, 7);
    const double pv = verify_feature_independence(ds, 300, 2);
    CHECK(pv >= 1.0 / 301.0);
    CHECK(pv <= 1.0);
}

TEST_CASE("k=0 cues are detected, k>=1 cues are invisible to 0-hop features") {
    int detected = 0;
    int invisible = 0;
    const int trials = 10;
    for (std::uint64_t seed = 0; seed < trials; ++seed) {
        auto p0 = small_params(100 + seed);
        p0.candidate_density = 0.08;
        const auto ds0 = inject_radius_cue(generate_schema(p0), 0, 0.4, seed);
        if (verify_feature_independence(ds0, 400, seed) <= 0.05) ++detected;

        // Structural cues need uniform table widths: with variable widths the
        // width itself is a 0-hop feature that tracks beacon hosting.
        GeneratorParams p2;
        p2.n_tables = 20;
        p2.attrs_min = 4;
        p2.attrs_max = 4;
        p2.candidate_density = 0.05;
        p2.seed = 100 + seed;
        const auto k = seed % 2 == 0 ? 2 : 3;
        const auto ds2 = inject_radius_cue(generate_schema(p2), k, 0.3, seed);
        if (verify_feature_independence(ds2, 400, seed) > 0.05) ++invisible;
    }
    CHECK(detected == trials);    // record-based cues always show up
    CHECK(invisible >= trials - 1);  // structural cues stay hidden
}

TEST_CASE("injected datasets round-trip through the JSON interchange") {
    auto p = small_params(61);
    p.candidate_density = 0.08;
    const auto ds = inject_radius_cue(generate_schema(p), 2, 0.3, 9);
    const auto json = emit_json(ds.graph);
    const auto back = load_json(json);
    CHECK(emit_json(back) == json);
    // Markers and labels survive. The emitter orders edges canonically, so
    // compare samples as sets keyed by endpoints.
    int markers = 0;
    for (const auto& a : back.attributes()) markers += a.marker ? 1 : 0;
    CHECK(markers > 0);
    auto relabeled = radius_cue_labels(back, 2);
    auto expected = ds.samples;
    const auto by_endpoints = [](const Sample& x, const Sample& y) {
        return std::tie(x.src, x.dst) < std::tie(y.src, y.dst);
    };
    std::sort(relabeled.begin(), relabeled.end(), by_endpoints);
    std::sort(expected.begin(), expected.end(), by_endpoints);
    REQUIRE(relabeled.size() == expected.size());
    for (std::size_t i = 0; i < relabeled.size(); ++i) {
        CHECK(relabeled[i].src == expected[i].src);
        CHECK(relabeled[i].dst == expected[i].dst);
        CHECK(relabeled[i].label == expected[i].label);
    }
}
