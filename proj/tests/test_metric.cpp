#include "snowcircle/metric.hpp"

#include <doctest.h>

#include <random>

using namespace snowcircle;

namespace {

DyadicRational dr(const char* s) { return DyadicRational::parse(s); }

DiameterRule all_halve(unsigned depth, Topology t = Topology::circle) {
    return DiameterRule::generate(GeneratorSpec::parse("uniform-halve"), depth, t);
}

DiameterRule keep_at_root(unsigned depth, Topology t = Topology::circle) {
    std::unordered_set<std::uint64_t> keeps{DiameterRule::node_key(DyadicInterval(0, 0))};
    return DiameterRule(t, depth, std::move(keeps), 1);
}

DiameterRule seeded(std::uint64_t seed, unsigned depth, Topology t = Topology::circle,
                    double p = 0.45, unsigned cap = 2) {
    GeneratorSpec spec;
    spec.kind = GeneratorSpec::Kind::seeded_random;
    spec.keep_prob = p;
    spec.seed = seed;
    spec.k_cap = cap;
    return DiameterRule::generate(spec, depth, t);
}

DyadicPoint pt(const char* s) { return DyadicPoint::parse(s); }

}  // namespace

TEST_CASE("index shape") {
    MetricIndex idx(all_halve(4), 3, MetricKind::full());
    CHECK(idx.vertex_count() == 8);
    CHECK(idx.edge_count() == 15);
    MetricIndex arc_idx(all_halve(4, Topology::arc), 3, MetricKind::full());
    CHECK(arc_idx.vertex_count() == 9);
    CHECK(arc_idx.edge_count() == 15);

    MetricIndex t0(seeded(9, 4), 1, MetricKind::trunc(0));
    CHECK(t0.unscale(t0.weight_scaled(DyadicInterval(1, 0))) == dr("1/2"));
    CHECK(t0.unscale(t0.weight_scaled(DyadicInterval(1, 1))) == dr("1/2"));
    CHECK(t0.unscale(t0.weight_scaled(DyadicInterval(0, 0))) == dr("1"));

    MetricIndex kr(keep_at_root(4), 2, MetricKind::full());
    CHECK(kr.unscale(kr.weight_scaled(DyadicInterval(1, 0))) == dr("1"));
    CHECK(kr.unscale(kr.weight_scaled(DyadicInterval(1, 1))) == dr("1"));
}

TEST_CASE("dist examples") {
    MetricIndex ah(all_halve(6), 6, MetricKind::full());
    CHECK(ah.dist(pt("1/8"), pt("1/2")) == dr("3/8"));

    MetricIndex kr(keep_at_root(6), 6, MetricKind::full());
    CHECK(kr.dist(pt("0"), pt("1/2")) == dr("1"));

    MetricIndex kr0(keep_at_root(6), 6, MetricKind::trunc(0));
    CHECK(kr0.dist(pt("0"), pt("1/2")) == dr("1/2"));
}

TEST_CASE("d_0 equals arclength") {
    for (Topology t : {Topology::circle, Topology::arc}) {
        auto rule = seeded(31, 6, t);
        MetricIndex idx(rule, 6, MetricKind::trunc(0));
        std::mt19937_64 rng(2);
        for (int i = 0; i < 60; ++i) {
            DyadicPoint a = canonicalize(DyadicPoint(rng() % 65, 6), t);
            DyadicPoint b = canonicalize(DyadicPoint(rng() % 65, 6), t);
            if (t == Topology::circle && (a.numerator == 64 || b.numerator == 64)) continue;
            CHECK(idx.dist(a, b) == arclength(a, b, t));
        }
    }
}

TEST_CASE("interval endpoint identity") {
    MetricIndex kr(keep_at_root(6), 6, MetricKind::full());
    CHECK(kr.interval_endpoint_distance_check(DyadicInterval(1, 0)) == dr("1"));
    MetricIndex ah(all_halve(6), 6, MetricKind::full());
    CHECK(ah.interval_endpoint_distance_check(DyadicInterval(3, 2)) == dr("1/8"));
    auto per = DiameterRule::generate(GeneratorSpec::parse("periodic-keep:2"), 6, Topology::circle);
    MetricIndex pi(per, 6, MetricKind::full());
    CHECK(pi.interval_endpoint_distance_check(DyadicInterval(2, 1)) == per.delta(DyadicInterval(2, 1)));
}

TEST_CASE("set diameter") {
    MetricIndex ah(all_halve(6), 6, MetricKind::full());
    CHECK(ah.set_diameter({pt("1/4")}) == dr("0"));
    CHECK(ah.set_diameter({pt("0"), pt("1/4"), pt("1/2")}) == dr("1/2"));
    MetricIndex kr(keep_at_root(6), 6, MetricKind::full());
    CHECK(kr.set_diameter({pt("0"), pt("1/2")}) == dr("1"));
    CHECK_THROWS(ah.set_diameter({}));
}

TEST_CASE("metric axioms, exact, small depth") {
    for (Topology t : {Topology::circle, Topology::arc}) {
        auto rule = seeded(77, 6, t);
        MetricIndex idx(rule, 4, MetricKind::full());
        AllPairs ap(idx);
        std::size_t n = idx.vertex_count();
        for (std::size_t a = 0; a < n; ++a) {
            CHECK(ap.d(a, a) == 0);
            for (std::size_t b = 0; b < n; ++b) {
                CHECK(ap.d(a, b) == ap.d(b, a));
                if (a != b) CHECK(ap.d(a, b) > 0);
                for (std::size_t c = 0; c < n; ++c)
                    CHECK(ap.d(a, c) <= std::uint64_t{ap.d(a, b)} + ap.d(b, c));
            }
        }
    }
}

TEST_CASE("truncation monotonicity and convergence bound, small depth") {
    auto rule = seeded(101, 6);
    std::vector<MetricIndex> idxs;
    for (unsigned n = 0; n <= 5; ++n) idxs.emplace_back(rule, 5, MetricKind::trunc(n));
    MetricIndex full(rule, 5, MetricKind::full());
    std::vector<AllPairs> aps;
    for (const auto& ix : idxs) aps.emplace_back(ix);
    AllPairs apf(full);
    std::size_t n = full.vertex_count();
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            for (unsigned m = 0; m + 1 <= 5; ++m) CHECK(aps[m].d(a, b) <= aps[m + 1].d(a, b));
            for (unsigned m = 0; m <= 5; ++m) {
                CHECK(aps[m].d(a, b) <= apf.d(a, b));
                // d_full - d_m <= 2 M(m), scaled by 2^5
                std::uint64_t gap = apf.d(a, b) - aps[m].d(a, b);
                DyadicRational bound = rule.max_level_diameter(m).doubled();
                CHECK(DyadicRational(BigInt(gap), 5) <= bound);
            }
        }
}

TEST_CASE("depth sufficiency: deeper indexes agree on coarse pairs") {
    for (std::uint64_t seed : {4, 5, 6}) {
        auto rule = seeded(seed, 8);
        MetricIndex idx4(rule, 4, MetricKind::full());
        MetricIndex idx6(rule, 6, MetricKind::full());
        MetricIndex idx8(rule, 8, MetricKind::full());
        for (std::uint64_t i = 0; i < 16; ++i)
            for (std::uint64_t j = 0; j < 16; ++j) {
                DyadicPoint a = canonicalize(DyadicPoint(i, 4), Topology::circle);
                DyadicPoint b = canonicalize(DyadicPoint(j, 4), Topology::circle);
                DyadicRational d4 = idx4.dist(a, b);
                CHECK(d4 == idx6.dist(a, b));
                CHECK(d4 == idx8.dist(a, b));
            }
    }
}

TEST_CASE("brute force oracle agrees with dist") {
    // frozen expectations first
    CHECK(brute_force_dist(all_halve(6), MetricKind::full(), pt("0"), pt("1/2"), 6) == dr("1/2"));
    CHECK(brute_force_dist(keep_at_root(6), MetricKind::full(), pt("1/4"), pt("3/4"), 6) == dr("1"));
    CHECK(brute_force_dist(keep_at_root(6), MetricKind::trunc(0), pt("0"), pt("1/2"), 6) ==
          dr("1/2"));

    for (Topology t : {Topology::circle, Topology::arc}) {
        for (std::uint64_t seed : {11, 12}) {
            auto rule = seeded(seed, 6, t);
            for (MetricKind kind : {MetricKind::full(), MetricKind::trunc(1)}) {
                MetricIndex idx(rule, 6, kind);
                std::uint64_t count = (std::uint64_t{1} << 3) + (t == Topology::arc ? 1 : 0);
                for (std::uint64_t i = 0; i < count; ++i)
                    for (std::uint64_t j = i; j < count; ++j) {
                        DyadicPoint a = canonicalize(DyadicPoint(i, 3), t);
                        DyadicPoint b = canonicalize(DyadicPoint(j, 3), t);
                        CHECK(idx.dist(a, b) == brute_force_dist(rule, kind, a, b, 6));
                    }
            }
        }
    }
    CHECK_THROWS(brute_force_dist(all_halve(6), MetricKind::full(), pt("0"), pt("1/2"), 9));
}

TEST_CASE("minimal chains") {
    MetricIndex ah(all_halve(6), 6, MetricKind::full());
    Chain c = ah.minimal_chain(pt("0"), pt("3/8"));
    REQUIRE(c.intervals.size() == 2);
    CHECK(c.intervals[0] == DyadicInterval(2, 0));
    CHECK(c.intervals[1] == DyadicInterval(3, 2));

    CHECK(ah.minimal_chain(pt("1/4"), pt("1/4")).intervals.empty());

    // endpoints of an interval: a single interval whose weight matches dist
    for (std::uint64_t seed : {21, 22, 23}) {
        auto rule = seeded(seed, 6);
        MetricIndex idx(rule, 6, MetricKind::full());
        std::mt19937_64 rng(seed);
        for (int i = 0; i < 30; ++i) {
            unsigned lev = 1 + rng() % 5;
            DyadicInterval I(lev, rng() % (std::uint64_t{1} << lev));
            Chain ch = idx.minimal_chain(I.left(), I.right(Topology::circle));
            REQUIRE(ch.intervals.size() == 1);
            CHECK(idx.rule().delta(ch.intervals[0]) == idx.rule().delta(I));
        }
    }

    // every minimal_chain output is minimal, unimodal, and costs dist
    std::mt19937_64 rng(99);
    for (int q = 0; q < 400; ++q) {
        auto rule = seeded(500 + q % 10, 6);
        MetricIndex idx(rule, 6, MetricKind::full());
        DyadicPoint a = canonicalize(DyadicPoint(rng() % 64, 6), Topology::circle);
        DyadicPoint b = canonicalize(DyadicPoint(rng() % 64, 6), Topology::circle);
        if (a == b) continue;
        Chain ch = idx.minimal_chain(a, b);
        auto rep = is_minimal(ch, Topology::circle);
        INFO(rep.violation);
        CHECK(rep.minimal);
        CHECK(chain_unimodality_check(ch, Topology::circle));
        DyadicRational cost;
        for (const auto& I : ch.intervals) cost = cost + idx.rule().delta(I);
        CHECK(cost == idx.dist(a, b));
    }
}

TEST_CASE("is_minimal examples") {
    CHECK_FALSE(is_minimal(Chain{{DyadicInterval(1, 0), DyadicInterval(1, 1)}}, Topology::circle)
                    .minimal);
    CHECK(is_minimal(Chain{{DyadicInterval(1, 0), DyadicInterval(2, 2)}}, Topology::circle).minimal);
    CHECK_FALSE(is_minimal(Chain{{DyadicInterval(2, 1), DyadicInterval(2, 1)}}, Topology::circle)
                    .minimal);
    // adjacent through 0: the union is a circular arc, not a dyadic interval
    CHECK(is_minimal(Chain{{DyadicInterval(2, 3), DyadicInterval(2, 0)}}, Topology::circle).minimal);
    // the four quarters tile the root
    CHECK_FALSE(is_minimal(Chain{{DyadicInterval(2, 0), DyadicInterval(2, 1), DyadicInterval(2, 2),
                                  DyadicInterval(2, 3)}},
                           Topology::circle)
                    .minimal);
}

TEST_CASE("chain unimodality") {
    CHECK(chain_unimodality_check(
        Chain{{DyadicInterval(3, 0), DyadicInterval(2, 1), DyadicInterval(1, 1)}},
        Topology::circle));
    CHECK_FALSE(chain_unimodality_check(
        Chain{{DyadicInterval(2, 0), DyadicInterval(3, 3), DyadicInterval(2, 2)}},
        Topology::circle));
    CHECK_THROWS(chain_unimodality_check(
        Chain{{DyadicInterval(1, 0), DyadicInterval(1, 1)}}, Topology::circle));
}

TEST_CASE("subarc diameter and bounded turning") {
    MetricIndex ah(all_halve(6), 6, MetricKind::full());
    AllPairs ap(ah);
    auto sd = subarc_diameter(ah, ap, pt("0"), pt("1/4"));
    CHECK(sd.diameter == dr("1/4"));
    CHECK(sd.side == SubarcDiameter::Side::positive);
    auto tie = subarc_diameter(ah, ap, pt("0"), pt("1/2"));
    CHECK(tie.diameter == dr("1/2"));
    CHECK(tie.side == SubarcDiameter::Side::tie);

    MetricIndex arc_ah(all_halve(6, Topology::arc), 6, MetricKind::full());
    AllPairs arc_ap(arc_ah);
    auto whole = subarc_diameter(arc_ah, arc_ap, pt("1/4"), pt("3/4"));
    CHECK(whole.diameter == dr("1/2"));
    CHECK(whole.side == SubarcDiameter::Side::whole);

    TurningReport rep = bounded_turning_constant(ah, SamplingPlan{});
    CHECK(rep.worst_subarc_diam == rep.worst_dist);  // constant exactly 1
    CHECK(rep.ratio_str() == "1");

    MetricIndex kr(keep_at_root(6), 6, MetricKind::full());
    TurningReport rep2 = bounded_turning_constant(kr, SamplingPlan{});
    unsigned e = std::max(rep2.worst_subarc_diam.exponent(), rep2.worst_dist.exponent());
    CHECK(rep2.worst_subarc_diam.scaled(e) >= rep2.worst_dist.scaled(e));  // >= 1 always
}

TEST_CASE("arc distances") {
    MetricIndex arc_kr(keep_at_root(6, Topology::arc), 6, MetricKind::full());
    CHECK(arc_kr.dist(pt("0"), pt("1")) == dr("1"));
    MetricIndex arc_ah(all_halve(6, Topology::arc), 6, MetricKind::full());
    CHECK(arc_ah.dist(pt("1/8"), pt("7/8")) == dr("3/4"));
}

TEST_CASE("dist errors") {
    MetricIndex ah(all_halve(6), 4, MetricKind::full());
    CHECK_THROWS(ah.dist(pt("1/32"), pt("0")));  // not representable at depth 4
}
