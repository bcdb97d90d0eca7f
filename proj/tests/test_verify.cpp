#include "snowcircle/verify.hpp"

#include "snowcircle/local_metric.hpp"

#include <doctest.h>

#include <random>

using namespace snowcircle;

namespace {

DyadicRational dr(const char* s) { return DyadicRational::parse(s); }
DyadicPoint pt(const char* s) { return DyadicPoint::parse(s); }

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

}  // namespace

TEST_CASE("LocalMetric agrees with the full index") {
    std::mt19937_64 rng(404);
    for (Topology t : {Topology::circle, Topology::arc}) {
        for (std::uint64_t seed : {91, 92, 93}) {
            auto rule = seeded(seed, 8, t);
            for (MetricKind kind :
                 {MetricKind::full(), MetricKind::trunc(0), MetricKind::trunc(3)}) {
                MetricIndex idx(rule, 8, kind);
                for (int trial = 0; trial < 6; ++trial) {
                    std::uint64_t a = rng() % 256;
                    std::uint64_t len = 8 + rng() % 48;
                    if (t == Topology::arc && a + len > 256) a = 256 - len;
                    ArcSet region = ArcSet::span(DyadicRational(BigInt(a), 8),
                                                 DyadicRational(BigInt(len), 8), t);
                    LocalMetric lm(rule, kind, 8, region);
                    std::vector<std::uint64_t> pts;
                    for (std::uint64_t o = 0; o <= len; o += 1 + rng() % 5)
                        pts.push_back(t == Topology::circle ? (a + o) % 256 : a + o);
                    LocalMetric::Profile prof;
                    for (std::size_t i = 0; i < pts.size(); ++i) {
                        lm.fill_profile(pts[i], prof);
                        for (std::size_t j = 0; j < pts.size(); ++j) {
                            INFO("seed ", seed, " pair ", pts[i], ",", pts[j]);
                            CHECK(lm.profile_dist(prof, pts[j]) ==
                                  idx.dist_scaled(pts[i], pts[j]));
                        }
                    }
                }
            }
        }
    }
}

TEST_CASE("delta_components examples") {
    MetricIndex ah(all_halve(6), 6, MetricKind::full());
    auto fam = delta_components({pt("0"), pt("1/8"), pt("1/2")}, dr("1/8"), ah);
    REQUIRE(fam.components.size() == 2);
    CHECK(fam.components[0].size() == 2);  // {0, 1/8}
    CHECK(fam.components[1].size() == 1);  // {1/2}
    CHECK(fam.components[0][0] == pt("0"));
    CHECK(fam.diameters[0] == dr("1/8"));
    CHECK(fam.diameters[1] == dr("0"));

    auto one = delta_components({pt("0"), pt("1/8"), pt("1/2")}, dr("1/2"), ah);
    CHECK(one.components.size() == 1);

    auto apart = delta_components({pt("0"), pt("1/4"), pt("1/2"), pt("3/4")}, dr("1/8"), ah);
    CHECK(apart.components.size() == 4);

    // maximality witness: distinct components sit farther than delta apart
    for (std::size_t a = 0; a < fam.components.size(); ++a)
        for (std::size_t b = a + 1; b < fam.components.size(); ++b)
            for (const auto& p : fam.components[a])
                for (const auto& q : fam.components[b]) CHECK(ah.dist(p, q) > dr("1/8"));
}

TEST_CASE("enlarge_target") {
    ExactArc e1 = enlarge_target({pt("0"), pt("1/16")}, dr("1/8"), Topology::circle);
    CHECK(e1.start == dr("0"));
    CHECK(e1.length == dr("1/8"));
    ExactArc e2 = enlarge_target({pt("1/4")}, dr("1/16"), Topology::circle);
    CHECK(e2.start == dr("1/4"));
    CHECK(e2.length == dr("1/16"));
    CHECK_THROWS(enlarge_target({pt("0")}, dr("1/4"), Topology::circle));  // r beyond 1/8
    CHECK_THROWS(enlarge_target({pt("0"), pt("1/16")}, dr("1/32"), Topology::circle));
    ExactArc e3 = enlarge_target({pt("31/32")}, dr("1/16"), Topology::arc);
    CHECK(e3.start + e3.length <= DyadicRational::one());
    CHECK(e3.length == dr("1/16"));
}

TEST_CASE("preimage_components") {
    auto ah = all_halve(10);
    TargetSet target = TargetSet::adjacent_pair(4, 3, Topology::circle, dr("1/8"));
    auto fam = preimage_components(ah, target, 10);
    REQUIRE(fam.components.size() == 1);
    CHECK(fam.diameters[0] == dr("1/8"));  // diam_0(H) under the identity map
    CHECK_THROWS(preimage_components(ah, target, 6));  // depth too shallow

    auto kr = keep_at_root(10);
    TargetSet t2 = TargetSet::adjacent_pair(3, 0, Topology::circle, dr("1/4"));
    auto fam2 = preimage_components(kr, t2, 10);
    CHECK(fam2.components.size() >= 1);
    for (const auto& d : fam2.diameters) CHECK(d <= t2.delta.times(kComponentBound));
}

TEST_CASE("symmetry_class") {
    ArcSet v = ArcSet::span(dr("1/4"), dr("1/4"), Topology::circle);  // [1/4, 1/2]
    auto s1 = symmetry_class(v, 1);
    CHECK(s1.cls == SymmetryClass::about_second);  // 3/8 in D_3 \ D_2
    CHECK(*s1.center == dr("3/8"));
    CHECK(s1.center_level == 3);
    CHECK(symmetry_class(v, 3).cls == SymmetryClass::about_base);

    ArcSet w = ArcSet::span(dr("0"), dr("1/4"), Topology::circle);  // [0, 1/4], center 1/8
    auto s2 = symmetry_class(w, 1);
    CHECK(s2.cls == SymmetryClass::about_second);
    CHECK(*s2.center == dr("1/8"));

    ArcSet broken = w;
    broken.unite(ArcSet::point(dr("3/8"), Topology::circle));
    CHECK(symmetry_class(broken, 1).cls == SymmetryClass::none);

    ArcSet p = ArcSet::point(dr("5/8"), Topology::circle);
    auto s3 = symmetry_class(p, 1);  // a point is symmetric about itself
    CHECK(s3.cls == SymmetryClass::about_second);
    CHECK(s3.center_level == 3);
}

TEST_CASE("projection identity") {
    for (std::uint64_t seed : {111, 112}) {
        auto rule = seeded(seed, 8);
        std::mt19937_64 rng(seed);
        for (unsigned n = 0; n <= 3; ++n) {
            std::vector<DyadicInterval> U{DyadicInterval(n, rng() % (std::uint64_t{1} << n))};
            auto check = projection_identity_check(rule, n, U, 8);
            INFO("seed ", seed, " n ", n, " detail ", check.detail);
            CHECK(check.pass);
        }
    }
}

TEST_CASE("v_trace on fold-free and single-fold rules") {
    // all-halve: no level ever folds, so the trace is frozen at the start
    auto ah = all_halve(10);
    MetricIndex idx(ah, 10, MetricKind::full());
    TargetSet t = TargetSet::adjacent_pair(3, 2, Topology::circle, dr("1/16"));
    std::vector<DyadicPoint> w;
    for (std::uint64_t p = 256; p <= 384; p += 16) w.push_back(idx.point_at(p));
    VTrace tr = v_trace(ah, t, w, 10, dr("1/8"));
    CHECK(tr.pass);
    CHECK(tr.steps.size() == 1);
    CHECK(tr.frozen_diam == dr("1/4"));  // lambda-diameter of H
    for (const auto& lo : tr.lemmas)
        if (lo.name == "L:final") CHECK(lo.pass);

    // keep-at-root: a single fold at n = 0 splits the preimage
    auto kr = keep_at_root(10);
    TargetSet t2 = TargetSet::adjacent_pair(3, 1, Topology::circle, dr("1/16"));
    auto fam = preimage_components(kr, t2, 10);
    REQUIRE(!fam.components.empty());
    for (std::size_t c = 0; c < fam.components.size(); ++c) {
        VTrace tk = v_trace(kr, t2, fam.components[c], 10, fam.diameters[c]);
        INFO("component ", c, " failure: ", tk.failure);
        CHECK(tk.pass);
        CHECK(tk.steps.size() == 2);  // only level 0 folds
    }
}

TEST_CASE("verify sweep: identity baseline and seeded rules") {
    VerifyOptions opt;
    opt.depth = 10;
    opt.mstar_lo = 3;
    opt.mstar_hi = 6;

    auto outcome = verify_lipschitz_light(all_halve(10), opt);
    CHECK(outcome.pass());
    CHECK(outcome.global_ratio.str() == "1");
    CHECK(outcome.lipschitz_f0.str() == "1");
    for (const auto& rec : outcome.targets)
        for (const auto& cr : rec.components) CHECK(cr.diam == rec.target.delta);

    for (std::uint64_t seed : {7, 8}) {
        auto outcome2 = verify_lipschitz_light(seeded(seed, 10), opt);
        INFO("seed ", seed);
        for (const auto& f : outcome2.failures) INFO(f);
        CHECK(outcome2.pass());
        CHECK(!outcome2.global_ratio.exceeds_int(kComponentBound));
        CHECK(!outcome2.lipschitz_f0.exceeds_int(1));  // F_0 is 1-Lipschitz
    }

    // results do not depend on the parallelism degree
    VerifyOptions opt2 = opt;
    opt2.jobs = 3;
    auto a = verify_lipschitz_light(seeded(7, 10), opt);
    auto b = verify_lipschitz_light(seeded(7, 10), opt2);
    CHECK(a.global_ratio.str() == b.global_ratio.str());
    REQUIRE(a.targets.size() == b.targets.size());
    for (std::size_t i = 0; i < a.targets.size(); ++i) {
        CHECK(a.targets[i].max_diam == b.targets[i].max_diam);
        CHECK(a.targets[i].components.size() == b.targets[i].components.size());
    }
}

TEST_CASE("verify options validation") {
    auto rule = all_halve(10);
    VerifyOptions bad;
    bad.depth = 10;
    bad.mstar_lo = 2;  // below 3
    bad.mstar_hi = 5;
    CHECK_THROWS(verify_lipschitz_light(rule, bad));
    bad.mstar_lo = 3;
    bad.mstar_hi = 7;  // 7 + 4 > 10
    CHECK_THROWS(verify_lipschitz_light(rule, bad));
}
