#include "snowcircle/fold.hpp"
#include "snowcircle/metric.hpp"

#include <doctest.h>

#include <random>

using namespace snowcircle;

namespace {

DyadicRational dr(const char* s) { return DyadicRational::parse(s); }
DyadicPoint pt(const char* s) { return DyadicPoint::parse(s); }

DiameterRule keep_at_root(unsigned depth, Topology t = Topology::circle) {
    std::unordered_set<std::uint64_t> keeps{DiameterRule::node_key(DyadicInterval(0, 0))};
    return DiameterRule(t, depth, std::move(keeps), 1);
}

DiameterRule all_halve(unsigned depth, Topology t = Topology::circle) {
    return DiameterRule::generate(GeneratorSpec::parse("uniform-halve"), depth, t);
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

TEST_CASE("fold_eval on the root fold") {
    auto kr = keep_at_root(8);
    FoldSpec f0(kr, 0);
    CHECK(fold_eval(f0, pt("3/8")) == pt("3/4"));
    CHECK(fold_eval(f0, pt("1/2")) == pt("1/2"));
    CHECK(fold_eval(f0, pt("0")) == pt("0"));
    CHECK(fold_eval(f0, pt("1/4")) == pt("1/2"));
    CHECK(fold_eval(f0, pt("15/16")) == pt("7/8"));

    // identity-mode interval
    FoldSpec f1(kr, 1);
    for (const char* s : {"1/8", "3/8", "9/16", "7/8"}) CHECK(fold_eval(f1, pt(s)) == pt(s));
}

TEST_CASE("fold preserves grid depth and fixes D_n") {
    auto rule = seeded(3, 8);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 300; ++i) {
        unsigned n = rng() % 6;
        FoldSpec f(rule, n);
        unsigned k = n + rng() % (9 - n);
        DyadicPoint x = canonicalize(DyadicPoint(rng() % ((std::uint64_t{1} << k) + 1), k),
                                     Topology::circle);
        DyadicPoint y = fold_eval(f, x);
        CHECK(y.level <= std::max(k, n + 1));  // maps D_k into D_k for k >= n
        if (x.level <= n) CHECK(y == x);
    }
}

TEST_CASE("fold_preimages") {
    auto kr = keep_at_root(8);
    FoldSpec f0(kr, 0);
    auto pre_half = fold_preimages(f0, pt("1/2"));
    REQUIRE(pre_half.size() == 3);
    CHECK(pre_half[0] == pt("1/4"));
    CHECK(pre_half[1] == pt("1/2"));
    CHECK(pre_half[2] == pt("3/4"));
    auto pre_zero = fold_preimages(f0, pt("0"));
    REQUIRE(pre_zero.size() == 1);
    CHECK(pre_zero[0] == pt("0"));
    auto pre78 = fold_preimages(f0, pt("7/8"));
    REQUIRE(pre78.size() == 1);
    CHECK(pre78[0] == pt("15/16"));

    // preimages found analytically match a grid scan of fold_eval
    for (std::uint64_t seed : {31, 32}) {
        auto rule = seeded(seed, 6);
        for (unsigned n : {0u, 1u, 2u}) {
            FoldSpec f(rule, n);
            const unsigned K = 7;
            std::vector<std::vector<std::uint64_t>> scan(1 << K);
            for (std::uint64_t i = 0; i < (std::uint64_t{1} << K); ++i) {
                DyadicPoint img = fold_eval(f, canonicalize(DyadicPoint(i, K), Topology::circle));
                scan[img.numerator << (K - img.level)].push_back(i);
            }
            for (std::uint64_t j = 0; j < (std::uint64_t{1} << K); ++j) {
                DyadicPoint y = canonicalize(DyadicPoint(j, K), Topology::circle);
                auto pre = fold_preimages(f, y);
                std::vector<std::uint64_t> got;
                for (const auto& p : pre)
                    if (p.level <= K) got.push_back(p.numerator << (K - p.level));
                std::sort(got.begin(), got.end());
                // scan finds exactly the grid-resolution preimages
                CHECK(got == scan[j]);
            }
        }
    }
}

TEST_CASE("cascade and limit maps") {
    auto ah = all_halve(8);
    std::mt19937_64 rng(9);
    for (int i = 0; i < 50; ++i) {
        DyadicPoint x = canonicalize(DyadicPoint(rng() % 256, 8), Topology::circle);
        CHECK(cascade_eval(ah, 0, 7, x) == x);
        CHECK(limit_eval(ah, 0, x) == x);
    }

    auto kr = keep_at_root(8);
    CHECK(cascade_eval(kr, 0, 3, pt("3/8")) == pt("3/4"));
    CHECK(limit_eval(kr, 0, pt("3/8")) == pt("3/4"));
    CHECK(cascade_eval(kr, 2, 2, pt("3/8")) == fold_eval(FoldSpec(kr, 2), pt("3/8")));

    auto rule = seeded(41, 8);
    for (int i = 0; i < 100; ++i) {
        unsigned m = rng() % 4;
        DyadicPoint x = canonicalize(DyadicPoint(rng() % 257, 8), Topology::circle);
        if (x.level <= m) CHECK(limit_eval(rule, m, x) == x);
        // stabilization: beyond the point's level the cascade is constant
        DyadicPoint via_cascade = cascade_eval(rule, m, 12, x);
        CHECK(limit_eval(rule, m, x) == via_cascade);
        // semigroup: F_{m,n}(F_{n+1}(x)) = F_m(x)
        unsigned n = m + rng() % 5;
        DyadicPoint lhs = cascade_eval(rule, m, n, limit_eval(rule, n + 1, x));
        CHECK(lhs == limit_eval(rule, m, x));
    }
}

TEST_CASE("interval_image") {
    auto kr = keep_at_root(8);
    FoldSpec f0(kr, 0);
    auto img_left = interval_image(f0, DyadicInterval(1, 0));
    CHECK(img_left.folded);
    REQUIRE(img_left.spill.has_value());
    CHECK(*img_left.spill == DyadicInterval(2, 2));
    auto img_right = interval_image(f0, DyadicInterval(1, 1));
    REQUIRE(img_right.spill.has_value());
    CHECK(*img_right.spill == DyadicInterval(2, 1));

    FoldSpec f1(kr, 1);
    auto ident = interval_image(f1, DyadicInterval(2, 1));
    CHECK(!ident.folded);
    CHECK(!ident.spill.has_value());

    // fold-mode diameter ratio: diam_n(f_n(I)) = 3/4 diam_{n+1}(I), exact
    for (std::uint64_t seed : {51, 52}) {
        auto rule = seeded(seed, 8);
        for (unsigned n : {0u, 1u, 2u, 3u}) {
            for (std::uint64_t idx = 0; idx < (std::uint64_t{1} << (n + 1)); ++idx) {
                DyadicInterval I(n + 1, idx);
                FoldSpec f(rule, n);
                auto img = interval_image(f, I);
                if (!img.folded) continue;
                MetricIndex idx_n(rule, 8, MetricKind::trunc(n));
                MetricIndex idx_n1(rule, 8, MetricKind::trunc(n + 1));
                ArcSet arcs = img.as_arcs(Topology::circle);
                std::vector<DyadicPoint> sample;
                for (const auto& v : arcs.sample_points(8, 0))
                    sample.push_back(point_from_value(v, Topology::circle));
                DyadicRational img_diam = idx_n.set_diameter(sample);
                DyadicRational src_diam = idx_n1.interval_endpoint_distance_check(I);
                CHECK(img_diam.times(4) == src_diam.times(3));
            }
        }
    }
}

TEST_CASE("real_coordinate") {
    CHECK(real_coordinate(pt("3/4"), Topology::circle) == dr("1/4"));
    CHECK(real_coordinate(pt("1/2"), Topology::circle) == dr("1/2"));
    CHECK(real_coordinate(pt("3/8"), Topology::arc) == dr("3/8"));
}

TEST_CASE("arc images and preimages agree with pointwise evaluation") {
    for (std::uint64_t seed : {61, 62}) {
        auto rule = seeded(seed, 6);
        std::mt19937_64 rng(seed);
        for (unsigned n : {0u, 1u, 2u}) {
            FoldSpec f(rule, n);
            for (int trial = 0; trial < 8; ++trial) {
                std::uint64_t a = rng() % 64, len = 1 + rng() % 16;
                ArcSet s = ArcSet::span(DyadicRational(BigInt(a), 6),
                                        DyadicRational(BigInt(len), 6), Topology::circle);
                ArcSet img = fold_image_arcs(f, s);
                ArcSet pre = fold_preimage_arcs(f, s);
                for (std::uint64_t g = 0; g < 128; ++g) {
                    DyadicPoint x = canonicalize(DyadicPoint(g, 7), Topology::circle);
                    DyadicPoint y = fold_eval(f, x);
                    if (s.contains(x.value())) CHECK(img.contains(y.value()));
                    CHECK(pre.contains(x.value()) == s.contains(y.value()));
                }
            }
        }
    }
}

TEST_CASE("fold contraction on a small sweep") {
    for (std::uint64_t seed : {71, 72}) {
        auto rule = seeded(seed, 6);
        for (unsigned n : {0u, 1u, 2u, 3u}) {
            MetricIndex idx_n(rule, 6, MetricKind::trunc(n));
            MetricIndex idx_n1(rule, 6, MetricKind::trunc(n + 1));
            AllPairs ap_n(idx_n), ap_n1(idx_n1);
            FoldSpec f(rule, n);
            std::vector<std::uint64_t> image(64);
            for (std::uint64_t i = 0; i < 64; ++i) {
                DyadicPoint y = fold_eval(f, canonicalize(DyadicPoint(i, 6), Topology::circle));
                image[i] = y.numerator << (6 - y.level);
            }
            for (std::uint64_t i = 0; i < 64; ++i)
                for (std::uint64_t j = 0; j < 64; ++j)
                    CHECK(ap_n.d(image[i], image[j]) <= ap_n1.d(i, j));
        }
    }
}
