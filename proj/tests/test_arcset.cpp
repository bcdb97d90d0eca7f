#include "snowcircle/arcset.hpp"

#include <doctest.h>

using namespace snowcircle;

namespace {
DyadicRational dr(const char* s) { return DyadicRational::parse(s); }
}  // namespace

TEST_CASE("span, union, normalization") {
    ArcSet a = ArcSet::span(dr("1/8"), dr("1/8"), Topology::circle);
    ArcSet b = ArcSet::span(dr("1/4"), dr("1/8"), Topology::circle);
    a.unite(b);
    REQUIRE(a.segments().size() == 1);
    CHECK(a.segments()[0] == std::pair{dr("1/8"), dr("3/8")});

    // wrapping span splits at the seam but counts as one component
    ArcSet w = ArcSet::span(dr("7/8"), dr("1/4"), Topology::circle);
    REQUIRE(w.segments().size() == 2);
    auto comps = w.components();
    REQUIRE(comps.size() == 1);
    CHECK(comps[0].start == dr("7/8"));
    CHECK(comps[0].length == dr("1/4"));
    CHECK(w.contains(dr("0")));
    CHECK(w.contains(dr("15/16")));
    CHECK(w.contains(dr("1/16")));
    CHECK(!w.contains(dr("1/2")));

    CHECK_THROWS(ArcSet::span(dr("7/8"), dr("1/4"), Topology::arc));
}

TEST_CASE("containment and clipping") {
    ArcSet s = ArcSet::span(dr("1/8"), dr("1/4"), Topology::circle);  // [1/8, 3/8]
    CHECK(s.contains_set(ArcSet::span(dr("3/16"), dr("1/16"), Topology::circle)));
    CHECK(!s.contains_set(ArcSet::span(dr("5/16"), dr("1/8"), Topology::circle)));
    CHECK(s.intersects_interval(DyadicInterval(2, 1)));
    CHECK(!s.intersects_interval(DyadicInterval(2, 2)));
    ArcSet clipped = s.clip_to_interval(DyadicInterval(2, 0));
    REQUIRE(clipped.segments().size() == 1);
    CHECK(clipped.segments()[0] == std::pair{dr("1/8"), dr("1/4")});
}

TEST_CASE("hull and components") {
    ArcSet s(Topology::circle);
    s.unite(ArcSet::span(dr("0"), dr("1/16"), Topology::circle));
    s.unite(ArcSet::span(dr("7/8"), dr("1/16"), Topology::circle));
    auto comps = s.components();
    REQUIRE(comps.size() == 2);
    auto h = s.hull();
    REQUIRE(h.has_value());
    CHECK(h->start == dr("7/8"));
    CHECK(h->length == dr("3/16"));

    ArcSet lin(Topology::arc);
    lin.unite(ArcSet::span(dr("1/4"), dr("1/8"), Topology::arc));
    lin.unite(ArcSet::span(dr("3/4"), dr("1/8"), Topology::arc));
    auto lh = lin.hull();
    REQUIRE(lh.has_value());
    CHECK(lh->start == dr("1/4"));
    CHECK(lh->length == dr("5/8"));

    CHECK(s.total_length() == dr("1/8"));
}

TEST_CASE("reflection") {
    ArcSet s = ArcSet::span(dr("1/4"), dr("1/4"), Topology::circle);  // [1/4, 1/2]
    auto r = s.reflect(dr("3/8"));
    REQUIRE(r.has_value());
    CHECK(*r == s);  // symmetric about its midpoint

    auto r0 = s.reflect(dr("0"));
    REQUIRE(r0.has_value());
    CHECK(*r0 == ArcSet::span(dr("1/2"), dr("1/4"), Topology::circle));

    // reflecting across the seam wraps
    ArcSet near_zero = ArcSet::span(dr("1/16"), dr("1/16"), Topology::circle);
    auto rz = near_zero.reflect(dr("0"));
    REQUIRE(rz.has_value());
    CHECK(*rz == ArcSet::span(dr("7/8"), dr("1/16"), Topology::circle));

    ArcSet edge = ArcSet::span(dr("0"), dr("1/4"), Topology::arc);
    CHECK(!edge.reflect(dr("1/16")).has_value());  // image leaves [0,1]
    auto ok = edge.reflect(dr("1/2"));
    REQUIRE(ok.has_value());
    CHECK(*ok == ArcSet::span(dr("3/4"), dr("1/4"), Topology::arc));
}

TEST_CASE("points and samples") {
    ArcSet p = ArcSet::point(dr("1"), Topology::circle);
    CHECK(p.contains(dr("0")));
    CHECK(p.total_length().is_zero());

    ArcSet s = ArcSet::span(dr("5/32"), dr("1/8"), Topology::circle);
    auto pts = s.sample_points(3, 0);
    // endpoints plus the D_3 grid point 1/4
    REQUIRE(pts.size() == 3);
    CHECK(pts[0] == dr("5/32"));
    CHECK(pts[1] == dr("1/4"));
    CHECK(pts[2] == dr("9/32"));
}
