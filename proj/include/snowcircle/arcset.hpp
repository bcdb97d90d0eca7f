#pragma once

#include "snowcircle/dyadic.hpp"

#include <optional>
#include <vector>

namespace snowcircle {

/// Closed arc in circular coordinates: start plus length along the positive
/// orientation. Length 0 is a single point.
struct ExactArc {
    DyadicRational start;
    DyadicRational length;
};

/// value mod 1, exact
DyadicRational mod_one(const DyadicRational& v);

// ---------------------------------------------------------------------------
// ArcSet: a finite union of closed arcs/points with exact dyadic endpoints.
// Stored as sorted non-overlapping segments [lo, hi] inside [0,1]; on the
// circle a component may cross 0, in which case it is held as the trailing
// [x, 1] plus leading [0, y] segments and reassembled by components().
// ---------------------------------------------------------------------------
class ArcSet {
public:
    ArcSet() : topology_(Topology::circle) {}
    explicit ArcSet(Topology t) : topology_(t) {}

    static ArcSet point(const DyadicRational& x, Topology t);
    /// Closed segment from lo, extending `length` along positive orientation
    /// (wraps on the circle; throws beyond [0,1] on the arc).
    static ArcSet span(const DyadicRational& lo, const DyadicRational& length, Topology t);
    static ArcSet of_interval(const DyadicInterval& I, Topology t);

    Topology topology() const { return topology_; }
    bool empty() const { return segs_.empty(); }
    bool operator==(const ArcSet& o) const;

    void unite(const ArcSet& o);
    static ArcSet unions(const std::vector<ArcSet>& parts);

    bool contains(const DyadicRational& x) const;
    bool contains_set(const ArcSet& o) const;
    bool intersects_interval(const DyadicInterval& I) const;
    ArcSet clip_to_interval(const DyadicInterval& I) const;

    /// Segments in [0,1], sorted; the raw storage form.
    const std::vector<std::pair<DyadicRational, DyadicRational>>& segments() const {
        return segs_;
    }

    /// Connected components as circular arcs, in positive order starting from
    /// the component following the largest gap.
    std::vector<ExactArc> components() const;

    DyadicRational total_length() const;

    /// Smallest closed arc containing the set; nullopt when empty, and the
    /// full circle when no gap exists.
    std::optional<ExactArc> hull() const;

    /// Image under x -> 2c - x; nullopt when the image leaves [0,1] on the arc
    /// topology.
    std::optional<ArcSet> reflect(const DyadicRational& center) const;

    /// Points of D_K inside the set, at most `cap` of them, ascending circular
    /// order; always includes all segment endpoints.
    std::vector<DyadicRational> sample_points(unsigned K, std::size_t cap) const;

private:
    Topology topology_;
    std::vector<std::pair<DyadicRational, DyadicRational>> segs_;
    void normalize();
};

}  // namespace snowcircle
