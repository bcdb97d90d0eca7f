#pragma once

#include "snowcircle/arcset.hpp"
#include "snowcircle/dyadic.hpp"
#include "snowcircle/rule.hpp"

#include <optional>
#include <vector>

namespace snowcircle {

enum class FoldMode { identity, fold };

/// The level-n map f_n of a rule: per interval of level n, the identity when
/// the children halve, a folding map when they keep.
struct FoldSpec {
    const DiameterRule* rule = nullptr;
    unsigned n = 0;

    FoldSpec(const DiameterRule& r, unsigned level) : rule(&r), n(level) {}
    FoldMode mode(const DyadicInterval& I) const {
        return rule->decision(I) == Decision::keep ? FoldMode::fold : FoldMode::identity;
    }
    bool is_identity_everywhere() const;
};

/// One affine piece y = y_at_lo +/- 2 (x - lo) over [lo, hi].
struct AffinePiece {
    DyadicRational lo, hi;
    DyadicRational y_at_lo;
    bool rising;  // slope +2 when true, -2 otherwise

    DyadicRational eval(const DyadicRational& x) const;
    DyadicRational range_lo() const;
    DyadicRational range_hi() const;
};

/// The folding map of one interval as its three-piece tent form.
struct PiecewiseAffine {
    std::vector<AffinePiece> pieces;  // three, contiguous, covering the interval
    static PiecewiseAffine folding_map(const DyadicInterval& I);
};

DyadicPoint fold_eval(const FoldSpec& spec, const DyadicPoint& x);
std::vector<DyadicPoint> fold_preimages(const FoldSpec& spec, const DyadicPoint& y);

/// F_{m,n} = f_m ∘ f_{m+1} ∘ ... ∘ f_n applied to x.
DyadicPoint cascade_eval(const DiameterRule& rule, unsigned m, unsigned n, const DyadicPoint& x);

/// The stabilized limit map F_m on dyadic points.
DyadicPoint limit_eval(const DiameterRule& rule, unsigned m, const DyadicPoint& x);

struct IntervalImage {
    DyadicInterval primary;                // the input interval, always covered
    std::optional<DyadicInterval> spill;   // adjacent level-(n+2) interval in fold mode
    bool folded = false;
    ArcSet as_arcs(Topology t) const;
};

/// Image of I in I_{n+1} under f_n.
IntervalImage interval_image(const FoldSpec& spec, const DyadicInterval& I);

/// The final map to the line: basepoint distance on the circle, identity on
/// the arc.
DyadicRational real_coordinate(const DyadicPoint& x, Topology t);

/// Exact image/preimage of arc unions under f_n.
ArcSet fold_image_arcs(const FoldSpec& spec, const ArcSet& s);
ArcSet fold_preimage_arcs(const FoldSpec& spec, const ArcSet& s);

/// f_n on a grid position scaled by 2^L (n < L); exact integer arithmetic.
std::uint64_t fold_position(const FoldSpec& spec, std::uint64_t pos, unsigned L);

/// F_m images of every grid point of D_L, as positions scaled by 2^L.
std::vector<std::uint64_t> limit_map_positions(const DiameterRule& rule, unsigned L, unsigned m);

/// F_{m,n} images of every grid point of D_L, as positions scaled by 2^L.
std::vector<std::uint64_t> cascade_map_positions(const DiameterRule& rule, unsigned L, unsigned m,
                                                 unsigned n);

}  // namespace snowcircle
