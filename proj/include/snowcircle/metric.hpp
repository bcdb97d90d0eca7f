#pragma once

#include "snowcircle/dyadic.hpp"
#include "snowcircle/rule.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace snowcircle {

struct MetricKind {
    bool truncated = false;
    unsigned n = 0;

    static MetricKind full() { return MetricKind{false, 0}; }
    static MetricKind trunc(unsigned n) { return MetricKind{true, n}; }

    bool operator==(const MetricKind& o) const = default;
    std::string str() const { return truncated ? "trunc:" + std::to_string(n) : "full"; }
    static MetricKind parse(const std::string& s);
};

constexpr std::uint64_t kDistInf = std::numeric_limits<std::uint64_t>::max();

/// A chain of dyadic intervals, consecutive members sharing an endpoint,
/// listed along the positive orientation of the covered arc.
struct Chain {
    std::vector<DyadicInterval> intervals;
    bool operator==(const Chain& o) const = default;
};

struct MinimalityReport {
    bool minimal = true;
    std::string violation;  // human-readable description of the first failure
};

// ---------------------------------------------------------------------------
// Per-source shortest-path profile. After MetricIndex::fill_profile the
// distance from the base point to any grid point is an O(1) lookup.
// ---------------------------------------------------------------------------
struct DistProfile {
    std::uint64_t base = 0;
    std::uint64_t radius = kDistInf;  // values above this are only lower bounds
    std::vector<std::uint64_t> suffix_right, suffix_left;  // min cost to cover offset >= t

    // scratch reused across fills
    std::vector<std::uint64_t> dist;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> heap;
};

// ---------------------------------------------------------------------------
// MetricIndex: exact chain-metric engine over the depth-L endpoint grid.
// Vertices are the points of D_L; every interval of level <= L contributes
// one edge between its endpoints, weighted by Delta (or Delta_n).
// Weights are held as integers scaled by 2^L; all arithmetic is exact.
// ---------------------------------------------------------------------------
class MetricIndex {
public:
    MetricIndex(DiameterRule rule, unsigned depth, MetricKind kind);

    const DiameterRule& rule() const { return rule_; }
    Topology topology() const { return rule_.topology(); }
    unsigned depth() const { return L_; }
    MetricKind kind() const { return kind_; }

    std::uint64_t grid() const { return M_; }  // 2^L
    std::size_t vertex_count() const { return topology() == Topology::circle ? M_ : M_ + 1; }
    std::size_t edge_count() const { return 2 * M_ - 1; }  // intervals of level <= L

    /// Scaled position of a representable point (throws beyond depth L).
    std::uint64_t position(const DyadicPoint& p) const;
    DyadicPoint point_at(std::uint64_t pos) const;

    std::uint64_t weight_scaled(const DyadicInterval& I) const;  // Delta_kind * 2^L
    DyadicRational unscale(std::uint64_t w) const { return DyadicRational(BigInt(w), L_); }

    /// d(x, y), exact.
    DyadicRational dist(const DyadicPoint& x, const DyadicPoint& y) const;
    std::uint64_t dist_scaled(std::uint64_t x, std::uint64_t y) const;

    /// One Dijkstra per orientation; afterwards profile_dist answers any
    /// target in O(1). Distances above radius_cap come back as lower bounds.
    void fill_profile(std::uint64_t base, DistProfile& out,
                      std::uint64_t radius_cap = kDistInf) const;
    std::uint64_t profile_dist(const DistProfile& prof, std::uint64_t target) const;

    /// Exact d-diameter of a nonempty point set (0 for singletons).
    DyadicRational set_diameter(const std::vector<DyadicPoint>& pts) const;

    /// Chain realizing dist(x, y); deterministic tie-breaks (fewest intervals,
    /// then lexicographically smallest interval sequence).
    Chain minimal_chain(const DyadicPoint& x, const DyadicPoint& y) const;

    /// dist(a, b) for the endpoints of I; throws logic_error unless it equals
    /// delta(I) exactly (the interval identity).
    DyadicRational interval_endpoint_distance_check(const DyadicInterval& I) const;

private:
    DiameterRule rule_;
    unsigned L_;
    MetricKind kind_;
    std::uint64_t M_;
    unsigned k_min_;                                // 1 on the circle (root handled apart)
    std::uint64_t root_weight_;                     // scaled Delta_kind(root)
    std::vector<std::vector<std::uint64_t>> wtab_;  // [level][index] scaled weights

    struct PathSearch;  // reconstruction state for minimal_chain
    void run_cover_dijkstra(std::uint64_t base, bool rightward, std::uint64_t radius_cap,
                            std::vector<std::uint64_t>& dist,
                            std::vector<std::pair<std::uint64_t, std::uint64_t>>& heap) const;
};

// ---------------------------------------------------------------------------
// All-pairs table over the full grid (scaled u32 entries). Memory gate:
// depth <= 14.
// ---------------------------------------------------------------------------
class AllPairs {
public:
    explicit AllPairs(const MetricIndex& idx);
    std::uint64_t d(std::uint64_t x, std::uint64_t y) const {
        return table_[x * n_ + y];
    }
    std::size_t points() const { return n_; }

private:
    std::size_t n_;
    std::vector<std::uint32_t> table_;
};

MinimalityReport is_minimal(const Chain& c, Topology t);

/// L:minimalchain structure: interval levels strictly decrease up to the
/// (unique or unique-adjacent-pair) largest interval and strictly increase after.
bool chain_unimodality_check(const Chain& c, Topology t);

/// Independent oracle: exhaustive rightward/leftward search over all chains
/// built from intervals of level <= budget. Small instances only (budget <= 8).
DyadicRational brute_force_dist(const DiameterRule& rule, MetricKind kind, const DyadicPoint& x,
                                const DyadicPoint& y, unsigned level_budget);

struct SubarcDiameter {
    DyadicRational diameter;
    enum class Side { positive, negative, tie, whole } side = Side::whole;
};

/// Diameter (over depth-L grid samples) of the minimal-diameter component of
/// the complement of {x, y}, endpoints included.
SubarcDiameter subarc_diameter(const MetricIndex& idx, const AllPairs& ap, const DyadicPoint& x,
                               const DyadicPoint& y);

struct TurningReport {
    DyadicRational worst_subarc_diam;  // numerator of the constant
    DyadicRational worst_dist;         // denominator
    DyadicPoint witness_x, witness_y;
    std::string ratio_str() const;
};

struct SamplingPlan {
    bool all_pairs = true;
    std::size_t sample_count = 0;  // when not all pairs
    std::uint64_t seed = 0;
};

TurningReport bounded_turning_constant(const MetricIndex& idx, const SamplingPlan& plan);

/// Exact distance-matrix CSV: header of point labels, entries "m/2^e" style.
std::string distance_matrix_csv(const MetricIndex& idx, unsigned depth);

}  // namespace snowcircle
