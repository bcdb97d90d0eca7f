#pragma once

#include "snowcircle/arcset.hpp"
#include "snowcircle/dyadic.hpp"
#include "snowcircle/metric.hpp"
#include "snowcircle/rule.hpp"

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace snowcircle {

// ---------------------------------------------------------------------------
// LocalMetric: exact chain distances at a deep working scale, built from a
// telescoped interval family around a small region. Per level k it keeps the
// intervals within four own-lengths of the region (coarse levels cover the
// whole circle), which contains every minimal chain between region points:
// along a minimal chain interval sizes at least double away from either
// terminal, so each member lies within one own-length of a terminal.
// ---------------------------------------------------------------------------
class LocalMetric {
public:
    LocalMetric(const DiameterRule& rule, MetricKind kind, unsigned scale, const ArcSet& region);

    unsigned scale() const { return K_; }
    std::uint64_t grid() const { return M_; }
    std::size_t vertex_count() const { return verts_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    std::uint64_t position(const DyadicRational& v) const;  // value * 2^K, must be exact

    /// Exact distance between region points (scaled by 2^K).
    std::uint64_t dist_scaled(std::uint64_t x, std::uint64_t y) const;
    DyadicRational dist(const DyadicRational& x, const DyadicRational& y) const;

    struct Profile {
        std::uint64_t base = 0;
        // (travel offset, best cost to any frontier at or beyond it), per
        // direction, sorted by offset with suffix-minimized costs
        std::vector<std::pair<std::uint64_t, std::uint64_t>> right, left;
        std::vector<std::uint64_t> scratch;
        std::vector<std::pair<std::uint64_t, std::uint32_t>> heap;
    };
    void fill_profile(std::uint64_t base, Profile& out) const;
    std::uint64_t profile_dist(const Profile& prof, std::uint64_t target) const;

private:
    const DiameterRule* rule_;
    MetricKind kind_;
    unsigned K_;
    std::uint64_t M_;
    bool circle_;
    unsigned k_min_;
    std::uint64_t root_weight_;

    std::vector<std::uint64_t> verts_;  // sorted scaled positions
    struct Edge {
        std::uint32_t from, to;  // vertex ids (left endpoint, right endpoint)
        std::uint64_t weight;
        std::uint64_t lo;        // scaled left endpoint position
        std::uint64_t cell;      // scaled length
    };
    std::vector<Edge> edges_;
    std::vector<std::vector<std::uint32_t>> out_right_, out_left_;  // edge ids per vertex
    std::unordered_map<std::uint64_t, std::uint64_t> weight_by_key_;  // node_key -> weight

    std::uint32_t vertex_id(std::uint64_t pos) const;
    std::uint64_t cell_weight(unsigned level, std::uint64_t index) const;
    void run(std::uint64_t base, bool rightward, std::vector<std::uint64_t>& dist,
             std::vector<std::pair<std::uint64_t, std::uint32_t>>& heap) const;
};

}  // namespace snowcircle
