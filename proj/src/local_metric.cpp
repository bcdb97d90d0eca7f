#include "snowcircle/local_metric.hpp"

#include <algorithm>

namespace snowcircle {

LocalMetric::LocalMetric(const DiameterRule& rule, MetricKind kind, unsigned scale,
                         const ArcSet& region)
    : rule_(&rule), kind_(kind), K_(scale) {
    if (K_ >= 62) throw std::invalid_argument("local metric scale too deep");
    M_ = std::uint64_t{1} << K_;
    circle_ = rule.topology() == Topology::circle;
    k_min_ = circle_ ? 1 : 0;
    root_weight_ = M_;  // Delta_kind(root) = 1 at any truncation

    // Scaled segment endpoints, computed once.
    std::vector<std::pair<std::uint64_t, std::uint64_t>> segs;
    for (const auto& [lo, hi] : region.segments()) {
        if (lo.exponent() > K_ || hi.exponent() > K_)
            throw std::invalid_argument("region endpoints below the local scale");
        segs.emplace_back(static_cast<std::uint64_t>(lo.scaled(K_)),
                          static_cast<std::uint64_t>(hi.scaled(K_)));
    }

    // Collect the telescoped interval family.
    std::vector<std::uint64_t> keys;
    for (unsigned k = k_min_; k <= K_; ++k) {
        std::uint64_t cells = std::uint64_t{1} << k;
        std::uint64_t cell = M_ >> k;
        std::uint64_t marker = std::uint64_t{1} << k;
        if (cells <= 64) {
            for (std::uint64_t i = 0; i < cells; ++i) keys.push_back(marker | i);
            continue;
        }
        for (const auto& [lo, hi] : segs) {
            const long long pad = static_cast<long long>(4 * cell);
            long long ifrom = (static_cast<long long>(lo) - pad) /
                              static_cast<long long>(cell);
            if (static_cast<long long>(lo) - pad < 0) --ifrom;  // floor for negatives
            long long ito = static_cast<long long>(hi + pad) / static_cast<long long>(cell);
            long long count = ito - ifrom + 1;
            if (circle_) {
                if (count >= static_cast<long long>(cells)) {
                    for (std::uint64_t q = 0; q < cells; ++q) keys.push_back(marker | q);
                } else {
                    for (long long q = ifrom; q <= ito; ++q) {
                        long long im = q % static_cast<long long>(cells);
                        if (im < 0) im += cells;
                        keys.push_back(marker | static_cast<std::uint64_t>(im));
                    }
                }
            } else {
                long long a = std::max<long long>(0, ifrom);
                long long b = std::min<long long>(static_cast<long long>(cells) - 1, ito);
                for (long long q = a; q <= b; ++q)
                    keys.push_back(marker | static_cast<std::uint64_t>(q));
            }
        }
    }
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

    // Vertices are the included interval endpoints.
    std::vector<std::uint64_t> pos;
    for (std::uint64_t key : keys) {
        unsigned k = 63;
        while (!(key >> k)) --k;
        std::uint64_t i = key ^ (std::uint64_t{1} << k);
        std::uint64_t cell = M_ >> k;
        std::uint64_t a = i * cell;
        std::uint64_t b = a + cell;
        pos.push_back(a);
        pos.push_back(circle_ ? b % M_ : b);
    }
    std::sort(pos.begin(), pos.end());
    pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
    verts_ = std::move(pos);

    out_right_.assign(verts_.size(), {});
    out_left_.assign(verts_.size(), {});
    for (std::uint64_t key : keys) {
        unsigned k = 63;
        while (!(key >> k)) --k;
        std::uint64_t i = key ^ (std::uint64_t{1} << k);
        std::uint64_t cell = M_ >> k;
        DyadicInterval I(k, i);
        unsigned e = kind_.truncated ? rule_->delta_truncated_exponent(kind_.n, I)
                                     : rule_->delta_exponent(I);
        std::uint64_t w = M_ >> e;
        weight_by_key_[key] = w;
        std::uint64_t a = i * cell;
        std::uint64_t b = circle_ ? (a + cell) % M_ : a + cell;
        Edge edge{vertex_id(a), vertex_id(b), w, a, cell};
        std::uint32_t id = static_cast<std::uint32_t>(edges_.size());
        edges_.push_back(edge);
        out_right_[edge.from].push_back(id);
        out_left_[edge.to].push_back(id);
    }
}

std::uint32_t LocalMetric::vertex_id(std::uint64_t p) const {
    auto it = std::lower_bound(verts_.begin(), verts_.end(), p);
    if (it == verts_.end() || *it != p) throw std::invalid_argument("position not in local graph");
    return static_cast<std::uint32_t>(it - verts_.begin());
}

std::uint64_t LocalMetric::position(const DyadicRational& v) const {
    if (v.exponent() > K_) throw std::invalid_argument("value too deep for local scale");
    BigInt p = v.scaled(K_);
    std::uint64_t u = static_cast<std::uint64_t>(p);
    if (circle_ && u == M_) u = 0;
    if (u > M_) throw std::invalid_argument("value outside [0,1]");
    return u;
}

std::uint64_t LocalMetric::cell_weight(unsigned level, std::uint64_t index) const {
    auto it = weight_by_key_.find((std::uint64_t{1} << level) | index);
    if (it == weight_by_key_.end())
        throw std::logic_error("local graph is missing a containing cell");
    return it->second;
}

void LocalMetric::run(std::uint64_t base, bool rightward, std::vector<std::uint64_t>& dist,
                      std::vector<std::pair<std::uint64_t, std::uint32_t>>& heap) const {
    dist.assign(verts_.size(), kDistInf);
    heap.clear();
    auto push = [&](std::uint32_t v, std::uint64_t d) {
        if (d < dist[v]) {
            dist[v] = d;
            heap.emplace_back(d, v);
            std::push_heap(heap.begin(), heap.end(), std::greater<>());
        }
    };

    // seed with the cells containing the base point
    for (unsigned k = k_min_; k <= K_; ++k) {
        std::uint64_t cell = M_ >> k;
        std::uint64_t a = (base / cell) * cell;
        std::uint64_t entry;
        if (rightward) {
            if (!circle_ && a + cell > M_) continue;
            if (a == base && base == M_) continue;
            entry = circle_ ? (a + cell) % M_ : a + cell;
        } else {
            if (base % cell == 0) {
                if (!circle_ && base < cell) continue;
                a = circle_ ? (base + M_ - cell) % M_ : base - cell;
            }
            entry = a;
        }
        push(vertex_id(entry), cell_weight(k, a / cell));
    }

    while (!heap.empty()) {
        auto [d, v] = heap.front();
        std::pop_heap(heap.begin(), heap.end(), std::greater<>());
        heap.pop_back();
        if (d != dist[v]) continue;
        if (d > root_weight_ && circle_) continue;  // dominated by the root chain
        const auto& outs = rightward ? out_right_[v] : out_left_[v];
        for (std::uint32_t eid : outs) {
            const Edge& e = edges_[eid];
            // an edge crossing the base point would wrap the frontier fully
            std::uint64_t off = circle_ ? (base + M_ - e.lo) % M_ : 0;
            if (circle_ && off > 0 && off <= e.cell) continue;
            if (!circle_) {
                if (rightward && e.lo < base) continue;
                if (!rightward && e.lo + e.cell > base) continue;
            }
            push(rightward ? e.to : e.from, d + e.weight);
        }
    }
}

void LocalMetric::fill_profile(std::uint64_t base, Profile& out) const {
    out.base = base;
    // A chain covers the target iff its frontier offset reaches the target's
    // offset, so each direction reduces to a suffix minimum over offsets.
    for (bool rightward : {true, false}) {
        run(base, rightward, out.scratch, out.heap);
        auto& side = rightward ? out.right : out.left;
        side.clear();
        for (std::size_t id = 0; id < verts_.size(); ++id) {
            if (out.scratch[id] == kDistInf) continue;
            std::uint64_t v = verts_[id];
            std::uint64_t off;
            if (circle_)
                off = rightward ? (v + M_ - base) % M_ : (base + M_ - v) % M_;
            else
                off = rightward ? v - base : base - v;
            if (off == 0 && v != base) off = M_;  // the far seam on the circle
            side.emplace_back(off, out.scratch[id]);
        }
        std::sort(side.begin(), side.end());
        for (std::size_t i = side.size(); i-- > 1;)
            side[i - 1].second = std::min(side[i - 1].second, side[i].second);
    }
}

std::uint64_t LocalMetric::profile_dist(const Profile& prof, std::uint64_t target) const {
    if (target == prof.base) return 0;
    std::uint64_t best = circle_ ? root_weight_ : kDistInf;
    auto lookup = [](const std::vector<std::pair<std::uint64_t, std::uint64_t>>& side,
                     std::uint64_t need) {
        auto it = std::lower_bound(side.begin(), side.end(),
                                   std::make_pair(need, std::uint64_t{0}));
        return it == side.end() ? kDistInf : it->second;
    };
    if (circle_) {
        best = std::min(best, lookup(prof.right, (target + M_ - prof.base) % M_));
        best = std::min(best, lookup(prof.left, (prof.base + M_ - target) % M_));
    } else {
        if (target > prof.base) best = std::min(best, lookup(prof.right, target - prof.base));
        if (target < prof.base) best = std::min(best, lookup(prof.left, prof.base - target));
    }
    return best;
}

std::uint64_t LocalMetric::dist_scaled(std::uint64_t x, std::uint64_t y) const {
    if (x == y) return 0;
    Profile prof;
    fill_profile(x, prof);
    return profile_dist(prof, y);
}

DyadicRational LocalMetric::dist(const DyadicRational& x, const DyadicRational& y) const {
    return DyadicRational(BigInt(dist_scaled(position(x), position(y))), K_);
}

}  // namespace snowcircle
