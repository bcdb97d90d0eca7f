#include "snowcircle/metric.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <random>
#include <sstream>

namespace snowcircle {

namespace {

// Heap entries pack (key, offset) into one u64; offsets need <= 21 bits.
constexpr unsigned kOffsetBits = 21;

unsigned align_level(std::uint64_t pos, unsigned L) {
    if (pos == 0) return 0;
    unsigned tz = static_cast<unsigned>(std::countr_zero(pos));
    return tz >= L ? 0 : L - tz;
}

}  // namespace

MetricKind MetricKind::parse(const std::string& s) {
    if (s == "full") return full();
    if (s.rfind("trunc:", 0) == 0) return trunc(static_cast<unsigned>(std::stoul(s.substr(6))));
    throw std::invalid_argument("unknown metric kind: '" + s + "'");
}

// ---------------------------------------------------------------------------
// MetricIndex
// ---------------------------------------------------------------------------

MetricIndex::MetricIndex(DiameterRule rule, unsigned depth, MetricKind kind)
    : rule_(std::move(rule)), L_(depth), kind_(kind) {
    if (L_ < 1) throw std::invalid_argument("index depth must be >= 1");
    if (L_ > max_depth_cap()) throw std::invalid_argument("depth exceeds SNOWCIRCLE_MAX_DEPTH cap");
    if (L_ + 4 > 64 - kOffsetBits || L_ + 1 > kOffsetBits)
        throw std::invalid_argument("index depth too large for packed heap keys");
    M_ = std::uint64_t{1} << L_;
    k_min_ = topology() == Topology::circle ? 1 : 0;

    // Per-level scaled weights, derived level by level from the rule.
    wtab_.resize(L_ + 1);
    std::vector<unsigned> exp_prev{0}, exp_next;
    wtab_[0] = {M_};
    for (unsigned k = 1; k <= L_; ++k) {
        std::size_t width = std::size_t{1} << k;
        exp_next.resize(width);
        wtab_[k].resize(width);
        bool forced_halve = kind_.truncated && (k - 1) >= kind_.n;
        for (std::size_t parent = 0; parent < width / 2; ++parent) {
            unsigned e = exp_prev[parent];
            bool halve = forced_halve ||
                         rule_.decision(DyadicInterval(k - 1, parent)) == Decision::halve;
            unsigned ce = e + (halve ? 1 : 0);
            std::uint64_t w = M_ >> ce;
            exp_next[2 * parent] = exp_next[2 * parent + 1] = ce;
            wtab_[k][2 * parent] = wtab_[k][2 * parent + 1] = w;
        }
        std::swap(exp_prev, exp_next);
    }
    root_weight_ = wtab_[0][0];
}

std::uint64_t MetricIndex::position(const DyadicPoint& p) const {
    if (p.level > L_) throw std::invalid_argument("point not representable at index depth");
    return p.numerator << (L_ - p.level);
}

DyadicPoint MetricIndex::point_at(std::uint64_t pos) const {
    return canonicalize(DyadicPoint(pos, L_), topology());
}

std::uint64_t MetricIndex::weight_scaled(const DyadicInterval& I) const {
    if (I.level > L_) throw std::invalid_argument("interval below index depth");
    return wtab_[I.level][I.index];
}

void MetricIndex::run_cover_dijkstra(std::uint64_t base, bool rightward,
                                     std::uint64_t radius_cap, std::vector<std::uint64_t>& dist,
                                     std::vector<std::pair<std::uint64_t, std::uint64_t>>& heap)
    const {
    const bool circle = topology() == Topology::circle;
    const std::uint64_t omax = circle ? M_ : (rightward ? M_ - base : base);
    dist.assign(M_ + 1, kDistInf);
    heap.clear();
    auto push = [&](std::uint64_t o, std::uint64_t d) {
        if (d < dist[o]) {
            dist[o] = d;
            heap.emplace_back(d, o);
            std::push_heap(heap.begin(), heap.end(), std::greater<>());
        }
    };

    // The first interval of a chain contains the base point; seed the frontier
    // with every containing cell, costed up front.
    for (unsigned k = k_min_; k <= L_; ++k) {
        std::uint64_t cell = M_ >> k;
        if (rightward) {
            std::uint64_t a = (base >> (L_ - k)) << (L_ - k);
            if (!circle && a + cell > M_) continue;  // base == M_ on the arc
            std::uint64_t o = a + cell - base;       // in (0, cell]
            push(o, wtab_[k][a >> (L_ - k)]);
        } else {
            std::uint64_t a;
            if ((base & (cell - 1)) == 0) {  // on-grid: take [base-cell, base]
                if (!circle && base < cell) continue;
                a = circle ? (base + M_ - cell) % M_ : base - cell;
            } else {
                a = (base >> (L_ - k)) << (L_ - k);
            }
            std::uint64_t o = circle ? (base + M_ - a) % M_ : base - a;  // in (0, cell]
            push(o, wtab_[k][a >> (L_ - k)]);
        }
    }

    while (!heap.empty()) {
        auto [d, o] = heap.front();
        std::pop_heap(heap.begin(), heap.end(), std::greater<>());
        heap.pop_back();
        if (d != dist[o]) continue;
        if (d > radius_cap) break;
        if (o >= omax) continue;  // frontier may not pass the base again
        std::uint64_t pos;
        if (circle)
            pos = rightward ? (base + o) % M_ : (base + M_ - o) % M_;
        else
            pos = rightward ? base + o : base - o;
        unsigned ka = std::max(align_level(pos, L_), k_min_);
        for (unsigned k = L_ + 1; k-- > ka;) {
            std::uint64_t cell = M_ >> k;
            std::uint64_t o2 = o + cell;
            if (o2 > omax) continue;
            std::uint64_t idx;
            if (rightward) {
                idx = (circle ? pos % M_ : pos) >> (L_ - k);
            } else {
                std::uint64_t left = circle ? (pos + M_ - cell) % M_ : pos - cell;
                idx = left >> (L_ - k);
            }
            push(o2, d + wtab_[k][idx]);
        }
    }
}

void MetricIndex::fill_profile(std::uint64_t base, DistProfile& out,
                               std::uint64_t radius_cap) const {
    const bool circle = topology() == Topology::circle;
    std::uint64_t cap = radius_cap;
    if (circle && root_weight_ < cap) cap = root_weight_;  // root chain dominates beyond
    out.base = base;
    out.radius = cap;
    run_cover_dijkstra(base, true, cap, out.dist, out.heap);
    out.suffix_right.assign(M_ + 2, kDistInf);
    for (std::uint64_t o = M_ + 1; o-- > 0;) {
        std::uint64_t below = out.suffix_right[o + 1];
        out.suffix_right[o] = o <= M_ ? std::min(out.dist[o], below) : below;
    }
    run_cover_dijkstra(base, false, cap, out.dist, out.heap);
    out.suffix_left.assign(M_ + 2, kDistInf);
    for (std::uint64_t o = M_ + 1; o-- > 0;) {
        std::uint64_t below = out.suffix_left[o + 1];
        out.suffix_left[o] = o <= M_ ? std::min(out.dist[o], below) : below;
    }
}

std::uint64_t MetricIndex::profile_dist(const DistProfile& prof, std::uint64_t target) const {
    if (target == prof.base) return 0;
    const bool circle = topology() == Topology::circle;
    std::uint64_t best = circle ? root_weight_ : kDistInf;
    if (circle) {
        std::uint64_t need_r = (target + M_ - prof.base) % M_;
        std::uint64_t need_l = (prof.base + M_ - target) % M_;
        best = std::min(best, prof.suffix_right[need_r]);
        best = std::min(best, prof.suffix_left[need_l]);
    } else {
        if (target > prof.base) best = std::min(best, prof.suffix_right[target - prof.base]);
        if (target < prof.base) best = std::min(best, prof.suffix_left[prof.base - target]);
    }
    return best;
}

std::uint64_t MetricIndex::dist_scaled(std::uint64_t x, std::uint64_t y) const {
    if (x == y) return 0;
    DistProfile prof;
    fill_profile(x, prof);
    return profile_dist(prof, y);
}

DyadicRational MetricIndex::dist(const DyadicPoint& x, const DyadicPoint& y) const {
    DyadicPoint cx = canonicalize(x, topology()), cy = canonicalize(y, topology());
    return unscale(dist_scaled(position(cx), position(cy)));
}

DyadicRational MetricIndex::set_diameter(const std::vector<DyadicPoint>& pts) const {
    if (pts.empty()) throw std::invalid_argument("set_diameter of empty set");
    std::vector<std::uint64_t> pos;
    pos.reserve(pts.size());
    for (const auto& p : pts) pos.push_back(position(canonicalize(p, topology())));
    std::sort(pos.begin(), pos.end());
    pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
    std::uint64_t best = 0;
    DistProfile prof;
    for (std::size_t i = 0; i + 1 < pos.size(); ++i) {
        fill_profile(pos[i], prof);
        for (std::size_t j = i + 1; j < pos.size(); ++j)
            best = std::max(best, profile_dist(prof, pos[j]));
    }
    return unscale(best);
}

DyadicRational MetricIndex::interval_endpoint_distance_check(const DyadicInterval& I) const {
    if (topology() == Topology::circle && I.level == 0)
        throw std::invalid_argument("circle root endpoints coincide");
    if (kind_.truncated && I.level > kind_.n)
        throw std::invalid_argument("interval below the truncation level");
    DyadicRational d = dist(I.left(), I.right(topology()));
    if (d != rule_.delta(I))
        throw std::logic_error("interval identity violated at " + I.str() + ": dist=" + d.str() +
                               " delta=" + rule_.delta(I).str());
    return d;
}

// ---------------------------------------------------------------------------
// minimal_chain: (cost, hops)-optimal chain with deterministic lexicographic
// reconstruction. Keys pack hop counts into the low bits of the cost.
// ---------------------------------------------------------------------------

namespace {
constexpr unsigned kHopBits = 10;
constexpr std::uint64_t kHopMask = (std::uint64_t{1} << kHopBits) - 1;
}  // namespace

struct MetricIndex::PathSearch {
    std::vector<std::uint64_t> need_key;  // min (cost,hops) from offset to coverage
};

Chain MetricIndex::minimal_chain(const DyadicPoint& x, const DyadicPoint& y) const {
    const bool circle = topology() == Topology::circle;
    std::uint64_t px = position(canonicalize(x, topology()));
    std::uint64_t py = position(canonicalize(y, topology()));
    Chain chain;
    if (px == py) return chain;

    // B[o] = min composite key over continuations from offset o to coverage.
    // Computed by a reverse relaxation sweep per direction.
    auto reverse_keys = [&](bool rightward, std::uint64_t need) {
        std::vector<std::uint64_t> B(M_ + 1, kDistInf);
        std::vector<std::pair<std::uint64_t, std::uint64_t>> heap;
        const std::uint64_t omax = circle ? M_ : (rightward ? M_ - px : px);
        for (std::uint64_t o = need; o <= M_; ++o) {
            B[o] = 0;
            heap.emplace_back(0, o);
        }
        std::make_heap(heap.begin(), heap.end(), std::greater<>());
        while (!heap.empty()) {
            auto [d, o2] = heap.front();
            std::pop_heap(heap.begin(), heap.end(), std::greater<>());
            heap.pop_back();
            if (d != B[o2]) continue;
            // relax reverse edges o -> o2
            for (unsigned k = k_min_; k <= L_; ++k) {
                std::uint64_t cell = M_ >> k;
                if (o2 < cell) continue;
                std::uint64_t o = o2 - cell;
                if (o >= omax || o2 > omax) continue;
                std::uint64_t pos;
                if (circle) {
                    pos = rightward ? (px + o) % M_ : (px + M_ - o % M_) % M_;
                } else {
                    pos = rightward ? px + o : px - o;
                }
                if (align_level(pos, L_) > k) continue;
                std::uint64_t idx;
                if (rightward) {
                    idx = pos >> (L_ - k);
                } else {
                    std::uint64_t left = circle ? (pos + M_ - cell) % M_ : pos - cell;
                    idx = left >> (L_ - k);
                }
                std::uint64_t nd = d + ((wtab_[k][idx] << kHopBits) | 1);
                if (nd < B[o]) {
                    B[o] = nd;
                    heap.emplace_back(nd, o);
                    std::push_heap(heap.begin(), heap.end(), std::greater<>());
                }
            }
        }
        return B;
    };

    struct Candidate {
        std::uint64_t key = kDistInf;
        int pref = 3;  // 0 root, 1 rightward, 2 leftward
        unsigned level = 0;
        std::uint64_t o_src = 0, idx = 0;
        std::vector<std::uint64_t> B;
    };
    Candidate best;

    if (circle) {
        Candidate root;
        root.key = (root_weight_ << kHopBits) | 1;
        root.pref = 0;
        root.level = 0;
        if (root.key < best.key || (root.key == best.key && root.pref < best.pref))
            best = std::move(root);
    }

    for (int dir = 0; dir < 2; ++dir) {
        bool rightward = dir == 0;
        std::uint64_t need;
        if (circle) {
            need = rightward ? (py + M_ - px) % M_ : (px + M_ - py) % M_;
        } else {
            if (rightward != (py > px)) continue;
            need = rightward ? py - px : px - py;
        }
        auto B = reverse_keys(rightward, need);
        for (unsigned k = k_min_; k <= L_; ++k) {
            std::uint64_t cell = M_ >> k;
            std::uint64_t a, idx, o;
            if (rightward) {
                a = (px >> (L_ - k)) << (L_ - k);
                if (!circle && a + cell > M_) continue;
                o = a + cell - px;
                if (circle) o %= M_;
                if (o == 0) o = cell;
                idx = a >> (L_ - k);
            } else {
                if ((px & (cell - 1)) == 0) {
                    if (!circle && px < cell) continue;
                    a = circle ? (px + M_ - cell) % M_ : px - cell;
                } else {
                    a = (px >> (L_ - k)) << (L_ - k);
                }
                idx = a >> (L_ - k);
                o = circle ? (px + M_ - a) % M_ : px - a;
                if (o == 0) o = cell;
            }
            if (o > M_ || B[o] == kDistInf) continue;
            Candidate c;
            c.key = ((wtab_[k][idx] << kHopBits) | 1) + B[o];
            c.pref = rightward ? 1 : 2;
            c.level = k;
            c.o_src = o;
            c.idx = idx;
            if (c.key < best.key ||
                (c.key == best.key &&
                 (c.pref < best.pref ||
                  (c.pref == best.pref &&
                   std::make_pair(c.level, c.idx) < std::make_pair(best.level, best.idx))))) {
                c.B = B;
                best = std::move(c);
            }
        }
    }

    if (best.key == kDistInf) throw std::logic_error("no chain found");
    if (best.pref == 0) {
        chain.intervals.push_back(DyadicInterval(0, 0));
        return chain;
    }

    bool rightward = best.pref == 1;
    const std::uint64_t omax = circle ? M_ : (rightward ? M_ - px : px);
    chain.intervals.push_back(DyadicInterval(best.level, best.idx));
    std::uint64_t o = best.o_src;
    std::uint64_t remaining = best.B[o];
    while (remaining != 0) {
        bool advanced = false;
        for (unsigned k = k_min_; k <= L_ && !advanced; ++k) {
            std::uint64_t cell = M_ >> k;
            std::uint64_t o2 = o + cell;
            if (o2 > omax || o >= omax) continue;
            std::uint64_t pos;
            if (circle) {
                pos = rightward ? (px + o) % M_ : (px + M_ - o) % M_;
            } else {
                pos = rightward ? px + o : px - o;
            }
            if (align_level(pos, L_) > k) continue;
            std::uint64_t idx;
            if (rightward) {
                idx = pos >> (L_ - k);
            } else {
                std::uint64_t left = circle ? (pos + M_ - cell) % M_ : pos - cell;
                idx = left >> (L_ - k);
            }
            std::uint64_t step = (wtab_[k][idx] << kHopBits) | 1;
            if (step <= remaining && best.B[o2] == remaining - step) {
                chain.intervals.push_back(DyadicInterval(k, idx));
                o = o2;
                remaining -= step;
                advanced = true;
            }
        }
        if (!advanced) throw std::logic_error("chain reconstruction failed");
    }
    if (!rightward) std::reverse(chain.intervals.begin(), chain.intervals.end());
    return chain;
}

// ---------------------------------------------------------------------------
// AllPairs
// ---------------------------------------------------------------------------

AllPairs::AllPairs(const MetricIndex& idx) {
    if (idx.depth() > 14) throw std::invalid_argument("all-pairs table limited to depth 14");
    n_ = idx.vertex_count();
    table_.assign(n_ * n_, 0);
    DistProfile prof;
    for (std::uint64_t i = 0; i < n_; ++i) {
        idx.fill_profile(i, prof);
        for (std::uint64_t j = 0; j < n_; ++j)
            table_[i * n_ + j] = static_cast<std::uint32_t>(idx.profile_dist(prof, j));
    }
}

// ---------------------------------------------------------------------------
// Chain predicates
// ---------------------------------------------------------------------------

namespace {

struct ScaledInterval {
    std::uint64_t lo, len;
    std::size_t src;
};

}  // namespace

MinimalityReport is_minimal(const Chain& c, Topology t) {
    MinimalityReport rep;
    const auto& iv = c.intervals;
    if (iv.size() <= 1) return rep;
    const bool circle = t == Topology::circle;
    unsigned L = 0;
    for (const auto& I : iv) L = std::max(L, I.level);
    const std::uint64_t M = std::uint64_t{1} << L;
    std::vector<ScaledInterval> s;
    s.reserve(iv.size());
    for (std::size_t i = 0; i < iv.size(); ++i)
        s.push_back({iv[i].index << (L - iv[i].level), M >> iv[i].level, i});
    std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.lo < b.lo; });

    // Interiors must be pairwise disjoint. Unroll the circle once so wrapping
    // intervals are scanned linearly.
    std::vector<ScaledInterval> u = s;
    if (circle)
        for (const auto& e : s) u.push_back({e.lo + M, e.len, e.src});
    std::size_t prev = 0;
    for (std::size_t j = 1; j < u.size(); ++j) {
        if (u[j].lo < u[prev].lo + u[prev].len && u[j].src != u[prev].src) {
            rep.minimal = false;
            rep.violation = "intervals " + iv[u[prev].src].str() + " and " + iv[u[j].src].str() +
                            " share interior";
            return rep;
        }
        if (u[j].lo + u[j].len > u[prev].lo + u[prev].len) prev = j;
    }
    for (std::size_t i = 0; i + 1 < s.size(); ++i)
        if (s[i].lo == s[i + 1].lo) {
            rep.minimal = false;
            rep.violation = "intervals " + iv[s[i].src].str() + " and " + iv[s[i + 1].src].str() +
                            " share interior";
            return rep;
        }

    // No union of two or more members may form a dyadic interval. Candidate
    // unions are contiguous touching runs lying inside [0,1]; a run wrapping
    // past 0 is a circular arc, not a member of the dyadic family.
    for (std::size_t i = 0; i < s.size(); ++i) {
        std::uint64_t end = s[i].lo + s[i].len;
        std::uint64_t total = s[i].len;
        for (std::size_t j = i + 1; j < s.size(); ++j) {
            if (s[j].lo != end) break;
            end += s[j].len;
            total += s[j].len;
            bool pow2 = (total & (total - 1)) == 0;
            if (pow2 && end <= M && s[i].lo % total == 0) {
                rep.minimal = false;
                rep.violation = "union of " + iv[s[i].src].str() + ".." + iv[s[j].src].str() +
                                " forms a dyadic interval";
                return rep;
            }
        }
    }
    return rep;
}

bool chain_unimodality_check(const Chain& c, Topology t) {
    const auto& iv = c.intervals;
    if (iv.size() <= 1) return true;
    auto rep = is_minimal(c, t);
    if (!rep.minimal) throw std::invalid_argument("chain not minimal: " + rep.violation);
    unsigned min_level = iv[0].level;
    for (const auto& I : iv) min_level = std::min(min_level, I.level);
    std::vector<std::size_t> at_min;
    for (std::size_t i = 0; i < iv.size(); ++i)
        if (iv[i].level == min_level) at_min.push_back(i);
    if (at_min.size() > 2) return false;
    if (at_min.size() == 2 && at_min[1] != at_min[0] + 1) return false;
    std::size_t lo = at_min.front(), hi = at_min.back();
    for (std::size_t i = 0; i < lo; ++i)
        if (!(iv[i].level > iv[i + 1].level)) return false;
    for (std::size_t i = hi; i + 1 < iv.size(); ++i)
        if (!(iv[i].level < iv[i + 1].level)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// brute_force_dist: exhaustive covering-chain search, independent of the
// Dijkstra engine. Both orientations, branch-and-bound with the arclength
// lower bound (every weight dominates its interval's length).
// ---------------------------------------------------------------------------

namespace {

struct BruteContext {
    const DiameterRule* rule;
    MetricKind kind;
    unsigned B;
    std::uint64_t M;
    bool circle;
    std::uint64_t best;
    std::vector<std::uint64_t> seen;  // best cost per coverage offset, per direction

    std::uint64_t weight(unsigned k, std::uint64_t idx) const {
        DyadicInterval I(k, idx);
        unsigned e = kind.truncated ? rule->delta_truncated_exponent(kind.n, I)
                                    : rule->delta_exponent(I);
        return M >> e;
    }

    void extend(std::uint64_t base, bool rightward, std::uint64_t o, std::uint64_t need,
                std::uint64_t omax, std::uint64_t cost) {
        if (o >= need) {
            best = std::min(best, cost);
            return;
        }
        if (cost + (need - o) >= best) return;  // admissible bound
        if (cost >= seen[o]) return;            // extensions depend only on the offset
        seen[o] = cost;
        std::uint64_t pos;
        if (circle) {
            pos = rightward ? (base + o) % M : (base + M - o) % M;
        } else {
            pos = rightward ? base + o : base - o;
        }
        unsigned ka = std::max(align_level(pos, B), circle ? 1u : 0u);
        for (unsigned k = ka; k <= B; ++k) {
            std::uint64_t cell = M >> k;
            std::uint64_t o2 = o + cell;
            if (o2 > omax) continue;
            std::uint64_t idx;
            if (rightward) {
                idx = pos >> (B - k);
            } else {
                std::uint64_t left = circle ? (pos + M - cell) % M : pos - cell;
                idx = left >> (B - k);
            }
            extend(base, rightward, o2, need, omax, cost + weight(k, idx));
        }
    }
};

}  // namespace

DyadicRational brute_force_dist(const DiameterRule& rule, MetricKind kind, const DyadicPoint& x,
                                const DyadicPoint& y, unsigned level_budget) {
    if (level_budget > 8) throw std::invalid_argument("brute force level budget exceeded (max 8)");
    Topology t = rule.topology();
    DyadicPoint cx = canonicalize(x, t), cy = canonicalize(y, t);
    if (cx.level > level_budget || cy.level > level_budget)
        throw std::invalid_argument("points not representable within the level budget");
    BruteContext ctx;
    ctx.rule = &rule;
    ctx.kind = kind;
    ctx.B = level_budget;
    ctx.M = std::uint64_t{1} << level_budget;
    ctx.circle = t == Topology::circle;
    std::uint64_t px = cx.numerator << (level_budget - cx.level);
    std::uint64_t py = cy.numerator << (level_budget - cy.level);
    if (px == py) return DyadicRational::zero();
    ctx.best = ctx.circle ? ctx.weight(0, 0) : kDistInf;  // root chain on the circle

    for (int dir = 0; dir < 2; ++dir) {
        bool rightward = dir == 0;
        std::uint64_t need, omax;
        if (ctx.circle) {
            need = rightward ? (py + ctx.M - px) % ctx.M : (px + ctx.M - py) % ctx.M;
            omax = ctx.M;
        } else {
            if (rightward != (py > px)) continue;
            need = rightward ? py - px : px - py;
            omax = rightward ? ctx.M - px : px;
        }
        ctx.seen.assign(ctx.M + 1, kDistInf);
        for (unsigned k = ctx.circle ? 1u : 0u; k <= level_budget; ++k) {
            std::uint64_t cell = ctx.M >> k;
            std::uint64_t a, o;
            if (rightward) {
                a = (px >> (level_budget - k)) << (level_budget - k);
                if (!ctx.circle && a + cell > ctx.M) continue;
                o = a + cell - px;
                if (ctx.circle) o %= ctx.M;
                if (o == 0) o = cell;
            } else {
                if ((px & (cell - 1)) == 0) {
                    if (!ctx.circle && px < cell) continue;
                    a = ctx.circle ? (px + ctx.M - cell) % ctx.M : px - cell;
                } else {
                    a = (px >> (level_budget - k)) << (level_budget - k);
                }
                o = ctx.circle ? (px + ctx.M - a) % ctx.M : px - a;
                if (o == 0) o = cell;
            }
            ctx.extend(px, rightward, o, need, omax, ctx.weight(k, a >> (level_budget - k)));
        }
    }
    if (ctx.best == kDistInf) throw std::logic_error("brute force found no chain");
    return DyadicRational(BigInt(ctx.best), level_budget);
}

// ---------------------------------------------------------------------------
// Subarc diameters and the bounded turning constant
// ---------------------------------------------------------------------------

namespace {

std::uint64_t arc_samples_diameter(const AllPairs& ap, std::uint64_t from, std::uint64_t count,
                                   std::uint64_t modulus, bool circle) {
    // closed arc starting at grid point `from`, `count` grid steps long
    std::uint64_t best = 0;
    for (std::uint64_t i = 0; i <= count; ++i) {
        std::uint64_t a = circle ? (from + i) % modulus : from + i;
        for (std::uint64_t j = i + 1; j <= count; ++j) {
            std::uint64_t b = circle ? (from + j) % modulus : from + j;
            best = std::max(best, static_cast<std::uint64_t>(ap.d(a, b)));
        }
    }
    return best;
}

}  // namespace

SubarcDiameter subarc_diameter(const MetricIndex& idx, const AllPairs& ap, const DyadicPoint& x,
                               const DyadicPoint& y) {
    const bool circle = idx.topology() == Topology::circle;
    std::uint64_t px = idx.position(canonicalize(x, idx.topology()));
    std::uint64_t py = idx.position(canonicalize(y, idx.topology()));
    if (px == py) throw std::invalid_argument("subarc_diameter needs distinct points");
    const std::uint64_t M = idx.grid();
    SubarcDiameter out;
    if (!circle) {
        std::uint64_t lo = std::min(px, py), hi = std::max(px, py);
        out.diameter = idx.unscale(arc_samples_diameter(ap, lo, hi - lo, M, false));
        out.side = SubarcDiameter::Side::whole;
        return out;
    }
    std::uint64_t fwd = (py + M - px) % M;
    std::uint64_t pos_diam = arc_samples_diameter(ap, px, fwd, M, true);
    std::uint64_t neg_diam = arc_samples_diameter(ap, py, M - fwd, M, true);
    if (pos_diam < neg_diam) {
        out.diameter = idx.unscale(pos_diam);
        out.side = SubarcDiameter::Side::positive;
    } else if (neg_diam < pos_diam) {
        out.diameter = idx.unscale(neg_diam);
        out.side = SubarcDiameter::Side::negative;
    } else {
        out.diameter = idx.unscale(pos_diam);
        out.side = SubarcDiameter::Side::tie;
    }
    return out;
}

std::string TurningReport::ratio_str() const {
    // diam/dist as a reduced fraction p/q
    unsigned e = std::max(worst_subarc_diam.exponent(), worst_dist.exponent());
    BigInt p = worst_subarc_diam.scaled(e), q = worst_dist.scaled(e);
    if (q == 0) return "inf";
    BigInt g = boost::multiprecision::gcd(p, q);
    p /= g;
    q /= g;
    return q == 1 ? p.str() : p.str() + "/" + q.str();
}

TurningReport bounded_turning_constant(const MetricIndex& idx, const SamplingPlan& plan) {
    AllPairs ap(idx);
    const std::uint64_t n = idx.vertex_count();
    TurningReport rep;
    rep.worst_subarc_diam = DyadicRational::zero();
    rep.worst_dist = DyadicRational::one();
    bool have = false;
    auto consider = [&](std::uint64_t a, std::uint64_t b) {
        if (a == b) return;
        DyadicPoint pa = idx.point_at(a), pb = idx.point_at(b);
        SubarcDiameter sd = subarc_diameter(idx, ap, pa, pb);
        DyadicRational d = idx.unscale(ap.d(a, b));
        // sd/d > worst_diam/worst_dist, compared by cross multiplication
        unsigned e = std::max({sd.diameter.exponent(), d.exponent(),
                               rep.worst_subarc_diam.exponent(), rep.worst_dist.exponent()});
        BigInt lhs = sd.diameter.scaled(e) * rep.worst_dist.scaled(e);
        BigInt rhs = rep.worst_subarc_diam.scaled(e) * d.scaled(e);
        if (!have || lhs > rhs) {
            rep.worst_subarc_diam = sd.diameter;
            rep.worst_dist = d;
            rep.witness_x = pa;
            rep.witness_y = pb;
            have = true;
        }
    };
    if (plan.all_pairs) {
        for (std::uint64_t a = 0; a < n; ++a)
            for (std::uint64_t b = a + 1; b < n; ++b) consider(a, b);
    } else {
        std::mt19937_64 rng(plan.seed);
        for (std::size_t i = 0; i < plan.sample_count; ++i) {
            std::uint64_t a = rng() % n, b = rng() % n;
            consider(a, b);
        }
    }
    return rep;
}

std::string distance_matrix_csv(const MetricIndex& idx, unsigned depth) {
    if (depth > idx.depth()) throw std::invalid_argument("matrix depth exceeds index depth");
    const std::uint64_t M = idx.grid();
    const std::uint64_t step = M >> depth;
    std::uint64_t count = (std::uint64_t{1} << depth) + (idx.topology() == Topology::arc ? 1 : 0);
    std::ostringstream os;
    os << "point";
    for (std::uint64_t j = 0; j < count; ++j) os << "," << idx.point_at(j * step).str();
    os << "\n";
    DistProfile prof;
    for (std::uint64_t i = 0; i < count; ++i) {
        idx.fill_profile(i * step, prof);
        os << idx.point_at(i * step).str();
        for (std::uint64_t j = 0; j < count; ++j)
            os << "," << idx.unscale(idx.profile_dist(prof, j * step)).str();
        os << "\n";
    }
    return os.str();
}

}  // namespace snowcircle
