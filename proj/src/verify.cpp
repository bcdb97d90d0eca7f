#include "snowcircle/verify.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <numeric>
#include <thread>

namespace snowcircle {

namespace {

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

std::uint64_t circ_gap(std::uint64_t a, std::uint64_t b, std::uint64_t M, bool circle) {
    if (!circle) return a < b ? b - a : a - b;
    std::uint64_t d = (b + M - a) % M;
    return std::min(d, M - d);
}

BigInt floor_at_level(const DyadicRational& v, unsigned n) {
    if (v.exponent() <= n) return BigInt(v.mantissa() << (n - v.exponent()));
    return BigInt(v.mantissa() >> (v.exponent() - n));
}

}  // namespace

std::string Ratio::str() const {
    if (!defined) return "0";
    unsigned e = std::max(num.exponent(), den.exponent());
    BigInt p = num.scaled(e), q = den.scaled(e);
    if (q == 0) return "inf";
    BigInt g = boost::multiprecision::gcd(p, q);
    if (g != 0) {
        p /= g;
        q /= g;
    }
    return q == 1 ? p.str() : p.str() + "/" + q.str();
}

bool Ratio::less_than(const Ratio& o) const {
    if (!defined) return o.defined;
    if (!o.defined) return false;
    unsigned e = std::max({num.exponent(), den.exponent(), o.num.exponent(), o.den.exponent()});
    return num.scaled(e) * o.den.scaled(e) < o.num.scaled(e) * den.scaled(e);
}

bool Ratio::exceeds_int(std::uint64_t bound) const {
    if (!defined) return false;
    unsigned e = std::max(num.exponent(), den.exponent());
    return num.scaled(e) > den.scaled(e) * bound;
}

// ---------------------------------------------------------------------------
// Targets
// ---------------------------------------------------------------------------

ArcSet TargetSet::realized(Topology t) const {
    ArcSet s = ArcSet::of_interval(left, t);
    s.unite(ArcSet::of_interval(right, t));
    return s;
}

TargetSet TargetSet::adjacent_pair(unsigned m_star, std::uint64_t index, Topology t,
                                   const DyadicRational& delta) {
    std::uint64_t cells = std::uint64_t{1} << m_star;
    if (index >= cells) throw std::invalid_argument("adjacent pair index out of range");
    std::uint64_t next = index + 1;
    if (t == Topology::circle)
        next %= cells;
    else if (next >= cells)
        throw std::invalid_argument("adjacent pair leaves the arc");
    TargetSet target;
    target.m_star = m_star;
    target.left = DyadicInterval(m_star, index);
    target.right = DyadicInterval(m_star, next);
    target.delta = delta;
    return target;
}

// ---------------------------------------------------------------------------
// Components of point sets
// ---------------------------------------------------------------------------

ComponentFamily delta_components(const std::vector<DyadicPoint>& points,
                                 const DyadicRational& delta, const MetricIndex& idx) {
    if (delta.is_zero() || points.empty())
        throw std::invalid_argument("delta_components needs points and delta > 0");
    std::vector<std::uint64_t> pos;
    for (const auto& p : points) pos.push_back(idx.position(canonicalize(p, idx.topology())));
    std::sort(pos.begin(), pos.end());
    pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
    const std::size_t n = pos.size();
    const std::uint64_t M = idx.grid();
    const bool circle = idx.topology() == Topology::circle;

    // d <= delta  <=>  d * 2^L <= floor(delta * 2^L) since d is grid-scaled
    BigInt scaled = floor_at_level(delta, idx.depth());
    std::uint64_t radius = scaled > BigInt(4 * M) ? 4 * M : static_cast<std::uint64_t>(scaled);

    UnionFind uf(n);
    DistProfile prof;
    for (std::size_t i = 0; i < n; ++i) {
        idx.fill_profile(pos[i], prof, radius);
        for (std::size_t j = i + 1; j < n; ++j) {
            if (circ_gap(pos[i], pos[j], M, circle) > radius) continue;
            if (idx.profile_dist(prof, pos[j]) <= radius) uf.unite(i, j);
        }
    }

    std::vector<std::vector<std::size_t>> groups(n);
    for (std::size_t i = 0; i < n; ++i) groups[uf.find(i)].push_back(i);
    ComponentFamily fam;
    fam.delta = delta;
    fam.metric = idx.kind();
    std::vector<std::pair<std::uint64_t, std::vector<std::size_t>>> ordered;
    for (auto& g : groups)
        if (!g.empty()) ordered.emplace_back(pos[g.front()], std::move(g));
    std::sort(ordered.begin(), ordered.end());
    for (auto& [leftmost, g] : ordered) {
        std::vector<DyadicPoint> comp;
        for (std::size_t i : g) comp.push_back(idx.point_at(pos[i]));
        std::uint64_t best = 0;
        for (std::size_t a = 0; a + 1 < g.size(); ++a) {
            idx.fill_profile(pos[g[a]], prof);
            for (std::size_t b = a + 1; b < g.size(); ++b)
                best = std::max(best, idx.profile_dist(prof, pos[g[b]]));
        }
        fam.components.push_back(std::move(comp));
        fam.diameters.push_back(idx.unscale(best));
    }
    return fam;
}

ExactArc enlarge_target(const std::vector<DyadicPoint>& E, const DyadicRational& r, Topology t) {
    if (E.empty()) throw std::invalid_argument("enlarge_target needs a nonempty set");
    if (r > DyadicRational::parse("1/8"))
        throw std::invalid_argument("enlarge_target requires r <= 1/8");
    ArcSet s(t);
    for (const auto& p : E) s.unite(ArcSet::point(canonicalize(p, t).value(), t));
    auto h = s.hull();
    if (!(h->length < r)) throw std::invalid_argument("enlarge_target requires diam_0(E) < r");
    DyadicRational start = h->start;
    if (t == Topology::arc && start + r > DyadicRational::one())
        start = (h->start + h->length) - r;  // slide left at the arc's right end
    return ExactArc{start, r};
}

ComponentFamily preimage_components(const DiameterRule& rule, const TargetSet& target,
                                    unsigned L) {
    if (L < target.m_star + 4)
        throw std::invalid_argument("depth too shallow for the target bracketing");
    MetricIndex idx(rule, L, MetricKind::full());
    auto table = limit_map_positions(rule, L, 0);
    ArcSet H = target.realized(rule.topology());
    std::vector<DyadicPoint> pre;
    for (std::size_t i = 0; i < table.size(); ++i) {
        DyadicPoint img = idx.point_at(table[i]);
        if (H.contains(img.value())) pre.push_back(idx.point_at(i));
    }
    if (pre.empty()) {
        ComponentFamily fam;
        fam.delta = target.delta;
        fam.metric = idx.kind();
        return fam;
    }
    return delta_components(pre, target.delta, idx);
}

ProjectionCheck projection_identity_check(const DiameterRule& rule, unsigned n,
                                          const std::vector<DyadicInterval>& U, unsigned L) {
    unsigned folded = 0;
    for (unsigned k = 0; k <= L && k < rule.depth(); ++k)
        if (rule.any_keep_at_level(k)) ++folded;
    unsigned Lp = L + folded;
    if (Lp > max_depth_cap())
        throw std::invalid_argument("projection working depth exceeds the depth cap");
    const std::uint64_t Mp = std::uint64_t{1} << Lp;
    const bool circle = rule.topology() == Topology::circle;

    std::vector<std::pair<std::uint64_t, std::uint64_t>> ranges;
    for (const auto& I : U) {
        if (I.level > n) throw std::invalid_argument("U must be a union of level-<=n intervals");
        std::uint64_t lo = I.index << (Lp - I.level);
        ranges.emplace_back(lo, lo + (Mp >> I.level));
    }
    auto in_u = [&](std::uint64_t y) {
        std::uint64_t yy = circle ? y % Mp : y;
        for (const auto& [lo, hi] : ranges) {
            if (yy >= lo && yy <= hi) return true;
            if (circle && hi == Mp && yy == 0) return true;
        }
        return false;
    };

    auto t_full = limit_map_positions(rule, Lp, 0);
    auto t_next = limit_map_positions(rule, Lp, n + 1);
    auto t_cascade = cascade_map_positions(rule, Lp, 0, n);

    std::vector<std::uint64_t> lhs;  // F_{n+1}(F_0^{-1}(U)) over D_{L'}
    std::vector<std::uint64_t> rhs;  // F_{0,n}^{-1}(U) over D_{L'}
    for (std::uint64_t x = 0; x < t_full.size(); ++x) {
        if (in_u(t_full[x])) lhs.push_back(t_next[x]);
        if (in_u(t_cascade[x])) rhs.push_back(x);
    }
    std::sort(lhs.begin(), lhs.end());
    lhs.erase(std::unique(lhs.begin(), lhs.end()), lhs.end());

    ProjectionCheck out;
    out.preimage_size = lhs.size();
    out.rhs_size = rhs.size();
    if (!std::includes(rhs.begin(), rhs.end(), lhs.begin(), lhs.end())) {
        out.pass = false;
        out.detail = "F_{n+1}(F_0^{-1}(U)) escapes F_{0,n}^{-1}(U)";
        return out;
    }
    const std::uint64_t step = std::uint64_t{1} << (Lp - L);
    for (std::uint64_t y : rhs) {
        if (y % step != 0) continue;  // coarse-grid side of the sandwich
        if (!std::binary_search(lhs.begin(), lhs.end(), y)) {
            out.pass = false;
            out.detail = "a coarse-grid point of F_{0,n}^{-1}(U) is missed by the projection";
            return out;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Symmetry
// ---------------------------------------------------------------------------

SymmetryInfo symmetry_class(const ArcSet& V, unsigned k) {
    SymmetryInfo info;
    if (V.empty()) return info;
    auto h = V.hull();
    if (!h || h->length == DyadicRational::one()) return info;
    DyadicRational center = h->start + h->length.halved();
    if (V.topology() == Topology::circle) center = mod_one(center);
    auto reflected = V.reflect(center);
    if (!reflected || !(*reflected == V)) return info;
    DyadicPoint c = point_from_value(center, V.topology());
    info.center = center;
    info.center_level = c.level;
    if (c.level <= k)
        info.cls = SymmetryClass::about_base;
    else if (c.level == k + 1)
        info.cls = SymmetryClass::about_next;
    else if (c.level == k + 2)
        info.cls = SymmetryClass::about_second;
    else
        info.cls = SymmetryClass::none;
    return info;
}

// ---------------------------------------------------------------------------
// V-trace
// ---------------------------------------------------------------------------

namespace {

// Diameter of an arc set in the given metric, over segment endpoints,
// midpoints, and a thin grid sample. A caller-provided LocalMetric is reused
// when its scale fits and its region contains V.
DyadicRational arcs_diameter(const DiameterRule& rule, MetricKind kind, const ArcSet& V,
                             unsigned sample_level, const LocalMetric* reuse = nullptr) {
    if (V.empty()) return DyadicRational::zero();
    auto samples = V.sample_points(sample_level, 3);
    for (const auto& [lo, hi] : V.segments())
        if (hi != lo) samples.push_back(lo + (hi - lo).halved());
    std::sort(samples.begin(), samples.end());
    samples.erase(std::unique(samples.begin(), samples.end()), samples.end());
    if (samples.size() <= 1) return DyadicRational::zero();
    unsigned K = sample_level;
    for (const auto& v : samples) K = std::max(K, v.exponent());

    std::optional<LocalMetric> own;
    const LocalMetric* lm = reuse;
    if (!lm || lm->scale() < K) {
        own.emplace(rule, kind, K, V);
        lm = &*own;
    }
    std::vector<std::uint64_t> pos;
    for (const auto& v : samples) pos.push_back(lm->position(v));
    std::uint64_t best = 0;
    LocalMetric::Profile prof;
    for (std::size_t i = 0; i + 1 < pos.size(); ++i) {
        lm->fill_profile(pos[i], prof);
        for (std::size_t j = i + 1; j < pos.size(); ++j)
            best = std::max(best, lm->profile_dist(prof, pos[j]));
    }
    return DyadicRational(BigInt(best), lm->scale());
}

bool is_two_adjacent_cells(const ArcSet& V, unsigned min_level, unsigned* level_out) {
    auto comps = V.components();
    if (comps.size() != 1) return false;
    const auto& arc = comps.front();
    if (arc.length.is_zero() || arc.length.mantissa() != 1) return false;
    unsigned m = arc.length.exponent() + 1;  // length = 2 * 2^-m
    if (m < min_level) return false;
    if (arc.start.exponent() > m) return false;  // aligned to the 2^-m grid
    if (level_out) *level_out = m;
    return true;
}

bool any_fold_touches(const DiameterRule& rule, unsigned level, const ArcSet& V) {
    if (!rule.any_keep_at_level(level)) return false;
    BigInt cap = (BigInt(1) << level) - 1;
    for (const auto& [lo, hi] : V.segments()) {
        BigInt a = floor_at_level(lo, level), b = floor_at_level(hi, level);
        if (a > cap) a = cap;
        if (b > cap) b = cap;
        for (BigInt i = a; i <= b; ++i)
            if (rule.decision(DyadicInterval(level, static_cast<std::uint64_t>(i))) ==
                Decision::keep)
                return true;
    }
    return false;
}

}  // namespace

namespace {

// grid ranges of an arc set at scale 2^L, for fast point membership
struct GridRanges {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> ranges;  // inclusive
    std::uint64_t M;

    GridRanges(const ArcSet& V, unsigned L) : M(std::uint64_t{1} << L) {
        const bool circle = V.topology() == Topology::circle;
        for (const auto& [lo, hi] : V.segments()) {
            BigInt from = floor_at_level(lo, L);
            if (DyadicRational(BigInt(from), L) != lo) ++from;  // ceil
            BigInt to = floor_at_level(hi, L);
            if (from > to) continue;
            std::uint64_t a = static_cast<std::uint64_t>(from);
            std::uint64_t b = static_cast<std::uint64_t>(to);
            if (circle && b >= M) {
                ranges.emplace_back(a, M - 1);
                ranges.emplace_back(0, 0);  // the point 1 is the point 0
            } else {
                ranges.emplace_back(a, b);
            }
        }
    }
    bool contains(std::uint64_t p) const {
        for (const auto& [a, b] : ranges)
            if (p >= a && p <= b) return true;
        return false;
    }
};

}  // namespace

VTrace v_trace(const DiameterRule& rule, const TargetSet& target,
               const std::vector<DyadicPoint>& W, unsigned L, const DyadicRational& w_diam) {
    const Topology topo = rule.topology();
    const DyadicRational& delta = target.delta;
    VTrace trace;
    trace.target = target;
    trace.w_diam = w_diam;

    // beyond the last folding level nothing moves
    unsigned n_frozen = 0;
    for (unsigned k = 0; k < rule.depth(); ++k)
        if (rule.any_keep_at_level(k)) n_frozen = k + 1;
    trace.n_frozen = n_frozen;

    // N*: minimal n with M(n) < delta / 4
    DyadicRational quarter = delta.times_pow2(-2);
    unsigned n_star = 0;
    while (!(rule.max_level_diameter(n_star) < quarter)) ++n_star;
    trace.n_star = n_star;

    const unsigned sample_level = std::min(L, target.m_star + 8);

    // anchors X[k] = F_k(W), as grid positions scaled by 2^L
    std::vector<std::vector<std::uint64_t>> anchors(n_frozen + 2);
    for (const auto& w : W) {
        DyadicPoint c = canonicalize(w, topo);
        if (c.level > L) throw std::invalid_argument("anchor point below the grid depth");
        anchors[n_frozen + 1].push_back(c.numerator << (L - c.level));
    }
    std::sort(anchors[n_frozen + 1].begin(), anchors[n_frozen + 1].end());
    anchors[n_frozen + 1].erase(
        std::unique(anchors[n_frozen + 1].begin(), anchors[n_frozen + 1].end()),
        anchors[n_frozen + 1].end());
    for (unsigned k = n_frozen + 1; k-- > 0;) {
        FoldSpec spec(rule, k);
        anchors[k].reserve(anchors[k + 1].size());
        for (std::uint64_t p : anchors[k + 1]) anchors[k].push_back(fold_position(spec, p, L));
        std::sort(anchors[k].begin(), anchors[k].end());
        anchors[k].erase(std::unique(anchors[k].begin(), anchors[k].end()), anchors[k].end());
    }

    auto fail = [&](const std::string& why) {
        trace.pass = false;
        if (trace.failure.empty()) trace.failure = why;
    };

    auto record = [&](unsigned n, const ArcSet& V, bool folded, const LocalMetric* reuse = nullptr,
                      const DyadicRational* known_diam = nullptr) {
        VTraceStep step;
        step.n = n;
        step.set = V;
        step.diam = known_diam ? *known_diam
                               : arcs_diameter(rule, MetricKind::trunc(n), V, sample_level, reuse);
        if (n == 0) {
            step.containing = DyadicInterval(0, 0);
        } else if (auto h = V.hull(); h && h->length < DyadicRational::one()) {
            DyadicRational end = h->start + h->length;
            BigInt ia = floor_at_level(h->start, n);
            if (ia < (BigInt(1) << n) && end <= DyadicRational(BigInt(ia + 1), n))
                step.containing = DyadicInterval(n, static_cast<std::uint64_t>(ia));
        }
        step.symmetry = symmetry_class(V, n);
        step.fold_step = folded;
        trace.steps.push_back(std::move(step));
    };

    ArcSet V = target.realized(topo);
    {
        GridRanges gr(V, L);
        for (std::uint64_t p : anchors[0])
            if (!gr.contains(p)) fail("F_0(W) escapes H at the start");
    }
    record(0, V, false);
    trace.steps.back().transition = StepCase::start;

    for (unsigned s = 0; s < n_frozen && trace.pass; ++s) {
        bool folded = any_fold_touches(rule, s, V);
        bool quiet_level = !rule.any_keep_at_level(s);  // then d_{s+1} = d_s everywhere
        std::optional<LocalMetric> split_lm;
        ArcSet next(topo);
        if (!folded) {
            next = V;
        } else {
            FoldSpec spec(rule, s);
            ArcSet pre = fold_preimage_arcs(spec, V);
            auto arcs = pre.components();
            std::size_t m = arcs.size();
            UnionFind uf(m);
            if (m > 1) {
                unsigned K = std::max(sample_level, s + 3u);
                for (const auto& [lo, hi] : pre.segments())
                    K = std::max({K, lo.exponent(), hi.exponent()});
                split_lm.emplace(rule, MetricKind::trunc(s + 1), K, pre);
                const LocalMetric& lm = *split_lm;
                std::uint64_t dscaled =
                    static_cast<std::uint64_t>(floor_at_level(delta, lm.scale()));
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = i + 1; j < m; ++j) {
                        // inter-arc distance is attained at a facing endpoint pair
                        DyadicRational ei = mod_one(arcs[i].start + arcs[i].length);
                        DyadicRational ej = mod_one(arcs[j].start + arcs[j].length);
                        std::uint64_t pi = lm.position(arcs[i].start), qi = lm.position(ei);
                        std::uint64_t pj = lm.position(arcs[j].start), qj = lm.position(ej);
                        if (std::min(lm.dist_scaled(qi, pj), lm.dist_scaled(qj, pi)) <= dscaled)
                            uf.unite(i, j);
                    }
            }
            std::optional<std::size_t> chosen;
            std::vector<GridRanges> arc_ranges;
            arc_ranges.reserve(m);
            for (std::size_t i = 0; i < m; ++i)
                arc_ranges.emplace_back(ArcSet::span(arcs[i].start, arcs[i].length, topo), L);
            for (std::uint64_t p : anchors[s + 1]) {
                bool found = false;
                for (std::size_t i = 0; i < m && !found; ++i) {
                    if (arc_ranges[i].contains(p)) {
                        std::size_t root = uf.find(i);
                        if (chosen && *chosen != root)
                            fail("anchor points straddle two delta-components");
                        chosen = root;
                        found = true;
                    }
                }
                if (!found) fail("anchor point escapes the pulled-back set");
            }
            if (!chosen) {
                fail("no component contains the anchor");
                break;
            }
            for (std::size_t i = 0; i < m; ++i)
                if (uf.find(i) == *chosen)
                    next.unite(ArcSet::span(arcs[i].start, arcs[i].length, topo));
        }

        // L:Vs first clause: f_s(V_{s+1}) is contained in V_s
        if (!V.contains_set(fold_image_arcs(FoldSpec(rule, s), next)))
            fail("L:Vs violated: f_n(V_{n+1}) escapes V_n at n=" + std::to_string(s));

        DyadicRational prev_diam = trace.steps.back().diam;
        V = std::move(next);
        bool is_point = V.total_length().is_zero() && V.components().size() == 1;
        if (!folded && quiet_level)
            record(s + 1, V, folded, nullptr, &prev_diam);
        else
            record(s + 1, V, folded, split_lm ? &*split_lm : nullptr);
        DyadicRational next_diam = trace.steps.back().diam;
        StepCase tc = StepCase::other;
        if (!folded) {
            tc = StepCase::identity;
        } else if (is_point && next_diam.is_zero()) {
            tc = StepCase::collapsed_point;
        } else if (next_diam == prev_diam) {
            tc = StepCase::equal;
        } else if (next_diam == prev_diam.doubled()) {
            unsigned cl = trace.steps.back().symmetry.center_level;
            bool symmetric_deep = trace.steps.back().symmetry.cls != SymmetryClass::none &&
                                  cl >= s + 2 && cl <= s + 3;
            tc = symmetric_deep ? StepCase::doubled_symmetric : StepCase::other;
        }
        trace.steps.back().transition = tc;
        GridRanges gr(V, L);
        for (std::uint64_t p : anchors[s + 1])
            if (!gr.contains(p)) fail("anchor escapes V at n=" + std::to_string(s + 1));
    }

    trace.frozen_diam =
        arcs_diameter(rule, MetricKind::full(), trace.steps.back().set, sample_level);

    // ----- lemma evaluations over the recorded steps -----
    const DyadicRational diam0 = trace.steps.front().diam;
    auto& lemmas = trace.lemmas;

    {  // L:cases trichotomy wherever its five hypotheses hold
        LemmaOutcome lc{"L:cases", 0, false, true, ""};
        for (std::size_t s = 0; s + 1 < trace.steps.size(); ++s) {
            auto& st = trace.steps[s];
            unsigned m_lvl = 0;
            bool hyp = st.diam == diam0 && is_two_adjacent_cells(st.set, target.m_star, &m_lvl) &&
                       st.symmetry.cls != SymmetryClass::about_base && st.containing &&
                       !(st.diam.times(4) > rule.delta(*st.containing));
            st.cases_hypotheses = hyp;
            if (!hyp) continue;
            lc.applicable = true;
            ++lc.instances;
            const auto& nxt = trace.steps[s + 1];
            bool ok = nxt.transition == StepCase::identity || nxt.transition == StepCase::equal ||
                      nxt.transition == StepCase::doubled_symmetric ||
                      nxt.transition == StepCase::collapsed_point;
            if (nxt.transition == StepCase::collapsed_point) {
                auto comps = nxt.set.components();
                DyadicPoint p = point_from_value(comps.front().start, topo);
                if (p.level != nxt.n + 2) ok = false;  // point of D_{n+3} \ D_{n+2}
            }
            if (nxt.diam > st.diam.doubled()) ok = false;
            if (!ok) {
                lc.pass = false;
                lc.detail = "unexpected transition at n=" + std::to_string(st.n);
            }
        }
        lemmas.push_back(lc);
    }

    lemmas.push_back(LemmaOutcome{"L:Vs", static_cast<unsigned>(trace.steps.size() - 1), true,
                                  trace.pass, trace.failure});

    {  // L:goal
        LemmaOutcome lg{"L:goal", 0, false, true, ""};
        auto check_goal = [&](const DyadicRational& diam_n, unsigned n) {
            lg.applicable = true;
            ++lg.instances;
            DyadicRational bound = diam_n + delta;
            if (w_diam > bound) {
                lg.pass = false;
                lg.detail = "diam_Delta(W) exceeds diam_n(V_n)+delta at n=" + std::to_string(n);
            } else {
                DyadicRational slack = bound - w_diam;
                if (!lg.margin || slack < *lg.margin) lg.margin = slack;
            }
        };
        for (const auto& st : trace.steps)
            if (st.n >= n_star) check_goal(st.diam, st.n);
        check_goal(trace.frozen_diam, std::max(n_star, n_frozen));  // stabilized tail
        lemmas.push_back(lg);
    }

    {  // L:big
        LemmaOutcome lb{"L:big", 0, false, true, ""};
        auto check_big = [&](const DyadicRational& cap, const DyadicRational& diam_k, unsigned n) {
            ++lb.instances;
            if (diam_k > cap) {
                lb.pass = false;
                lb.detail = "growth past 4x at n=" + std::to_string(n);
            } else {
                DyadicRational slack = cap - diam_k;
                if (!lb.margin || slack < *lb.margin) lb.margin = slack;
            }
        };
        for (std::size_t s = 0; s < trace.steps.size(); ++s) {
            const auto& st = trace.steps[s];
            if (!st.containing) continue;
            if (st.diam.times(4) < rule.delta(*st.containing)) continue;
            lb.applicable = true;
            DyadicRational cap = st.diam.times(4);
            for (std::size_t k = s; k < trace.steps.size(); ++k)
                check_big(cap, trace.steps[k].diam, trace.steps[k].n);
            check_big(cap, trace.frozen_diam, n_frozen);
        }
        lemmas.push_back(lb);
    }

    {  // L:none
        LemmaOutcome ln{"L:none", 0, false, true, ""};
        std::size_t K = 0;
        while (K < trace.steps.size() && trace.steps[K].symmetry.cls == SymmetryClass::none) ++K;
        if (K > 0) {
            ln.applicable = true;
            bool escape = !(trace.frozen_diam > delta.times(16));
            for (const auto& st : trace.steps)
                if (st.n >= n_star && !(st.diam > delta.times(16))) escape = true;
            if (escape) {
                ln.instances = static_cast<unsigned>(K);
                ln.detail = "escaped via diam_n(V_n) <= 16 delta";
            } else {
                for (std::size_t k = 0; k < K; ++k) {
                    ++ln.instances;
                    const auto& st = trace.steps[k];
                    unsigned m_lvl = 0;
                    bool ok = st.diam == diam0 &&
                              is_two_adjacent_cells(st.set, target.m_star, &m_lvl) &&
                              st.containing && !(st.diam.times(4) > rule.delta(*st.containing));
                    if (!ok) {
                        ln.pass = false;
                        ln.detail = "conclusion (k.1)-(k.4) fails at k=" + std::to_string(st.n);
                    }
                }
            }
        }
        lemmas.push_back(ln);
    }

    auto propagation = [&](const char* name, SymmetryClass start_cls, unsigned start_level_off,
                           auto blocked, auto conclusion_symm) {
        LemmaOutcome lo{name, 0, false, true, ""};
        std::size_t n0 = trace.steps.size();
        for (std::size_t s = 0; s < trace.steps.size(); ++s) {
            const auto& st = trace.steps[s];
            bool size_ok =
                st.diam.is_zero() || (!(st.diam < diam0) && !(st.diam > diam0.doubled()));
            if (size_ok && st.symmetry.cls == start_cls &&
                st.symmetry.center_level == st.n + start_level_off && st.containing &&
                !(st.diam.times(4) > rule.delta(*st.containing))) {
                n0 = s;
                break;
            }
        }
        if (n0 < trace.steps.size()) {
            lo.applicable = true;
            DyadicRational dn = trace.steps[n0].diam;
            for (std::size_t k = n0; k < trace.steps.size(); ++k) {
                const auto& st = trace.steps[k];
                if (k > n0 && blocked(st)) break;
                ++lo.instances;
                bool ok = st.diam == dn && conclusion_symm(st) && st.containing &&
                          !(st.diam.times(4) > rule.delta(*st.containing));
                if (!ok) {
                    lo.pass = false;
                    lo.detail = std::string("conclusion fails at k=") + std::to_string(st.n);
                    break;
                }
            }
        }
        lemmas.push_back(lo);
    };

    // L:symm_next: seeded by symmetry about D_{n+2} \ D_{n+1}; runs until some
    // V_k turns symmetric about D_{k+1} \ D_k.
    propagation(
        "L:symm_next", SymmetryClass::about_second, 2,
        [](const VTraceStep& st) { return st.symmetry.cls == SymmetryClass::about_next; },
        [](const VTraceStep& st) {
            return st.symmetry.cls == SymmetryClass::about_second &&
                   st.symmetry.center_level == st.n + 2;
        });

    // L:not_middle: seeded by symmetry about D_{n+1} \ D_n; runs until some
    // V_k turns symmetric about D_k; centers stay within D_{k+1}.
    propagation(
        "L:not_middle", SymmetryClass::about_next, 1,
        [](const VTraceStep& st) { return st.symmetry.cls == SymmetryClass::about_base; },
        [](const VTraceStep& st) {
            return st.symmetry.cls != SymmetryClass::none && st.symmetry.center_level <= st.n + 1;
        });

    {  // L:final
        LemmaOutcome lf{"L:final", 1, true, true, ""};
        DyadicRational bound = delta.times(128);
        std::optional<DyadicRational> best = trace.frozen_diam;
        for (const auto& st : trace.steps)
            if (st.n >= n_star && st.diam < *best) best = st.diam;
        if (*best > bound) {
            lf.pass = false;
            lf.detail = "no step at or beyond N* reaches diam <= 128 delta";
        } else {
            lf.margin = bound - *best;
        }
        lemmas.push_back(lf);
    }

    // R(n) diagnostics at the first D_n-symmetric split across two cells
    for (std::size_t s = 1; s < trace.steps.size(); ++s) {
        auto& st = trace.steps[s];
        if (st.symmetry.cls == SymmetryClass::about_base && !st.containing &&
            trace.steps[s - 1].containing && !st.diam.is_zero()) {
            DyadicInterval left_child = children(*trace.steps[s - 1].containing).first;
            ArcSet vprime = st.set.clip_to_interval(left_child);
            if (!vprime.empty()) {
                DyadicRational num =
                    arcs_diameter(rule, MetricKind::trunc(st.n), vprime, sample_level);
                st.ratio_diag = std::make_pair(num, rule.delta(left_child));
            }
            break;
        }
    }

    for (const auto& lo : trace.lemmas)
        if (!lo.pass) fail(lo.name + ": " + lo.detail);
    return trace;
}

// ---------------------------------------------------------------------------
// The sweep
// ---------------------------------------------------------------------------

namespace {

struct SweepContext {
    const DiameterRule* rule;
    const MetricIndex* idx;
    const AllPairs* ap;
    const std::vector<std::uint64_t>* table;  // F_0 positions
    std::uint64_t M;
    bool circle;
};

std::vector<std::vector<std::uint64_t>> grid_components(
    const SweepContext& ctx, const std::vector<std::pair<std::uint64_t, std::uint64_t>>& ranges,
    std::uint64_t delta_scaled) {
    std::vector<std::uint64_t> pts;
    for (std::uint64_t x = 0; x < ctx.table->size(); ++x) {
        std::uint64_t img = (*ctx.table)[x];
        for (const auto& [lo, hi] : ranges) {
            bool in = lo <= hi ? (img >= lo && img <= hi) : (img >= lo || img <= hi);
            if (in) {
                pts.push_back(x);
                break;
            }
        }
    }
    UnionFind uf(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            if (circ_gap(pts[i], pts[j], ctx.M, ctx.circle) > delta_scaled) continue;
            if (ctx.ap->d(pts[i], pts[j]) <= delta_scaled) uf.unite(i, j);
        }
    std::vector<std::vector<std::uint64_t>> comps(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) comps[uf.find(i)].push_back(pts[i]);
    std::vector<std::vector<std::uint64_t>> out;
    for (auto& c : comps)
        if (!c.empty()) out.push_back(std::move(c));
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return out;
}

std::uint64_t comp_diameter(const SweepContext& ctx, const std::vector<std::uint64_t>& comp) {
    std::uint64_t best = 0;
    for (std::size_t a = 0; a + 1 < comp.size(); ++a)
        for (std::size_t b = a + 1; b < comp.size(); ++b)
            best = std::max(best, static_cast<std::uint64_t>(ctx.ap->d(comp[a], comp[b])));
    return best;
}

}  // namespace

VerificationOutcome verify_lipschitz_light(const DiameterRule& rule, const VerifyOptions& opt) {
    if (opt.depth > 13) throw std::invalid_argument("verification sweep limited to depth 13");
    if (opt.mstar_lo < 3 || opt.mstar_hi + 4 > opt.depth || opt.mstar_lo > opt.mstar_hi)
        throw std::invalid_argument("M* range must sit within [3, depth-4]");
    const Topology topo = rule.topology();
    VerificationOutcome out;
    out.depth = opt.depth;

    MetricIndex idx(rule, opt.depth, MetricKind::full());
    AllPairs ap(idx);
    auto table = limit_map_positions(rule, opt.depth, 0);
    SweepContext ctx{&rule, &idx, &ap, &table, std::uint64_t{1} << opt.depth,
                     topo == Topology::circle};

    struct Job {
        unsigned m;
        std::uint64_t i;
    };
    std::vector<Job> jobs;
    for (unsigned m = opt.mstar_lo; m <= opt.mstar_hi; ++m) {
        std::uint64_t cells = std::uint64_t{1} << m;
        std::uint64_t pairs = ctx.circle ? cells : cells - 1;
        for (std::uint64_t i = 0; i < pairs; ++i) jobs.push_back({m, i});
    }
    std::vector<TargetRecord> records(jobs.size());

    auto run_job = [&](std::size_t j) {
        const auto [m, i] = jobs[j];
        DyadicRational delta = DyadicRational::pow2(m - 1);  // diam_0(H)
        std::uint64_t delta_scaled = ctx.M >> (m - 1);
        TargetSet target = TargetSet::adjacent_pair(m, i, topo, delta);
        std::uint64_t lo = i * (ctx.M >> m);
        std::uint64_t hi = lo + 2 * (ctx.M >> m);
        std::vector<std::pair<std::uint64_t, std::uint64_t>> ranges;
        if (!ctx.circle || hi < ctx.M)
            ranges.emplace_back(lo, hi);
        else
            ranges.emplace_back(lo, hi % ctx.M);  // wrapped: reaches round past 0
        auto comps = grid_components(ctx, ranges, delta_scaled);

        TargetRecord rec;
        rec.target = target;
        rec.max_diam = DyadicRational::zero();
        for (auto& comp : comps) {
            ComponentRecord cr;
            cr.size = comp.size();
            cr.leftmost = idx.point_at(comp.front());
            cr.diam = idx.unscale(comp_diameter(ctx, comp));
            if (cr.diam > rec.max_diam) rec.max_diam = cr.diam;
            cr.points = std::move(comp);
            rec.components.push_back(std::move(cr));
        }
        records[j] = std::move(rec);
    };

    unsigned jobs_n = std::max(1u, opt.jobs);
    if (jobs_n <= 1) {
        for (std::size_t j = 0; j < jobs.size(); ++j) run_job(j);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < jobs_n; ++t)
            pool.emplace_back([&] {
                for (std::size_t j = next.fetch_add(1); j < jobs.size(); j = next.fetch_add(1))
                    run_job(j);
            });
        for (auto& th : pool) th.join();
    }

    // Shared traces: all sweep components in one delta-component of
    // F_0^{-1}(H') induce the same V-trace, so each is computed once. H' is
    // the enclosing adjacent pair two levels up (the bracketing level of
    // E := H), and W is the H'-component, exactly the paper's framing.
    struct SharedTrace {
        bool computed = false;
        bool pass = true;
        std::string failure;
        std::vector<LemmaOutcome> lemmas;
        unsigned steps = 0;
    };
    struct TraceGroup {
        std::vector<std::uint64_t> pts;
        std::vector<std::uint32_t> comp_of;
        std::vector<std::vector<std::uint64_t>> comps;
        std::vector<SharedTrace> traces;
    };
    std::map<std::pair<unsigned, std::uint64_t>, TraceGroup> groups;

    auto trace_for = [&](unsigned m, std::uint64_t i, const ComponentRecord& cr,
                         std::string& fail_out) -> const SharedTrace* {
        DyadicRational delta = DyadicRational::pow2(m - 1);
        std::uint64_t delta_scaled = ctx.M >> (m - 1);
        std::uint64_t j = (i >> 2) % (std::uint64_t{1} << (m - 2));
        auto key = std::make_pair(m, j);
        auto it = groups.find(key);
        if (it == groups.end()) {
            TraceGroup g;
            std::uint64_t cell4 = ctx.M >> (m - 2);
            std::uint64_t lo = j * cell4;
            std::uint64_t hi = lo + 2 * cell4;
            std::vector<std::pair<std::uint64_t, std::uint64_t>> ranges;
            if (!ctx.circle || hi < ctx.M)
                ranges.emplace_back(lo, hi);
            else
                ranges.emplace_back(lo, hi % ctx.M);
            g.comps = grid_components(ctx, ranges, delta_scaled);
            for (std::uint32_t c = 0; c < g.comps.size(); ++c)
                for (std::uint64_t p : g.comps[c]) g.pts.push_back(p);
            std::sort(g.pts.begin(), g.pts.end());
            g.comp_of.assign(g.pts.size(), 0);
            for (std::uint32_t c = 0; c < g.comps.size(); ++c)
                for (std::uint64_t p : g.comps[c]) {
                    auto pit = std::lower_bound(g.pts.begin(), g.pts.end(), p);
                    g.comp_of[pit - g.pts.begin()] = c;
                }
            g.traces.resize(g.comps.size());
            it = groups.emplace(key, std::move(g)).first;
        }
        TraceGroup& g = it->second;
        // the sweep component must sit inside one H'-component
        std::optional<std::uint32_t> cid;
        for (std::uint64_t p : cr.points) {
            auto pit = std::lower_bound(g.pts.begin(), g.pts.end(), p);
            if (pit == g.pts.end() || *pit != p) {
                fail_out = "sweep component escapes the enclosing target";
                return nullptr;
            }
            std::uint32_t c = g.comp_of[pit - g.pts.begin()];
            if (cid && *cid != c) {
                fail_out = "sweep component straddles two enclosing components";
                return nullptr;
            }
            cid = c;
        }
        if (!cid) {
            fail_out = "empty sweep component";
            return nullptr;
        }
        SharedTrace& st = g.traces[*cid];
        if (!st.computed) {
            st.computed = true;
            TargetSet trace_target = TargetSet::adjacent_pair(m - 2, j, topo, delta);
            std::vector<DyadicPoint> W;
            W.reserve(g.comps[*cid].size());
            for (std::uint64_t p : g.comps[*cid]) W.push_back(idx.point_at(p));
            DyadicRational w_diam = idx.unscale(comp_diameter(ctx, g.comps[*cid]));
            VTrace tr = v_trace(rule, trace_target, W, opt.depth, w_diam);
            st.pass = tr.pass;
            st.failure = tr.failure;
            st.lemmas = tr.lemmas;
            st.steps = static_cast<unsigned>(tr.steps.size());
        }
        return &st;
    };

    // deterministic reduce in job order
    for (std::size_t j = 0; j < records.size(); ++j) {
        auto& rec = records[j];
        DyadicRational delta = rec.target.delta;
        unsigned m = rec.target.m_star;
        std::uint64_t pair_index = rec.target.left.index;
        for (auto& cr : rec.components) {
            Ratio r;
            r.num = cr.diam;
            r.den = delta;
            r.defined = true;
            if (out.global_ratio.less_than(r)) {
                out.global_ratio = r;
                out.witness_target = rec.target;
            }
            if (cr.diam > delta.times(kComponentBound)) {
                out.bound_pass = false;
                out.failures.push_back("component bound exceeded at M*=" +
                                       std::to_string(rec.target.m_star) +
                                       " H=" + rec.target.left.str() + "+" +
                                       rec.target.right.str());
            }
            if (opt.run_traces && m >= 5) {
                std::string why;
                const SharedTrace* st = trace_for(m, pair_index, cr, why);
                cr.trace_run = true;
                if (!st) {
                    cr.trace_pass = false;
                    cr.trace_fail_reason = why;
                } else {
                    cr.trace_pass = st->pass;
                    cr.trace_lemmas = st->lemmas;
                    cr.trace_steps = st->steps;
                    cr.trace_fail_reason = st->failure;
                }
                if (!cr.trace_pass) {
                    out.traces_pass = false;
                    out.failures.push_back("trace failure at M*=" +
                                           std::to_string(rec.target.m_star) +
                                           " H=" + rec.target.left.str() + ": " +
                                           cr.trace_fail_reason);
                }
            }
        }
        out.targets.push_back(std::move(rec));
    }

    // measured Lipschitz constant of F_0 over pairs of D_8 (d_0 vs d_Delta)
    {
        unsigned d8 = std::min(8u, opt.depth);
        std::uint64_t step = ctx.M >> d8;
        std::uint64_t count = (std::uint64_t{1} << d8) + (ctx.circle ? 0 : 1);
        Ratio best;
        for (std::uint64_t a = 0; a < count; ++a)
            for (std::uint64_t b = a + 1; b < count; ++b) {
                std::uint64_t xa = a * step, xb = b * step;
                std::uint64_t img_gap = circ_gap(table[xa], table[xb], ctx.M, ctx.circle);
                std::uint64_t den = ap.d(xa, xb);
                if (den == 0) continue;
                Ratio r;
                r.num = idx.unscale(img_gap);
                r.den = idx.unscale(den);
                r.defined = true;
                if (best.less_than(r)) best = r;
            }
        out.lipschitz_f0 = best;
    }

    // composite sweep: g ∘ F_0 into the line, measured only
    if (opt.composite) {
        for (unsigned m = opt.mstar_lo; m <= opt.mstar_hi; ++m) {
            DyadicRational delta = DyadicRational::pow2(m - 1);
            std::uint64_t delta_scaled = ctx.M >> (m - 1);
            std::uint64_t half = ctx.circle ? ctx.M / 2 : ctx.M;
            std::uint64_t cell = ctx.M >> m;
            if (2 * cell > half) continue;
            for (std::uint64_t lo = 0; lo + 2 * cell <= half; lo += cell) {
                std::uint64_t hi = lo + 2 * cell;
                std::vector<std::pair<std::uint64_t, std::uint64_t>> ranges;
                ranges.emplace_back(lo, hi);
                if (ctx.circle) ranges.emplace_back(ctx.M - hi, ctx.M - lo);  // mirror under g
                auto comps = grid_components(ctx, ranges, delta_scaled);
                TargetRecord rec;
                rec.target = TargetSet::adjacent_pair(m, lo / cell, Topology::arc, delta);
                rec.max_diam = DyadicRational::zero();
                for (auto& comp : comps) {
                    ComponentRecord cr;
                    cr.size = comp.size();
                    cr.leftmost = idx.point_at(comp.front());
                    cr.diam = idx.unscale(comp_diameter(ctx, comp));
                    if (cr.diam > rec.max_diam) rec.max_diam = cr.diam;
                    Ratio r;
                    r.num = cr.diam;
                    r.den = delta;
                    r.defined = true;
                    if (out.composite_ratio.less_than(r)) out.composite_ratio = r;
                    rec.components.push_back(std::move(cr));
                }
                out.composite_targets.push_back(std::move(rec));
            }
        }
    }

    return out;
}

}  // namespace snowcircle
