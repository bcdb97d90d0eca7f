#include "snowcircle/fold.hpp"

#include <algorithm>
#include <mutex>

namespace snowcircle {

namespace {

// Six-bullet form of the folding map on [a, a+h], used only to cross-check
// the tent form at startup. t is the offset x - a.
DyadicRational six_piece_offset(const DyadicRational& h, const DyadicRational& t) {
    DyadicRational h2 = h.halved();          // h/2
    DyadicRational h4 = h.times_pow2(-2);    // h/4
    DyadicRational h8 = h.times_pow2(-3);    // h/8
    DyadicRational t2 = t.doubled();
    if (t <= h4) return t2;                                     // I00 -> I0, preserving
    if (t <= h4 + h8) return h2 + (t - h4).doubled();           // I010 -> I10, preserving
    if (t <= h2) return h2 + h4 - (t - h4 - h8).doubled();      // I011 -> I10, reversing
    if (t <= h2 + h8) return h2 - (t - h2).doubled();           // I100 -> I01, reversing
    if (t <= h2 + h4) return h4 + (t - h2 - h8).doubled();      // I101 -> I01, preserving
    return h2 + (t - h2 - h4).doubled();                        // I11 -> I1, preserving
}

std::once_flag self_test_flag;

PiecewiseAffine make_tent(const DyadicInterval& I) {
    DyadicRational a(BigInt(I.index), I.level);
    DyadicRational h = DyadicRational::pow2(I.level);
    DyadicRational h4 = h.times_pow2(-2), h8 = h.times_pow2(-3);
    PiecewiseAffine pw;
    // slopes +2, -2, +2 with breakpoints at 3h/8 and 5h/8
    pw.pieces.push_back({a, a + h4 + h8, a, true});
    pw.pieces.push_back({a + h4 + h8, a + h.halved() + h8, a + h.halved() + h4, false});
    pw.pieces.push_back({a + h.halved() + h8, a + h, a + h4, true});
    return pw;
}

void run_fold_self_test() {
    // tent form vs the six-bullet definition, root interval on D_6 and a
    // level-2 interval on its own grid
    for (auto [I, K] : {std::pair{DyadicInterval(0, 0), 6u}, std::pair{DyadicInterval(2, 1), 8u}}) {
        PiecewiseAffine pw = make_tent(I);
        DyadicRational a(BigInt(I.index), I.level);
        DyadicRational h = DyadicRational::pow2(I.level);
        BigInt from = a.scaled(K), to = (a + h).scaled(K);
        for (BigInt g = from; g <= to; ++g) {
            DyadicRational x(g, K);
            DyadicRational expected = a + six_piece_offset(h, x - a);
            DyadicRational got;
            bool found = false;
            for (const auto& piece : pw.pieces) {
                if (piece.lo <= x && x <= piece.hi) {
                    got = piece.eval(x);
                    found = true;
                    break;
                }
            }
            if (!found || got != expected)
                throw std::logic_error("folding map self-test failed at x=" + x.str());
        }
    }
}

}  // namespace

bool FoldSpec::is_identity_everywhere() const { return !rule->any_keep_at_level(n); }

DyadicRational AffinePiece::eval(const DyadicRational& x) const {
    if (x < lo || x > hi) throw std::invalid_argument("point outside affine piece");
    DyadicRational step = (x - lo).doubled();
    return rising ? y_at_lo + step : y_at_lo - step;
}

DyadicRational AffinePiece::range_lo() const {
    return rising ? y_at_lo : y_at_lo - (hi - lo).doubled();
}

DyadicRational AffinePiece::range_hi() const {
    return rising ? y_at_lo + (hi - lo).doubled() : y_at_lo;
}

PiecewiseAffine PiecewiseAffine::folding_map(const DyadicInterval& I) {
    std::call_once(self_test_flag, run_fold_self_test);
    return make_tent(I);
}

DyadicPoint fold_eval(const FoldSpec& spec, const DyadicPoint& x) {
    Topology t = spec.rule->topology();
    DyadicPoint xc = canonicalize(x, t);
    if (xc.level <= spec.n) return xc;  // grid points of D_n are fixed
    DyadicInterval I = containing_interval(xc, spec.n, t);
    if (spec.mode(I) == FoldMode::identity) return xc;
    PiecewiseAffine pw = PiecewiseAffine::folding_map(I);
    DyadicRational v = xc.value();
    for (const auto& piece : pw.pieces)
        if (piece.lo <= v && v <= piece.hi) return point_from_value(piece.eval(v), t);
    throw std::logic_error("fold_eval: point escaped its interval");
}

std::vector<DyadicPoint> fold_preimages(const FoldSpec& spec, const DyadicPoint& y) {
    Topology t = spec.rule->topology();
    DyadicPoint yc = canonicalize(y, t);
    DyadicRational yv = yc.value();
    std::vector<DyadicRational> values;
    for (const DyadicInterval& I : containing_intervals_both(yc, spec.n, t)) {
        if (spec.mode(I) == FoldMode::identity) {
            values.push_back(yv);
            continue;
        }
        // the target value within I in the interval's own coordinates; a point
        // at 0 hit through the wrapping interval reads as 1
        DyadicRational target = yv;
        DyadicRational a(BigInt(I.index), I.level);
        if (t == Topology::circle && yv < a) target = yv + DyadicRational::one();
        PiecewiseAffine pw = PiecewiseAffine::folding_map(I);
        for (const auto& piece : pw.pieces) {
            if (target < piece.range_lo() || target > piece.range_hi()) continue;
            DyadicRational x;
            if (piece.rising)
                x = piece.lo + (target - piece.y_at_lo).halved();
            else
                x = piece.lo + (piece.y_at_lo - target).halved();
            values.push_back(mod_one(x));
        }
    }
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    std::vector<DyadicPoint> out;
    for (const auto& v : values) out.push_back(point_from_value(v, t));
    return out;
}

DyadicPoint cascade_eval(const DiameterRule& rule, unsigned m, unsigned n, const DyadicPoint& x) {
    if (m > n) throw std::invalid_argument("cascade_eval requires m <= n");
    DyadicPoint p = canonicalize(x, rule.topology());
    for (unsigned k = n + 1; k-- > m;) p = fold_eval(FoldSpec(rule, k), p);
    return p;
}

DyadicPoint limit_eval(const DiameterRule& rule, unsigned m, const DyadicPoint& x) {
    DyadicPoint p = canonicalize(x, rule.topology());
    if (p.level <= m) return p;
    unsigned top = std::min(p.level - 1, rule.depth() == 0 ? 0 : rule.depth() - 1);
    if (top < m) return p;  // every remaining level acts as the identity
    return cascade_eval(rule, m, top, p);
}

IntervalImage interval_image(const FoldSpec& spec, const DyadicInterval& I) {
    if (I.level != spec.n + 1) throw std::invalid_argument("interval_image expects level n+1");
    IntervalImage out;
    out.primary = I;
    DyadicInterval J = parent(I);
    if (spec.mode(J) == FoldMode::identity) return out;
    out.folded = true;
    bool left_child = I.index % 2 == 0;
    // f(J^0) = J^0 ∪ J^10 and f(J^1) = J^01 ∪ J^1
    std::uint64_t base = 4 * J.index;
    out.spill = DyadicInterval(spec.n + 2, left_child ? base + 2 : base + 1);
    return out;
}

ArcSet IntervalImage::as_arcs(Topology t) const {
    ArcSet s = ArcSet::of_interval(primary, t);
    if (spill) s.unite(ArcSet::of_interval(*spill, t));
    return s;
}

DyadicRational real_coordinate(const DyadicPoint& x, Topology t) {
    if (t == Topology::arc) return canonicalize(x, t).value();
    return arclength(canonicalize(x, t), DyadicPoint(0, 0), t);
}

namespace {

// Level-n interval indexes whose closed interval meets [lo, hi].
std::pair<std::uint64_t, std::uint64_t> covered_range(const DyadicRational& lo,
                                                      const DyadicRational& hi, unsigned n) {
    auto floor_at = [n](const DyadicRational& v) -> BigInt {
        if (v.exponent() <= n) return BigInt(v.mantissa() << (n - v.exponent()));
        return BigInt(v.mantissa() >> (v.exponent() - n));
    };
    BigInt a = floor_at(lo), b = floor_at(hi);
    BigInt cap = (BigInt(1) << n) - 1;
    std::uint64_t ia = static_cast<std::uint64_t>(a > cap ? cap : a);
    std::uint64_t ib = static_cast<std::uint64_t>(b > cap ? cap : b);
    return {ia, ib};
}

}  // namespace

ArcSet fold_image_arcs(const FoldSpec& spec, const ArcSet& s) {
    Topology t = spec.rule->topology();
    ArcSet out(t);
    for (const auto& [lo, hi] : s.segments()) {
        auto [ia, ib] = covered_range(lo, hi, spec.n);
        for (std::uint64_t i = ia; i <= ib; ++i) {
            DyadicInterval I(spec.n, i);
            ArcSet piece = s.clip_to_interval(I);
            if (piece.empty()) continue;
            if (spec.mode(I) == FoldMode::identity) {
                out.unite(piece);
                continue;
            }
            PiecewiseAffine pw = PiecewiseAffine::folding_map(I);
            for (const auto& [plo, phi] : piece.segments())
                for (const auto& ap : pw.pieces) {
                    DyadicRational u = plo < ap.lo ? ap.lo : plo;
                    DyadicRational v = phi > ap.hi ? ap.hi : phi;
                    if (v < u) continue;
                    DyadicRational ylo = ap.rising ? ap.eval(u) : ap.eval(v);
                    DyadicRational yhi = ap.rising ? ap.eval(v) : ap.eval(u);
                    out.unite(ArcSet::span(ylo, yhi - ylo, t));
                }
        }
    }
    return out;
}

ArcSet fold_preimage_arcs(const FoldSpec& spec, const ArcSet& s) {
    Topology t = spec.rule->topology();
    ArcSet out(t);
    for (const auto& [lo, hi] : s.segments()) {
        auto [ia, ib] = covered_range(lo, hi, spec.n);
        for (std::uint64_t i = ia; i <= ib; ++i) {
            DyadicInterval I(spec.n, i);
            ArcSet piece = s.clip_to_interval(I);
            if (piece.empty()) continue;
            if (spec.mode(I) == FoldMode::identity) {
                out.unite(piece);
                continue;
            }
            PiecewiseAffine pw = PiecewiseAffine::folding_map(I);
            for (const auto& [plo, phi] : piece.segments())
                for (const auto& ap : pw.pieces) {
                    DyadicRational ru = plo < ap.range_lo() ? ap.range_lo() : plo;
                    DyadicRational rv = phi > ap.range_hi() ? ap.range_hi() : phi;
                    if (rv < ru) continue;
                    DyadicRational xa, xb;
                    if (ap.rising) {
                        xa = ap.lo + (ru - ap.y_at_lo).halved();
                        xb = ap.lo + (rv - ap.y_at_lo).halved();
                    } else {
                        xa = ap.lo + (ap.y_at_lo - rv).halved();
                        xb = ap.lo + (ap.y_at_lo - ru).halved();
                    }
                    out.unite(ArcSet::span(xa, xb - xa, t));
                }
        }
    }
    return out;
}

std::uint64_t fold_position(const FoldSpec& spec, std::uint64_t pos, unsigned L) {
    if (spec.n >= L) return pos;
    const std::uint64_t h = std::uint64_t{1} << (L - spec.n);
    if (pos % h == 0) return pos;  // endpoints of level-n cells are fixed
    const std::uint64_t a = (pos / h) * h;
    DyadicInterval I(spec.n, pos >> (L - spec.n));
    if (spec.mode(I) == FoldMode::identity) return pos;
    const std::uint64_t t = pos - a;
    // pieces split at 3h/8 and 5h/8; compare via 8t against 3h, 5h
    if (8 * t <= 3 * h) return a + 2 * t;
    if (8 * t <= 5 * h) return a + (3 * h) / 2 - 2 * t;
    return a + 2 * t - h;
}

std::vector<std::uint64_t> limit_map_positions(const DiameterRule& rule, unsigned L, unsigned m) {
    if (rule.depth() == 0 || m >= rule.depth())
        return cascade_map_positions(rule, L, m, m);  // identity levels only
    return cascade_map_positions(rule, L, m, rule.depth() - 1);
}

std::vector<std::uint64_t> cascade_map_positions(const DiameterRule& rule, unsigned L, unsigned m,
                                                 unsigned n) {
    if (m > n) throw std::invalid_argument("cascade_map_positions requires m <= n");
    const std::uint64_t M = std::uint64_t{1} << L;
    const std::size_t count =
        rule.topology() == Topology::circle ? static_cast<std::size_t>(M)
                                            : static_cast<std::size_t>(M) + 1;
    std::vector<std::uint64_t> table(count);
    for (std::size_t i = 0; i < count; ++i) table[i] = i;
    for (unsigned k = n + 1; k-- > m;) {
        FoldSpec spec(rule, k);
        if (spec.is_identity_everywhere()) continue;
        for (std::size_t i = 0; i < count; ++i) table[i] = fold_position(spec, table[i], L);
    }
    return table;
}

}  // namespace snowcircle
