#include "snowcircle/arcset.hpp"

#include <algorithm>

namespace snowcircle {

namespace {

BigInt grid_floor(const DyadicRational& v, unsigned K) {
    if (v.exponent() <= K) return v.scaled(K);
    return v.mantissa() >> (v.exponent() - K);
}

BigInt grid_ceil(const DyadicRational& v, unsigned K) {
    BigInt f = grid_floor(v, K);
    if (DyadicRational(f, K) != v) ++f;
    return f;
}

}  // namespace

DyadicRational mod_one(const DyadicRational& v) {
    BigInt whole = v.mantissa() >> v.exponent();
    return v - DyadicRational(whole, 0);
}

ArcSet ArcSet::point(const DyadicRational& x, Topology t) {
    ArcSet s(t);
    DyadicRational p = t == Topology::circle ? mod_one(x) : x;
    if (p > DyadicRational::one()) throw std::invalid_argument("point outside the unit arc");
    s.segs_.emplace_back(p, p);
    s.normalize();
    return s;
}

ArcSet ArcSet::span(const DyadicRational& lo, const DyadicRational& length, Topology t) {
    if (length > DyadicRational::one()) throw std::invalid_argument("arc longer than the circle");
    ArcSet s(t);
    if (t == Topology::arc) {
        DyadicRational hi = lo + length;
        if (hi > DyadicRational::one()) throw std::invalid_argument("segment outside the unit arc");
        s.segs_.emplace_back(lo, hi);
    } else {
        DyadicRational start = mod_one(lo);
        DyadicRational hi = start + length;
        if (hi > DyadicRational::one()) {
            s.segs_.emplace_back(start, DyadicRational::one());
            s.segs_.emplace_back(DyadicRational::zero(), hi - DyadicRational::one());
        } else {
            s.segs_.emplace_back(start, hi);
        }
    }
    s.normalize();
    return s;
}

ArcSet ArcSet::of_interval(const DyadicInterval& I, Topology t) {
    return span(DyadicRational(BigInt(I.index), I.level), DyadicRational::pow2(I.level), t);
}

void ArcSet::normalize() {
    if (segs_.empty()) return;
    for (auto& [lo, hi] : segs_) {
        if (hi < lo || hi > DyadicRational::one())
            throw std::invalid_argument("malformed arc segment");
        if (topology_ == Topology::circle && lo == DyadicRational::one())
            lo = hi = DyadicRational::zero();
    }
    std::sort(segs_.begin(), segs_.end());
    std::vector<std::pair<DyadicRational, DyadicRational>> merged;
    for (auto& seg : segs_) {
        if (!merged.empty() && seg.first <= merged.back().second) {
            if (seg.second > merged.back().second) merged.back().second = seg.second;
        } else {
            merged.push_back(std::move(seg));
        }
    }
    segs_ = std::move(merged);
}

bool ArcSet::operator==(const ArcSet& o) const {
    return topology_ == o.topology_ && segs_ == o.segs_;
}

void ArcSet::unite(const ArcSet& o) {
    if (o.topology_ != topology_) throw std::invalid_argument("topology mismatch");
    segs_.insert(segs_.end(), o.segs_.begin(), o.segs_.end());
    normalize();
}

ArcSet ArcSet::unions(const std::vector<ArcSet>& parts) {
    if (parts.empty()) return ArcSet();
    ArcSet out(parts.front().topology());
    for (const auto& p : parts) out.unite(p);
    return out;
}

bool ArcSet::contains(const DyadicRational& x) const {
    DyadicRational p = x;
    if (topology_ == Topology::circle && p == DyadicRational::one()) p = DyadicRational::zero();
    for (const auto& [lo, hi] : segs_)
        if (lo <= p && p <= hi) return true;
    if (topology_ == Topology::circle && p.is_zero())
        for (const auto& [lo, hi] : segs_)
            if (hi == DyadicRational::one()) return true;
    return false;
}

bool ArcSet::contains_set(const ArcSet& o) const {
    for (const auto& [lo, hi] : o.segs_) {
        bool ok = false;
        for (const auto& [a, b] : segs_)
            if (a <= lo && hi <= b) {
                ok = true;
                break;
            }
        if (!ok) return false;
    }
    return true;
}

bool ArcSet::intersects_interval(const DyadicInterval& I) const {
    DyadicRational a(BigInt(I.index), I.level);
    DyadicRational b = a + DyadicRational::pow2(I.level);
    for (const auto& [lo, hi] : segs_)
        if (!(hi < a || b < lo)) return true;
    if (topology_ == Topology::circle && b == DyadicRational::one() && contains(DyadicRational::zero()))
        return true;
    if (topology_ == Topology::circle && a.is_zero() && contains(DyadicRational::one()))
        return true;
    return false;
}

ArcSet ArcSet::clip_to_interval(const DyadicInterval& I) const {
    DyadicRational a(BigInt(I.index), I.level);
    DyadicRational b = a + DyadicRational::pow2(I.level);
    ArcSet out(topology_);
    for (const auto& [lo, hi] : segs_) {
        DyadicRational clo = lo < a ? a : lo;
        DyadicRational chi = hi > b ? b : hi;
        if (clo <= chi) out.segs_.emplace_back(clo, chi);
    }
    out.normalize();
    return out;
}

std::vector<ExactArc> ArcSet::components() const {
    std::vector<ExactArc> out;
    if (segs_.empty()) return out;
    if (topology_ == Topology::circle && segs_.size() == 1 && segs_.front().first.is_zero() &&
        segs_.front().second == DyadicRational::one()) {
        out.push_back({DyadicRational::zero(), DyadicRational::one()});
        return out;
    }
    bool glue = topology_ == Topology::circle && segs_.size() >= 2 &&
                segs_.front().first.is_zero() && segs_.back().second == DyadicRational::one();
    std::size_t from = glue ? 1 : 0;
    std::size_t to = glue ? segs_.size() - 1 : segs_.size();
    for (std::size_t i = from; i < to; ++i)
        out.push_back({segs_[i].first, segs_[i].second - segs_[i].first});
    if (glue) {
        DyadicRational len =
            (DyadicRational::one() - segs_.back().first) + segs_.front().second;
        out.push_back({segs_.back().first, len});
        std::sort(out.begin(), out.end(),
                  [](const ExactArc& x, const ExactArc& y) { return x.start < y.start; });
    }
    return out;
}

DyadicRational ArcSet::total_length() const {
    DyadicRational total;
    for (const auto& arc : components()) total = total + arc.length;
    return total;
}

std::optional<ExactArc> ArcSet::hull() const {
    if (segs_.empty()) return std::nullopt;
    if (topology_ == Topology::arc)
        return ExactArc{segs_.front().first, segs_.back().second - segs_.front().first};
    auto comps = components();
    if (comps.size() == 1 && comps.front().length == DyadicRational::one()) return comps.front();
    std::size_t n = comps.size();
    DyadicRational best_gap;
    std::size_t after = 0;
    bool have = false;
    for (std::size_t i = 0; i < n; ++i) {
        DyadicRational end = comps[i].start + comps[i].length;
        DyadicRational next = comps[(i + 1) % n].start;
        if (i + 1 == n) next = next + DyadicRational::one();
        DyadicRational gap = next - end;
        if (!have || gap > best_gap) {
            best_gap = gap;
            after = i;
            have = true;
        }
    }
    return ExactArc{comps[(after + 1) % n].start, DyadicRational::one() - best_gap};
}

std::optional<ArcSet> ArcSet::reflect(const DyadicRational& center) const {
    ArcSet out(topology_);
    const DyadicRational two(BigInt(2), 0);
    DyadicRational c2 = center.doubled() + two;  // keeps intermediates nonnegative
    for (const auto& [lo, hi] : segs_) {
        DyadicRational rlo = c2 - hi, rhi = c2 - lo;
        if (topology_ == Topology::arc) {
            if (rlo < two || rhi > two + DyadicRational::one()) return std::nullopt;
            out.segs_.emplace_back(rlo - two, rhi - two);
        } else {
            ArcSet piece = ArcSet::span(mod_one(rlo), rhi - rlo, Topology::circle);
            out.segs_.insert(out.segs_.end(), piece.segs_.begin(), piece.segs_.end());
        }
    }
    out.normalize();
    return out;
}

std::vector<DyadicRational> ArcSet::sample_points(unsigned K, std::size_t cap) const {
    if (K >= 62) throw std::invalid_argument("sample grid too deep");
    std::vector<DyadicRational> pts;
    const BigInt span = BigInt(1) << K;
    for (const auto& [lo, hi] : segs_) {
        pts.push_back(lo);
        if (hi != lo) pts.push_back(hi);
        BigInt from = grid_ceil(lo, K), to = grid_floor(hi, K);
        if (to < from) continue;
        std::uint64_t count = static_cast<std::uint64_t>(to - from + 1);
        std::uint64_t step = 1;
        if (cap > 0 && count > cap) step = (count + cap - 1) / cap;
        for (BigInt g = from; g <= to; g += step) {
            if (topology_ == Topology::circle && g == span)
                pts.push_back(DyadicRational::zero());
            else
                pts.push_back(DyadicRational(g, K));
        }
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

}  // namespace snowcircle
