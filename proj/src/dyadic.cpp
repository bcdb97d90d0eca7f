#include "snowcircle/dyadic.hpp"

#include <charconv>

namespace snowcircle {

namespace {

std::uint64_t pow2_u64(unsigned e) {
    if (e >= 64) throw std::invalid_argument("dyadic level too deep for 64-bit grid");
    return std::uint64_t{1} << e;
}

std::uint64_t parse_u64(const std::string& s) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw std::invalid_argument("bad integer: '" + s + "'");
    return v;
}

}  // namespace

std::string to_string(Topology t) { return t == Topology::circle ? "circle" : "arc"; }

Topology topology_from_string(const std::string& s) {
    if (s == "circle") return Topology::circle;
    if (s == "arc") return Topology::arc;
    throw std::invalid_argument("unknown topology: '" + s + "'");
}

// ---------------------------------------------------------------------------
// DyadicRational
// ---------------------------------------------------------------------------

DyadicRational::DyadicRational(BigInt mantissa, unsigned exponent)
    : mantissa_(std::move(mantissa)), exponent_(exponent) {
    if (mantissa_ < 0) throw std::invalid_argument("DyadicRational is nonnegative");
    normalize();
}

void DyadicRational::normalize() {
    if (mantissa_ == 0) {
        exponent_ = 0;
        return;
    }
    while (exponent_ > 0 && (mantissa_ & 1) == 0) {
        mantissa_ >>= 1;
        --exponent_;
    }
}

BigInt DyadicRational::scaled(unsigned e) const {
    if (e < exponent_) throw std::invalid_argument("scaled(): target exponent too small");
    return mantissa_ << (e - exponent_);
}

DyadicRational DyadicRational::operator+(const DyadicRational& o) const {
    unsigned e = std::max(exponent_, o.exponent_);
    return DyadicRational(scaled(e) + o.scaled(e), e);
}

DyadicRational DyadicRational::operator-(const DyadicRational& o) const {
    unsigned e = std::max(exponent_, o.exponent_);
    BigInt d = scaled(e) - o.scaled(e);
    if (d < 0) throw std::invalid_argument("DyadicRational subtraction went negative");
    return DyadicRational(std::move(d), e);
}

DyadicRational DyadicRational::doubled() const {
    if (exponent_ > 0) return DyadicRational(mantissa_, exponent_ - 1);
    return DyadicRational(mantissa_ * 2, 0);
}

DyadicRational DyadicRational::times_pow2(int k) const {
    if (k >= 0) {
        DyadicRational r = *this;
        for (int i = 0; i < k; ++i) r = r.doubled();
        return r;
    }
    return DyadicRational(mantissa_, exponent_ + static_cast<unsigned>(-k));
}

DyadicRational DyadicRational::times(std::uint64_t k) const {
    return DyadicRational(mantissa_ * k, exponent_);
}

int DyadicRational::compare(const DyadicRational& o) const {
    unsigned e = std::max(exponent_, o.exponent_);
    BigInt a = scaled(e), b = o.scaled(e);
    if (a < b) return -1;
    if (a > b) return 1;
    return 0;
}

std::string DyadicRational::str() const {
    if (exponent_ == 0) return mantissa_.str();
    if (exponent_ <= 62) {
        BigInt den = BigInt(1) << exponent_;
        return mantissa_.str() + "/" + den.str();
    }
    return mantissa_.str() + "/2^" + std::to_string(exponent_);
}

DyadicRational DyadicRational::parse(const std::string& s) {
    auto slash = s.find('/');
    if (slash == std::string::npos) return DyadicRational(BigInt(s), 0);
    BigInt num(s.substr(0, slash));
    std::string den = s.substr(slash + 1);
    unsigned e = 0;
    if (den.rfind("2^", 0) == 0) {
        e = static_cast<unsigned>(parse_u64(den.substr(2)));
    } else {
        BigInt d(den);
        if (d <= 0) throw std::invalid_argument("bad dyadic denominator: '" + den + "'");
        while ((d & 1) == 0) {
            d >>= 1;
            ++e;
        }
        if (d != 1) throw std::invalid_argument("denominator not a power of two: '" + den + "'");
    }
    return DyadicRational(std::move(num), e);
}

// ---------------------------------------------------------------------------
// DyadicPoint
// ---------------------------------------------------------------------------

std::string DyadicPoint::str() const {
    DyadicRational v = value();
    if (v.exponent() == 0) return v.mantissa().str();
    return v.str();
}

DyadicPoint DyadicPoint::parse(const std::string& s) {
    DyadicRational v = DyadicRational::parse(s);
    if (v.exponent() >= 64) throw std::invalid_argument("point too deep: '" + s + "'");
    BigInt num = v.mantissa();
    if (num > BigInt(std::uint64_t{1} << std::min(63u, v.exponent() + 1)))
        throw std::invalid_argument("point out of range: '" + s + "'");
    return DyadicPoint(static_cast<std::uint64_t>(num), v.exponent());
}

DyadicPoint canonicalize(DyadicPoint p, Topology t) {
    std::uint64_t span = pow2_u64(p.level);
    if (p.numerator > span) throw std::invalid_argument("point numerator out of range");
    if (p.numerator == span) {
        if (t == Topology::circle) return DyadicPoint(0, 0);
        return DyadicPoint(1, 0);
    }
    while (p.level > 0 && (p.numerator & 1) == 0) {
        p.numerator >>= 1;
        --p.level;
    }
    return p;
}

DyadicPoint point_from_value(const DyadicRational& v, Topology t) {
    if (v.exponent() >= 64) throw std::invalid_argument("point value too deep");
    if (v.mantissa() < 0 || v > DyadicRational::one())
        throw std::invalid_argument("point value outside [0,1]");
    return canonicalize(DyadicPoint(static_cast<std::uint64_t>(v.mantissa()), v.exponent()), t);
}

// ---------------------------------------------------------------------------
// DyadicInterval
// ---------------------------------------------------------------------------

DyadicPoint DyadicInterval::left() const {
    return canonicalize(DyadicPoint(index, level), Topology::arc);
}

DyadicPoint DyadicInterval::right(Topology t) const {
    return canonicalize(DyadicPoint(index + 1, level), t);
}

bool DyadicInterval::contains(const DyadicPoint& p) const {
    DyadicRational lo = DyadicRational(BigInt(index), level);
    DyadicRational hi = DyadicRational(BigInt(index + 1), level);
    DyadicRational v = p.value();
    return lo <= v && v <= hi;
}

std::string DyadicInterval::str() const {
    return std::to_string(level) + ":" + std::to_string(index);
}

DyadicInterval DyadicInterval::parse(const std::string& s) {
    auto colon = s.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("bad interval id: '" + s + "'");
    unsigned lev = static_cast<unsigned>(parse_u64(s.substr(0, colon)));
    std::uint64_t idx = parse_u64(s.substr(colon + 1));
    if (lev >= 64 || idx >= pow2_u64(lev))
        throw std::invalid_argument("interval index out of range: '" + s + "'");
    return DyadicInterval(lev, idx);
}

std::pair<DyadicInterval, DyadicInterval> children(const DyadicInterval& I) {
    return {DyadicInterval(I.level + 1, 2 * I.index), DyadicInterval(I.level + 1, 2 * I.index + 1)};
}

DyadicInterval parent(const DyadicInterval& I) {
    if (I.level == 0) throw std::invalid_argument("root interval has no parent");
    return DyadicInterval(I.level - 1, I.index / 2);
}

DyadicInterval ancestor_at(const DyadicInterval& I, unsigned level) {
    if (level > I.level) throw std::invalid_argument("ancestor_at(): level below interval");
    return DyadicInterval(level, I.index >> (I.level - level));
}

DyadicInterval containing_interval(const DyadicPoint& p, unsigned n, Topology t) {
    std::uint64_t span = pow2_u64(n);
    std::uint64_t num;
    if (p.level <= n) {
        num = p.numerator << (n - p.level);
    } else {
        num = p.numerator >> (p.level - n);
    }
    if (t == Topology::circle) num %= span;
    if (num >= span) num = span - 1;  // arc right endpoint falls into the last cell
    return DyadicInterval(n, num);
}

std::vector<DyadicInterval> containing_intervals_both(const DyadicPoint& p, unsigned n, Topology t) {
    std::uint64_t span = pow2_u64(n);
    DyadicInterval right = containing_interval(p, n, t);
    std::vector<DyadicInterval> out{right};
    bool on_grid = p.level <= n;
    if (!on_grid) return out;
    std::uint64_t num = p.numerator << (n - p.level);
    if (t == Topology::circle) {
        out.push_back(DyadicInterval(n, (num + span - 1) % span));
    } else if (num > 0 && num < span) {
        out.push_back(DyadicInterval(n, num - 1));
    } else {
        return out;  // arc endpoints 0 and 1 touch a single cell
    }
    if (out[1] == out[0]) out.pop_back();
    return out;
}

DyadicRational arclength(const DyadicPoint& x, const DyadicPoint& y, Topology t) {
    DyadicRational a = x.value(), b = y.value();
    DyadicRational d = a <= b ? b - a : a - b;
    if (t == Topology::arc) return d;
    DyadicRational wrap = DyadicRational::one() - d;
    return d <= wrap ? d : wrap;
}

}  // namespace snowcircle
