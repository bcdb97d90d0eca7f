#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace snowcircle {

using BigInt = boost::multiprecision::cpp_int;

/// Whether the ambient space is the circle S = [0,1]/{0,1} or the arc [0,1].
enum class Topology { circle, arc };

std::string to_string(Topology t);
Topology topology_from_string(const std::string& s);

// ---------------------------------------------------------------------------
// DyadicRational: exact nonnegative value mantissa * 2^-exponent.
// Normalized so that mantissa is odd, or zero with exponent zero.
// ---------------------------------------------------------------------------
class DyadicRational {
public:
    DyadicRational() : mantissa_(0), exponent_(0) {}
    DyadicRational(BigInt mantissa, unsigned exponent);

    static DyadicRational from_int(std::uint64_t v) { return DyadicRational(BigInt(v), 0); }
    static DyadicRational zero() { return DyadicRational(); }
    static DyadicRational one() { return from_int(1); }
    /// 2^-e
    static DyadicRational pow2(unsigned e) { return DyadicRational(BigInt(1), e); }

    const BigInt& mantissa() const { return mantissa_; }
    unsigned exponent() const { return exponent_; }
    bool is_zero() const { return mantissa_ == 0; }

    /// Mantissa rescaled to a common exponent e >= exponent().
    BigInt scaled(unsigned e) const;

    DyadicRational operator+(const DyadicRational& o) const;
    DyadicRational operator-(const DyadicRational& o) const;  // throws if negative
    DyadicRational halved() const { return DyadicRational(mantissa_, exponent_ + 1); }
    DyadicRational doubled() const;
    DyadicRational times_pow2(int k) const;  // value * 2^k, throws if result not representable (negative)
    DyadicRational times(std::uint64_t k) const;

    int compare(const DyadicRational& o) const;
    bool operator==(const DyadicRational& o) const { return compare(o) == 0; }
    bool operator!=(const DyadicRational& o) const { return compare(o) != 0; }
    bool operator<(const DyadicRational& o) const { return compare(o) < 0; }
    bool operator<=(const DyadicRational& o) const { return compare(o) <= 0; }
    bool operator>(const DyadicRational& o) const { return compare(o) > 0; }
    bool operator>=(const DyadicRational& o) const { return compare(o) >= 0; }

    /// Canonical text form: "m/d" with d = 2^exponent in decimal ("3/8"),
    /// bare integer when exponent is zero, "m/2^e" once d would overflow.
    std::string str() const;
    static DyadicRational parse(const std::string& s);

private:
    BigInt mantissa_;
    unsigned exponent_;
    void normalize();
};

// ---------------------------------------------------------------------------
// DyadicPoint: position numerator / 2^level, canonical (level 0 or odd numerator).
// ---------------------------------------------------------------------------
struct DyadicPoint {
    std::uint64_t numerator = 0;
    unsigned level = 0;

    DyadicPoint() = default;
    DyadicPoint(std::uint64_t num, unsigned lev) : numerator(num), level(lev) {}

    DyadicRational value() const { return DyadicRational(BigInt(numerator), level); }
    bool operator==(const DyadicPoint& o) const = default;

    std::string str() const;  // "numerator/2^level" reduced, e.g. "3/8"
    static DyadicPoint parse(const std::string& s);
};

/// Reduce to canonical form; on the circle the position 2^level/2^level folds to 0.
DyadicPoint canonicalize(DyadicPoint p, Topology t);

/// Canonical point for an exact dyadic value in [0,1] (circle: [0,1) after folding).
DyadicPoint point_from_value(const DyadicRational& v, Topology t);

// ---------------------------------------------------------------------------
// DyadicInterval: [index/2^level, (index+1)/2^level].
// ---------------------------------------------------------------------------
struct DyadicInterval {
    unsigned level = 0;
    std::uint64_t index = 0;

    DyadicInterval() = default;
    DyadicInterval(unsigned lev, std::uint64_t idx) : level(lev), index(idx) {}

    bool operator==(const DyadicInterval& o) const = default;
    bool operator<(const DyadicInterval& o) const {
        return level != o.level ? level < o.level : index < o.index;
    }

    DyadicPoint left() const;
    DyadicPoint right(Topology t) const;  // circle folds 2^level to 0
    DyadicRational length() const { return DyadicRational::pow2(level); }
    bool contains(const DyadicPoint& p) const;

    std::string str() const;  // "level:index"
    static DyadicInterval parse(const std::string& s);
};

std::pair<DyadicInterval, DyadicInterval> children(const DyadicInterval& I);
DyadicInterval parent(const DyadicInterval& I);  // throws on the root
DyadicInterval ancestor_at(const DyadicInterval& I, unsigned level);

/// The level-n interval containing p, left-closed when p lies on the level-n grid.
DyadicInterval containing_interval(const DyadicPoint& p, unsigned n, Topology t);

/// Both level-n intervals when p is a shared grid endpoint, otherwise one.
std::vector<DyadicInterval> containing_intervals_both(const DyadicPoint& p, unsigned n, Topology t);

/// The metric of the base space: arc length lambda on the circle, |x-y| on the arc.
DyadicRational arclength(const DyadicPoint& x, const DyadicPoint& y, Topology t);

}  // namespace snowcircle
