#pragma once

#include "snowcircle/dyadic.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

namespace snowcircle {

/// Per-interval branching of the diameter function: both children of a kept
/// interval carry its value, both children of a halved interval carry half.
enum class Decision { keep, halve };

/// Global depth cap, overridable via SNOWCIRCLE_MAX_DEPTH.
unsigned max_depth_cap();

struct GeneratorSpec {
    enum class Kind { uniform_halve, periodic_keep, seeded_random };
    Kind kind = Kind::uniform_halve;
    unsigned period = 2;           // periodic_keep
    double keep_prob = 0.0;        // seeded_random, in [0,1)
    std::uint64_t seed = 0;        // seeded_random
    unsigned k_cap = 1;            // max consecutive keeps along any chain

    /// "uniform-halve" | "periodic-keep:P" | "random:p=0.4,seed=7,cap=3"
    static GeneratorSpec parse(const std::string& text);
    std::string str() const;
};

// ---------------------------------------------------------------------------
// DiameterRule: a dyadic diameter function with equal-valued children,
// an explicit decision table down to `depth`, and an all-halve tail.
// Immutable after construction.
// ---------------------------------------------------------------------------
class DiameterRule {
public:
    DiameterRule(Topology topology, unsigned depth, std::unordered_set<std::uint64_t> keeps,
                 unsigned max_consecutive_keeps, std::string seed_info_json = "{}");

    static DiameterRule generate(const GeneratorSpec& spec, unsigned depth, Topology topology);

    Topology topology() const { return topology_; }
    unsigned depth() const { return depth_; }
    unsigned max_consecutive_keeps() const { return k_cap_; }

    /// Decision attached to I (governs both children). Tail intervals halve.
    Decision decision(const DyadicInterval& I) const;

    /// Whether any interval at this level carries a keep decision.
    bool any_keep_at_level(unsigned level) const;

    /// Number of halve decisions on the root path; delta(I) = 2^-delta_exponent(I).
    unsigned delta_exponent(const DyadicInterval& I) const;
    DyadicRational delta(const DyadicInterval& I) const {
        return DyadicRational::pow2(delta_exponent(I));
    }

    unsigned delta_truncated_exponent(unsigned n, const DyadicInterval& I) const;
    DyadicRational delta_truncated(unsigned n, const DyadicInterval& I) const {
        return DyadicRational::pow2(delta_truncated_exponent(n, I));
    }

    /// M(n) = max{delta(I) : I at level n} = 2^-max_diam_exponent(n).
    unsigned max_diam_exponent(unsigned n) const;
    DyadicRational max_level_diameter(unsigned n) const {
        return DyadicRational::pow2(max_diam_exponent(n));
    }

    nlohmann::json to_json() const;
    static DiameterRule from_json(const nlohmann::json& j);
    std::string canonical_text() const;  // deterministic serialized form
    std::string hash() const;            // FNV-1a 64 of canonical_text, hex

    bool operator==(const DiameterRule& o) const;

    static std::uint64_t node_key(const DyadicInterval& I) {
        return (std::uint64_t{1} << I.level) | I.index;
    }

private:
    Topology topology_;
    unsigned depth_;
    unsigned k_cap_;
    std::unordered_set<std::uint64_t> keeps_;
    std::vector<unsigned> min_halves_;     // per level 0..depth, for M(n)
    std::vector<std::uint32_t> level_keeps_;  // keep count per level
    std::string seed_info_json_;

    void validate_and_index();
};

DiameterRule load_rule_file(const std::string& path);
void save_rule_file(const DiameterRule& rule, const std::string& path);

}  // namespace snowcircle
