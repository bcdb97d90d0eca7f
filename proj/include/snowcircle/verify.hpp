#pragma once

#include "snowcircle/arcset.hpp"
#include "snowcircle/dyadic.hpp"
#include "snowcircle/fold.hpp"
#include "snowcircle/local_metric.hpp"
#include "snowcircle/metric.hpp"
#include "snowcircle/rule.hpp"

#include <optional>
#include <string>
#include <vector>

namespace snowcircle {

// ---------------------------------------------------------------------------
// Target sets: H = I ∪ J, two adjacent level-M* intervals enclosing a set E
// with 2^{-M*-1} <= diam_0(E) < 2^{-M*}.
// ---------------------------------------------------------------------------
struct TargetSet {
    unsigned m_star = 3;
    DyadicInterval left, right;  // adjacent at level m_star (right may wrap)
    DyadicRational delta;        // diam_0 of the certified E

    ArcSet realized(Topology t) const;
    static TargetSet adjacent_pair(unsigned m_star, std::uint64_t index, Topology t,
                                   const DyadicRational& delta);
};

struct ComponentFamily {
    DyadicRational delta;
    MetricKind metric;
    std::vector<std::vector<DyadicPoint>> components;  // ordered by leftmost point
    std::vector<DyadicRational> diameters;
};

/// Maximal delta-connected components of a point set.
ComponentFamily delta_components(const std::vector<DyadicPoint>& points,
                                 const DyadicRational& delta, const MetricIndex& idx);

/// E' ⊇ E with diam_0(E') = r, extended from the first point of E.
/// Requires diam_0(E) < r < 1/8.
ExactArc enlarge_target(const std::vector<DyadicPoint>& E, const DyadicRational& r, Topology t);

/// delta-components of {x in D_L : F_0(x) in H} under d_Delta, with
/// delta = diam_0(H). Requires L >= m_star + 4.
ComponentFamily preimage_components(const DiameterRule& rule, const TargetSet& target,
                                    unsigned L);

// ---------------------------------------------------------------------------
// Symmetry classification of a set, per reflection through the hull midpoint.
// ---------------------------------------------------------------------------
enum class SymmetryClass {
    about_base,    // center in D_k
    about_next,    // center in D_{k+1} \ D_k
    about_second,  // center in D_{k+2} \ D_{k+1}
    none,
};

struct SymmetryInfo {
    SymmetryClass cls = SymmetryClass::none;
    std::optional<DyadicRational> center;
    unsigned center_level = 0;  // canonical level of the center when symmetric
};

SymmetryInfo symmetry_class(const ArcSet& V, unsigned k);

// ---------------------------------------------------------------------------
// V-trace: V_0 = H, V_{n+1} = the delta-component of f_n^{-1}(V_n) containing
// F_{n+1}(W); stabilizes once every deeper level folds nothing.
// ---------------------------------------------------------------------------
enum class StepCase {
    start,              // n = 0
    identity,           // f_{n-1} acted as the identity near V_{n-1}
    equal,              // diameter preserved under a fold
    doubled_symmetric,  // diameter doubled, symmetric in D_{n+2} \ D_n
    collapsed_point,    // V_n is a single point
    other,
};

struct VTraceStep {
    unsigned n = 0;
    ArcSet set;
    DyadicRational diam;  // diam_n over the evaluation samples
    std::optional<DyadicInterval> containing;  // I_n when unique
    SymmetryInfo symmetry;                     // classes at k = n
    StepCase transition = StepCase::start;
    bool fold_step = false;
    bool cases_hypotheses = false;  // the five L:cases assumptions held here
    std::optional<std::pair<DyadicRational, DyadicRational>> ratio_diag;  // R(n) diagnostics
};

struct LemmaOutcome {
    std::string name;
    unsigned instances = 0;  // checked instances
    bool applicable = false;
    bool pass = true;
    std::string detail;
    std::optional<DyadicRational> margin;  // worst slack for inequality-style checks
};

struct ProjectionCheck {
    bool pass = true;
    std::size_t preimage_size = 0;
    std::size_t rhs_size = 0;
    std::string detail;
};

/// L:projection at finite depth: with U a union of level-<=n intervals and
/// L' = L + (number of folding levels <= L), checks the sandwich
/// RHS(D_L) ⊆ F_{n+1}(F_0^{-1}(U) ∩ D_{L'}) ⊆ RHS(D_{L'}).
ProjectionCheck projection_identity_check(const DiameterRule& rule, unsigned n,
                                          const std::vector<DyadicInterval>& U, unsigned L);

struct VTrace {
    TargetSet target;
    std::vector<VTraceStep> steps;
    unsigned n_star = 0;           // minimal n with M(n) < delta/4
    unsigned n_frozen = 0;         // all deeper folds are the identity from here
    DyadicRational frozen_diam;    // diam_n(V_n) for n >= n_frozen (= d_Delta value)
    DyadicRational w_diam;         // diam_Delta(W) of the anchor component
    std::vector<LemmaOutcome> lemmas;
    bool pass = true;
    std::string failure;
};

VTrace v_trace(const DiameterRule& rule, const TargetSet& target,
               const std::vector<DyadicPoint>& W, unsigned L,
               const DyadicRational& w_diam);

// ---------------------------------------------------------------------------
// The Lipschitz-light sweep.
// ---------------------------------------------------------------------------
struct ComponentRecord {
    std::size_t size = 0;
    DyadicPoint leftmost;
    DyadicRational diam;
    std::vector<std::uint64_t> points;  // grid positions at the sweep depth
    bool trace_run = false;
    bool trace_pass = true;
    std::vector<LemmaOutcome> trace_lemmas;
    unsigned trace_steps = 0;
    std::string trace_fail_reason;
};

struct TargetRecord {
    TargetSet target;
    std::vector<ComponentRecord> components;
    DyadicRational max_diam;
};

struct Ratio {
    DyadicRational num, den;  // num/den
    bool defined = false;
    std::string str() const;
    bool less_than(const Ratio& o) const;
    bool exceeds_int(std::uint64_t bound) const;  // num/den > bound
};

struct VerifyOptions {
    unsigned depth = 12;
    unsigned mstar_lo = 3;
    unsigned mstar_hi = 8;
    bool run_traces = true;
    bool composite = true;
    unsigned jobs = 1;
};

struct VerificationOutcome {
    unsigned depth = 0;
    std::vector<TargetRecord> targets;
    Ratio global_ratio;               // max diam_Delta(W) / delta over the sweep
    std::optional<TargetSet> witness_target;
    bool bound_pass = true;           // every ratio <= 129
    bool traces_pass = true;          // every trace lemma check passed
    Ratio lipschitz_f0;               // measured Lipschitz constant of F_0 at depth <= 8
    std::vector<TargetRecord> composite_targets;  // g∘F_0 sweep
    Ratio composite_ratio;
    std::vector<std::string> failures;
    bool pass() const { return bound_pass && traces_pass; }
};

VerificationOutcome verify_lipschitz_light(const DiameterRule& rule, const VerifyOptions& opt);

constexpr unsigned kComponentBound = 129;  // diam_Delta(W) <= 129 delta

}  // namespace snowcircle
