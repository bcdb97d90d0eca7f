#include "snowcircle/report.hpp"

#include "snowcircle/fold.hpp"
#include "snowcircle/local_metric.hpp"

#include <nlohmann/json.hpp>

#include <random>

namespace snowcircle {

using nlohmann::json;

namespace {

std::string ratio_text(const DyadicRational& num, const DyadicRational& den) {
    Ratio r;
    r.num = num;
    r.den = den;
    r.defined = true;
    return r.str();
}

json lemma_outcomes_json(const std::vector<LemmaOutcome>& lemmas) {
    json j = json::object();
    for (const auto& lo : lemmas) {
        json row;
        row["applicable"] = lo.applicable;
        row["instances"] = lo.instances;
        row["pass"] = lo.pass;
        if (!lo.detail.empty()) row["detail"] = lo.detail;
        if (lo.margin) row["margin"] = lo.margin->str();
        j[lo.name] = row;
    }
    return j;
}

}  // namespace

json verification_report_json(const DiameterRule& rule, const VerificationOutcome& out) {
    json j;
    j["rule"] = rule.to_json();
    j["depth"] = out.depth;
    json targets = json::array();
    for (const auto& rec : out.targets) {
        json t;
        t["M_star"] = rec.target.m_star;
        t["H"] = json::array({rec.target.left.str(), rec.target.right.str()});
        t["delta"] = rec.target.delta.str();
        json comps = json::array();
        for (const auto& cr : rec.components) {
            json c;
            c["size"] = cr.size;
            c["leftmost"] = cr.leftmost.str();
            c["diam"] = cr.diam.str();
            c["ratio"] = ratio_text(cr.diam, rec.target.delta);
            if (cr.trace_run) {
                json ts;
                ts["steps"] = cr.trace_steps;
                ts["pass"] = cr.trace_pass;
                ts["lemmas"] = lemma_outcomes_json(cr.trace_lemmas);
                c["trace_summary"] = ts;
            }
            comps.push_back(std::move(c));
        }
        t["components"] = std::move(comps);
        t["max_ratio"] = ratio_text(rec.max_diam, rec.target.delta);
        targets.push_back(std::move(t));
    }
    j["targets"] = std::move(targets);
    j["global_max_ratio"] = out.global_ratio.str();
    j["bound"] = kComponentBound;
    j["pass"] = out.pass();
    j["lipschitz_f0"] = out.lipschitz_f0.str();
    json composite;
    composite["global_max_ratio"] = out.composite_ratio.str();
    json ctargets = json::array();
    for (const auto& rec : out.composite_targets) {
        json t;
        t["M_star"] = rec.target.m_star;
        t["H"] = json::array({rec.target.left.str(), rec.target.right.str()});
        t["delta"] = rec.target.delta.str();
        t["max_ratio"] = ratio_text(rec.max_diam, rec.target.delta);
        ctargets.push_back(std::move(t));
    }
    composite["targets"] = std::move(ctargets);
    j["composite"] = std::move(composite);
    if (!out.failures.empty()) j["failures"] = out.failures;
    json meta;
    meta["rule_hash"] = rule.hash();
    meta["seed_info"] = rule.to_json()["seed_info"];
    meta["depth"] = out.depth;
    meta["version"] = kToolVersion;
    j["meta"] = std::move(meta);
    return j;
}

// ---------------------------------------------------------------------------
// The lemma suite: one row per lemma, driven at the given depth.
// ---------------------------------------------------------------------------

namespace {

struct MarginTracker {
    std::optional<DyadicRational> worst;
    void feed(const DyadicRational& slack) {
        if (!worst || slack < *worst) worst = slack;
    }
    std::string str() const { return worst ? worst->str() : std::string("0"); }
};

}  // namespace

std::vector<LemmaRow> lemma_suite(const DiameterRule& rule, unsigned depth) {
    if (depth < 7) throw std::invalid_argument("lemma suite needs depth >= 7");
    std::vector<LemmaRow> rows;
    const Topology topo = rule.topology();
    const bool circle = topo == Topology::circle;
    const unsigned dp = std::min(depth, 7u);  // pairwise sweeps depth
    const std::uint64_t Mp = std::uint64_t{1} << dp;
    const std::uint64_t np = Mp + (circle ? 0 : 1);

    MetricIndex full(rule, dp, MetricKind::full());
    std::vector<MetricIndex> truncs;
    std::vector<AllPairs> ap_trunc;
    for (unsigned n = 0; n <= dp; ++n) truncs.emplace_back(rule, dp, MetricKind::trunc(n));
    for (const auto& ix : truncs) ap_trunc.emplace_back(ix);
    AllPairs ap_full(full);

    {  // L:minimal and L:minimalchain over seeded chain queries
        LemmaRow r1{"L:minimal", 0, true, "0"};
        LemmaRow r2{"L:minimalchain", 0, true, "0"};
        std::mt19937_64 rng(2024);
        for (int q = 0; q < 400; ++q) {
            std::uint64_t a = rng() % np, b = rng() % np;
            if (a == b) continue;
            DyadicPoint pa = full.point_at(a), pb = full.point_at(b);
            Chain c = full.minimal_chain(pa, pb);
            DyadicRational cost;
            for (const auto& I : c.intervals) cost = cost + rule.delta(I);
            ++r1.instances;
            if (!is_minimal(c, topo).minimal || cost != full.unscale(ap_full.d(a, b)))
                r1.pass = false;
            ++r2.instances;
            if (!chain_unimodality_check(c, topo)) r2.pass = false;
        }
        rows.push_back(r1);
        rows.push_back(r2);
    }

    {  // E:leqn: d_n <= d_Delta
        LemmaRow r{"E:leqn", 0, true, ""};
        MarginTracker margin;
        for (unsigned n = 0; n <= dp; ++n)
            for (std::uint64_t a = 0; a < np; ++a)
                for (std::uint64_t b = a + 1; b < np; ++b) {
                    ++r.instances;
                    std::uint64_t dn = ap_trunc[n].d(a, b), dd = ap_full.d(a, b);
                    if (dn > dd)
                        r.pass = false;
                    else
                        margin.feed(full.unscale(dd - dn));
                }
        r.worst_margin = margin.str();
        rows.push_back(r);
    }

    {  // E:intn: the interval identity
        LemmaRow r{"E:intn", 0, true, "0"};
        for (unsigned lev = 1; lev <= dp; ++lev)
            for (std::uint64_t i = 0; i < (std::uint64_t{1} << lev); ++i) {
                DyadicInterval I(lev, i);
                ++r.instances;
                try {
                    full.interval_endpoint_distance_check(I);
                    truncs[lev].interval_endpoint_distance_check(I);
                } catch (const std::logic_error&) {
                    r.pass = false;
                }
            }
        rows.push_back(r);
    }

    {  // L:distconverge: d_Delta <= d_n + 2 M(n)
        LemmaRow r{"L:distconverge", 0, true, ""};
        MarginTracker margin;
        for (unsigned n = 0; n <= dp; ++n) {
            DyadicRational twoM = rule.max_level_diameter(n).doubled();
            for (std::uint64_t a = 0; a < np; ++a)
                for (std::uint64_t b = a + 1; b < np; ++b) {
                    ++r.instances;
                    DyadicRational lhs = full.unscale(ap_full.d(a, b));
                    DyadicRational rhs = full.unscale(ap_trunc[n].d(a, b)) + twoM;
                    if (lhs > rhs)
                        r.pass = false;
                    else
                        margin.feed(rhs - lhs);
                }
        }
        r.worst_margin = margin.str();
        rows.push_back(r);
    }

    {  // L:fold: d_n(f_n x, f_n y) <= d_{n+1}(x, y)
        LemmaRow r{"L:fold", 0, true, ""};
        MarginTracker margin;
        for (unsigned n = 0; n + 1 <= dp; ++n) {
            FoldSpec spec(rule, n);
            std::vector<std::uint64_t> img(np);
            for (std::uint64_t i = 0; i < np; ++i) img[i] = fold_position(spec, i, dp);
            for (std::uint64_t a = 0; a < np; ++a)
                for (std::uint64_t b = a + 1; b < np; ++b) {
                    ++r.instances;
                    std::uint64_t lhs = ap_trunc[n].d(img[a], img[b]);
                    std::uint64_t rhs = ap_trunc[n + 1].d(a, b);
                    if (lhs > rhs)
                        r.pass = false;
                    else
                        margin.feed(full.unscale(rhs - lhs));
                }
        }
        r.worst_margin = margin.str();
        rows.push_back(r);
    }

    {  // L:uniform: d_m(F_{m,n} x, F_m x) <= 2 M(n)
        LemmaRow r{"L:uniform", 0, true, ""};
        MarginTracker margin;
        for (unsigned m = 0; m <= 2; ++m) {
            auto lim = limit_map_positions(rule, dp, m);
            for (unsigned n = m; n <= dp; ++n) {
                auto cas = cascade_map_positions(rule, dp, m, n);
                DyadicRational bound = rule.max_level_diameter(n).doubled();
                for (std::uint64_t x = 0; x < np; ++x) {
                    ++r.instances;
                    DyadicRational d = full.unscale(ap_trunc[m].d(cas[x], lim[x]));
                    if (d > bound)
                        r.pass = false;
                    else
                        margin.feed(bound - d);
                }
            }
        }
        r.worst_margin = margin.str();
        rows.push_back(r);
    }

    {  // L:projection sandwich
        LemmaRow r{"L:projection", 0, true, "0"};
        std::mt19937_64 rng(77);
        for (unsigned n = 0; n <= 3; ++n)
            for (int q = 0; q < 3; ++q) {
                std::vector<DyadicInterval> U{
                    DyadicInterval(n, rng() % (std::uint64_t{1} << n))};
                if (q == 2) U.push_back(DyadicInterval(n, rng() % (std::uint64_t{1} << n)));
                ++r.instances;
                if (!projection_identity_check(rule, n, U, std::min(depth, 8u)).pass)
                    r.pass = false;
            }
        rows.push_back(r);
    }

    {  // L:component_proj: F_{m,n}(F_{n+1}(x)) = F_m(x)
        LemmaRow r{"L:component_proj", 0, true, "0"};
        for (unsigned m = 0; m <= 2; ++m) {
            auto lim_m = limit_map_positions(rule, dp, m);
            for (unsigned n = m; n <= std::min(dp, m + 4); ++n) {
                auto lim_n1 = limit_map_positions(rule, dp, n + 1);
                auto cas = cascade_map_positions(rule, dp, m, n);
                for (std::uint64_t x = 0; x < np; ++x) {
                    ++r.instances;
                    if (cas[lim_n1[x]] != lim_m[x]) r.pass = false;
                }
            }
        }
        rows.push_back(r);
    }

    {  // trace-level lemmas via a compact sweep
        VerifyOptions opt;
        opt.depth = std::min(depth, 12u);
        opt.mstar_lo = 5;
        opt.mstar_hi = std::min(8u, opt.depth - 4);
        if (opt.mstar_hi < opt.mstar_lo) opt.mstar_hi = opt.mstar_lo = opt.depth - 4;
        opt.composite = false;
        auto outcome = verify_lipschitz_light(rule, opt);
        const char* names[] = {"L:Vs",   "L:goal",      "L:big",   "L:cases",
                               "L:none", "L:symm_next", "L:not_middle", "L:final"};
        for (const char* name : names) {
            LemmaRow r{name, 0, true, ""};
            MarginTracker margin;
            for (const auto& rec : outcome.targets)
                for (const auto& cr : rec.components)
                    for (const auto& lo : cr.trace_lemmas)
                        if (lo.name == name && lo.applicable) {
                            r.instances += lo.instances;
                            if (!lo.pass) r.pass = false;
                            if (lo.margin) margin.feed(*lo.margin);
                        }
            r.worst_margin = margin.worst ? margin.str() : "0";
            rows.push_back(r);
        }
    }

    {  // L:def: target enlargement and the global fallback bound
        LemmaRow r{"L:def", 0, true, ""};
        MarginTracker margin;
        std::mt19937_64 rng(31);
        for (int q = 0; q < 40; ++q) {
            unsigned e = 4 + rng() % 3;
            DyadicRational rr = DyadicRational::pow2(e);  // r in (0, 1/8)
            std::vector<DyadicPoint> E;
            std::uint64_t base = rng() % Mp;
            for (int i = 0; i < 3; ++i)
                E.push_back(full.point_at((base + rng() % std::max<std::uint64_t>(
                                                             1, (Mp >> (e + 1)))) %
                                          (circle ? Mp : Mp + 1)));
            ArcSet pts(topo);
            for (const auto& p : E) pts.unite(ArcSet::point(p.value(), topo));
            auto h = pts.hull();
            if (!h || !(h->length < rr)) continue;
            ++r.instances;
            ExactArc eprime = enlarge_target(E, rr, topo);
            if (eprime.length != rr) r.pass = false;
            ArcSet cover = ArcSet::span(eprime.start, eprime.length, topo);
            if (!cover.contains_set(pts)) r.pass = false;
        }
        // r >= 1/8 falls back to diam_Delta(Gamma) <= 1 <= 8r
        DyadicRational gamma_diam = full.set_diameter([&] {
            std::vector<DyadicPoint> all;
            for (std::uint64_t i = 0; i < np; i += Mp >> 4) all.push_back(full.point_at(i));
            return all;
        }());
        ++r.instances;
        if (gamma_diam > DyadicRational::one()) r.pass = false;
        margin.feed(DyadicRational::one() - gamma_diam);
        r.worst_margin = margin.str();
        rows.push_back(r);
    }

    return rows;
}

json lemma_suite_json(const DiameterRule& rule, unsigned depth,
                      const std::vector<LemmaRow>& rows) {
    json j;
    j["rule_hash"] = rule.hash();
    j["depth"] = depth;
    j["version"] = kToolVersion;
    json table = json::array();
    for (const auto& r : rows) {
        json row;
        row["lemma"] = r.name;
        row["instances"] = r.instances;
        row["pass"] = r.pass;
        row["worst_margin"] = r.worst_margin;
        table.push_back(std::move(row));
    }
    j["rows"] = std::move(table);
    bool all = true;
    for (const auto& r : rows) all = all && r.pass;
    j["pass"] = all;
    return j;
}

}  // namespace snowcircle
