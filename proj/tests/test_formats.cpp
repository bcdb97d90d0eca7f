#include "snowcircle/metric.hpp"
#include "snowcircle/report.hpp"
#include "snowcircle/verify.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <sstream>

using namespace snowcircle;

namespace {

DiameterRule all_halve(unsigned depth) {
    return DiameterRule::generate(GeneratorSpec::parse("uniform-halve"), depth, Topology::circle);
}

DiameterRule seeded(std::uint64_t seed, unsigned depth) {
    GeneratorSpec spec;
    spec.kind = GeneratorSpec::Kind::seeded_random;
    spec.keep_prob = 0.4;
    spec.seed = seed;
    spec.k_cap = 2;
    return DiameterRule::generate(spec, depth, Topology::circle);
}

}  // namespace

TEST_CASE("distance matrix CSV shape") {
    MetricIndex idx(all_halve(6), 6, MetricKind::full());
    std::string csv = distance_matrix_csv(idx, 4);
    std::istringstream in(csv);
    std::string line;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    REQUIRE(rows.size() == 17);  // header + 16 points
    for (const auto& r : rows) CHECK(r.size() == 17);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i][i] == "0");  // zero diagonal
        for (std::size_t j = 1; j < rows[i].size(); ++j) {
            CHECK(rows[i][j] == rows[j][i]);                       // symmetric
            CHECK(rows[i][j].find('.') == std::string::npos);      // never decimal
        }
    }
    CHECK(rows[0][1] == "0");
    CHECK(rows[0][2] == "1/16");
}

TEST_CASE("verification report carries the required fields") {
    auto rule = seeded(21, 10);
    VerifyOptions opt;
    opt.depth = 10;
    opt.mstar_lo = 3;
    opt.mstar_hi = 6;
    auto outcome = verify_lipschitz_light(rule, opt);
    auto j = verification_report_json(rule, outcome);

    for (const char* key : {"rule", "depth", "targets", "global_max_ratio", "bound", "pass",
                            "lipschitz_f0", "composite", "meta"})
        CHECK(j.contains(key));
    CHECK(j["bound"] == 129);
    CHECK(j["depth"] == 10);
    CHECK(j["meta"]["version"].get<std::string>() == kToolVersion);
    CHECK(j["meta"]["rule_hash"].get<std::string>() == rule.hash());
    REQUIRE(!j["targets"].empty());
    const auto& t0 = j["targets"][0];
    for (const char* key : {"M_star", "H", "delta", "components", "max_ratio"})
        CHECK(t0.contains(key));
    CHECK(t0["H"].size() == 2);
    // identical inputs give identical reports
    auto outcome2 = verify_lipschitz_light(rule, opt);
    auto j2 = verification_report_json(rule, outcome2);
    CHECK(j.dump() == j2.dump());
}

TEST_CASE("lemma suite has the eighteen rows and passes") {
    auto rule = seeded(33, 10);
    auto rows = lemma_suite(rule, 10);
    REQUIRE(rows.size() == 18);
    const char* expected[] = {"L:minimal",  "L:minimalchain", "E:leqn",       "E:intn",
                              "L:distconverge", "L:fold",     "L:uniform",    "L:projection",
                              "L:component_proj", "L:Vs",     "L:goal",       "L:big",
                              "L:cases",    "L:none",         "L:symm_next",  "L:not_middle",
                              "L:final",    "L:def"};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].name == expected[i]);
        INFO(rows[i].name);
        CHECK(rows[i].pass);
        CHECK(rows[i].instances > 0);
    }
    auto j = lemma_suite_json(rule, 10, rows);
    CHECK(j["rows"].size() == 18);
    CHECK(j["pass"].get<bool>());
}
