#pragma once

#include "snowcircle/rule.hpp"
#include "snowcircle/verify.hpp"

#include <nlohmann/json_fwd.hpp>

#include <string>

namespace snowcircle {

inline constexpr const char* kToolVersion = "0.1.0";

/// The verification report document; every field is exact rational text.
nlohmann::json verification_report_json(const DiameterRule& rule, const VerificationOutcome& out);

/// Per-lemma pass/fail table over a single rule (the lemma suite).
struct LemmaRow {
    std::string name;
    unsigned instances = 0;
    bool pass = true;
    std::string worst_margin;  // exact rational, empty when not meaningful
};

std::vector<LemmaRow> lemma_suite(const DiameterRule& rule, unsigned depth);

nlohmann::json lemma_suite_json(const DiameterRule& rule, unsigned depth,
                                const std::vector<LemmaRow>& rows);

}  // namespace snowcircle
