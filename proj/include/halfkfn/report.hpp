#pragma once

#include <json.hpp>

#include <optional>
#include <string>

namespace halfkfn {

enum class Decision { NoDrift, Drift };

const char* to_string(Decision d) noexcept;

/// Outcome of one detection run.
struct TestReport {
    std::string method;
    double statistic = 0.0;
    double p_value = 1.0;
    std::optional<double> z_score;
    Decision decision = Decision::NoDrift;
    double elapsed_s = 0.0;
    nlohmann::json config = nlohmann::json::object();

    bool drift() const noexcept { return decision == Decision::Drift; }
};

/// Object with fields method, statistic, p_value, z_score (null when absent),
/// decision ("drift" / "no-drift"), elapsed_s, config.
nlohmann::json to_json(const TestReport& report);
TestReport test_report_from_json(const nlohmann::json& j);

}  // namespace halfkfn
