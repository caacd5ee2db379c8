#include "halfkfn/report.hpp"

#include "halfkfn/error.hpp"

namespace halfkfn {

const char* to_string(Decision d) noexcept {
    return d == Decision::Drift ? "drift" : "no-drift";
}

nlohmann::json to_json(const TestReport& report) {
    nlohmann::json j;
    j["method"] = report.method;
    j["statistic"] = report.statistic;
    j["p_value"] = report.p_value;
    j["z_score"] = report.z_score ? nlohmann::json(*report.z_score) : nlohmann::json(nullptr);
    j["decision"] = to_string(report.decision);
    j["elapsed_s"] = report.elapsed_s;
    j["config"] = report.config;
    return j;
}

TestReport test_report_from_json(const nlohmann::json& j) {
    try {
        TestReport r;
        r.method = j.at("method").get<std::string>();
        r.statistic = j.at("statistic").get<double>();
        r.p_value = j.at("p_value").get<double>();
        if (!j.at("z_score").is_null()) r.z_score = j.at("z_score").get<double>();
        const auto d = j.at("decision").get<std::string>();
        if (d == "drift") r.decision = Decision::Drift;
        else if (d == "no-drift") r.decision = Decision::NoDrift;
        else throw Error(ErrorCode::Parse, "unknown decision '" + d + "'");
        r.elapsed_s = j.at("elapsed_s").get<double>();
        r.config = j.at("config");
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("malformed test report: ") + e.what());
    }
}

}  // namespace halfkfn
