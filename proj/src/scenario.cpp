#include "aoi/scenario.hpp"

#include <stdexcept>

namespace aoi {

namespace {

ExperimentScenario lognormal_unconstrained(bool truncated) {
    ExperimentScenario s;
    s.name = truncated ? "lognormal-unconstrained-truncated" : "lognormal-unconstrained";
    s.description =
        "Log-normal(mu=1, sigma=1.3) delays, no frequency constraint; online learner vs "
        "zero-wait, plug-in refits and the known-distribution optimum. Moment bounds are "
        "estimated from a 100-cycle warmup.";
    if (truncated) {
        s.description += " Delay bounded at the 99.99th percentile by resampling.";
    }
    s.base.model =
        truncated ? DelayModel::log_normal_truncated(1.0, 1.3) : DelayModel::log_normal(1.0, 1.3);
    s.base.inv_f_max = 0.0;
    s.base.cycles = 100000;
    s.base.seed = 1;
    s.base.bounds_mode = BoundsMode::estimated;
    s.base.warmup_n = 100;
    s.policies = {
        {"online", PolicySpec::parse("online")},
        {"zero_wait", PolicySpec::parse("zero_wait")},
        {"oracle", PolicySpec::parse("oracle")},
        {"plugin", PolicySpec::parse("plugin")},
    };
    auto sol = solve_constrained(s.base.model, kInf);
    s.reference = {{"oracle", sol.to_json()},
                   {"zero_wait_aoi", stationary_policy_aoi(s.base.model, 0.0)},
                   {"bounds_source", "estimated (warmup 100)"}};
    return s;
}

ExperimentScenario lognormal_constrained(bool truncated) {
    ExperimentScenario s;
    s.name = truncated ? "lognormal-constrained-truncated" : "lognormal-constrained";
    s.description =
        "Log-normal(mu=1, sigma=1.5) delays with sampling frequency capped at 1/(10 * mean "
        "delay); online learner with debt weights V=10 and V=1 vs constant-wait and the "
        "constrained optimum.";
    if (truncated) {
        s.description += " Delay bounded at the 99.99th percentile by resampling.";
    }
    s.base.model =
        truncated ? DelayModel::log_normal_truncated(1.0, 1.5) : DelayModel::log_normal(1.0, 1.5);
    double mean = s.base.model.moments().mean;
    s.base.inv_f_max = 10.0 * mean;
    s.base.cycles = 100000;
    s.base.seed = 1;
    s.base.bounds_mode = BoundsMode::estimated;
    s.base.warmup_n = 100;
    s.policies = {
        {"online-v10", PolicySpec::parse("online:v=10")},
        {"online-v1", PolicySpec::parse("online:v=1")},
        {"constant_wait", PolicySpec::parse("constant_wait")},
        {"oracle", PolicySpec::parse("oracle")},
    };
    auto sol = solve_constrained(s.base.model, 1.0 / s.base.inv_f_max);
    s.reference = {{"oracle", sol.to_json()},
                   {"f_max", 1.0 / s.base.inv_f_max},
                   {"constant_wait_aoi", constant_wait_aoi(s.base.model, 9.0 * mean)},
                   {"bounds_source", "estimated (warmup 100)"}};
    return s;
}

}  // namespace

nlohmann::json ExperimentScenario::to_json() const {
    nlohmann::json pols = nlohmann::json::array();
    for (const auto& [label, spec] : policies) {
        auto pj = spec.to_json();
        pj["label"] = label;
        pols.push_back(pj);
    }
    auto j = base.to_json();
    j.erase("policy");
    return {{"name", name},
            {"description", description},
            {"base", j},
            {"policies", pols},
            {"reference", reference}};
}

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{
        "lognormal-unconstrained",
        "lognormal-unconstrained-truncated",
        "lognormal-constrained",
        "lognormal-constrained-truncated",
    };
    return names;
}

ExperimentScenario make_scenario(const std::string& name) {
    if (name == "lognormal-unconstrained") return lognormal_unconstrained(false);
    if (name == "lognormal-unconstrained-truncated") return lognormal_unconstrained(true);
    if (name == "lognormal-constrained") return lognormal_constrained(false);
    if (name == "lognormal-constrained-truncated") return lognormal_constrained(true);
    throw std::invalid_argument("unknown scenario: " + name);
}

}  // namespace aoi
