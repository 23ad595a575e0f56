#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aoi/simulator.hpp"

namespace aoi {

/// A canned experiment: one delay model with a frequency setting, compared
/// across a list of policies, with oracle reference values where they are
/// computable from the model alone.
struct ExperimentScenario {
    std::string name;
    std::string description;
    RunConfig base;  // model, f_max, cycles, seed, bounds mode
    std::vector<std::pair<std::string, PolicySpec>> policies;  // label -> spec
    nlohmann::json reference;

    nlohmann::json to_json() const;
};

const std::vector<std::string>& scenario_names();

/// Throws std::invalid_argument for unknown names.
ExperimentScenario make_scenario(const std::string& name);

}  // namespace aoi
