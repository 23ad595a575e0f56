#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace aoi {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

/// Run the release checks (closed-form oracle values, learner convergence
/// and error envelopes, frequency-constraint satisfaction, accounting
/// identities). Deterministic: every check uses fixed seeds. filter keeps
/// only criteria whose name contains it.
std::vector<CriterionResult> run_acceptance(const std::string& filter = "", unsigned workers = 0);

void print_acceptance(const std::vector<CriterionResult>& results, std::ostream& out);

bool all_passed(const std::vector<CriterionResult>& results);

}  // namespace aoi
