#pragma once

#include <string>
#include <vector>

namespace cdpinn {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Quick self-consistency checks of the numerical building blocks
/// (a few seconds in total). Used by the `check` subcommand.
std::vector<CheckResult> run_checks();

} // namespace cdpinn
