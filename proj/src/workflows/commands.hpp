#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace rshallu::workflows {

struct CommandResult {
    nlohmann::json summary = nlohmann::json::object();
    std::vector<std::string> warnings;
};

// Runs one subcommand from a JSON config. Every run writes a stamp
// (<primary output>.stamp.json) holding the command, config and tool
// version. Throws rshallu::Error subclasses; the kind is the exit code.
//
// Commands: eval-run, answer, score, report, compare-checkers, correct-sim,
// datagen-generate, datagen-filter, datagen-compose, split, sample-audit,
// validate.
CommandResult run_command(std::string_view command, const nlohmann::json& config);

std::vector<std::string> command_names();

} // namespace rshallu::workflows
