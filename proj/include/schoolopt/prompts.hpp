#pragma once

#include "schoolopt/dataset.hpp"
#include "schoolopt/model.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace schoolopt {

/// Marker a decision agent includes to end the conversation.
inline constexpr std::string_view kEndMarker = "__END__";

/// Task overview, problem setting with the live default schedule, dialogue
/// instructions and tool-usage tips for the tool-based optimization agent.
std::string build_optimization_prompt(const SchoolData& data, const SolveResult& default_solution);

/// The harness-authored opening message presenting the default schedule.
std::string render_opening(const SchoolData& data, const SolveResult& default_solution);

/// Role-play prompt for a decision agent; `u_star` comes from the utility oracle.
std::string build_decision_prompt(const DecisionAgentConfig& agent, const SchoolData& data,
                                  const SolveResult& default_solution, const Rational& u_star);

/// Tool descriptor for the decision agent's check_utility, worded per feedback style.
nlohmann::json check_utility_schema(FeedbackStyle style);

/// "0.252"
std::string format_utility(const Rational& u);

}  // namespace schoolopt
