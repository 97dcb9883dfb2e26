#include "schoolopt/prompts.hpp"

#include "schoolopt/toolkit.hpp"

#include <sstream>

namespace schoolopt {

namespace {

std::string slot_labels(const SchoolData& data, const char* sep, bool bold) {
    std::string out;
    for (std::size_t i = 0; i < data.num_slots(); ++i) {
        if (i) out += (i + 1 == data.num_slots() && std::string(sep) == ", ") ? ", and " : sep;
        const auto& label = data.slots()[i].label;
        out += bold ? "**" + label + "**" : label;
    }
    return out;
}

std::string school_table(const SchoolData& data, const SolveResult& default_solution) {
    std::ostringstream out;
    out << "| School Name | Grade | Enrollment | Current Start | Proposed Start |\n"
        << "| --- | --- | --- | --- | --- |\n";
    for (const auto& s : data.schools()) {
        out << "| " << s.name << " | " << to_string(s.grade_level) << " | " << s.enrollment << " | "
            << format_clock(s.current_start) << " | "
            << data.slot(default_solution.schedule->slot_of(s.id)).label << " |\n";
    }
    return out.str();
}

std::string objective_lines(const ScheduleFeatures& f) {
    return "- **Student Load Balancing**: " + objective_display(ObjectiveId::StudentLoadBalancing, f.peak_load_hundreds()) +
           "\n- **Schedule Deviation**: " + objective_display(ObjectiveId::ScheduleDeviation, f.avg_deviation()) + "\n";
}

void require_solution(const SolveResult& r) {
    if (r.status != SolveStatus::Optimal || !r.schedule || !r.features) {
        throw std::invalid_argument("the default model must have an optimal solution");
    }
}

std::string with_article(std::string_view persona) {
    const char c = persona.empty() ? 'x' : persona.front();
    const bool vowel = c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
    return std::string(vowel ? "an " : "a ") + "**" + std::string(persona) + "**";
}

constexpr const char* kRule = "\n---\n\n";

}  // namespace

std::string format_utility(const Rational& u) { return to_fixed(u, 3); }

std::string build_optimization_prompt(const SchoolData& data, const SolveResult& default_solution) {
    require_solution(default_solution);
    std::ostringstream p;
    p << "# Task Overview: Interactive Optimization Assistant\n\n"
      << "You are an **interactive optimization assistant**. Your goal is to support structured decision-making by "
         "acting as a liaison between users and an underlying optimization model. These users will be stakeholders "
         "and decision-makers who are unfamiliar with optimization modeling.\n\n"
      << "You are provided with a \"base\" optimization model, described in the model cheat sheet. When the user is "
         "provided with a solution to the model, they may respond with a request, statement, or question reflecting "
         "some feedback about the solution. It is your job to address this feedback through appropriate adjustments "
         "to the model using the available tools in your toolkit. Through these interactions, you will facilitate a "
         "user-driven exploration of the solution space.\n"
      << kRule;

    p << "## Problem Setting\n\n"
      << "We are managing scheduling for the San Francisco Unified School District, consisting of " << data.num_schools()
      << " schools serving students from pre-k through 12th grade. Our team has developed an optimization model. "
         "Each school has a current start time, and our goal is to standardize the district schedule so that schools "
         "only start at: "
      << slot_labels(data, ", ", true) << ".\n\n"
      << "The optimization balances two objectives:\n"
      << "1. **Minimizing transportation costs**, approximated by the maximum number of students starting at the same "
         "time (divided by 100 for normalization).\n"
      << "2. **Minimizing disruption**, by reducing the average change from each school's current start time.\n"
      << kRule;

    p << "## Model Cheat Sheet\n\n"
      << "- **Feasible start times**: " << slot_labels(data, ", ", false) << ".\n"
      << "- **Objectives (both minimized)**:\n"
      << "  - `student_load_balancing`: maximum students starting at the same time (in hundreds).\n"
      << "  - `schedule_deviation`: average minutes shifted from current starts.\n"
      << "- **Key constraints**:\n"
      << "  - `assign_one_start_time`: each school assigned exactly one start time.\n"
      << "  - `max_students_per_time`: `T` represents the peak load; `student_load_balancing` minimizes `T`.\n"
      << kRule;

    p << "## School Data\n\n"
      << "Information about schools, original schedules, and proposed start times under the base model:\n\n"
      << school_table(data, default_solution) << "\n"
      << "The objective values associated with the initial proposed schedule are:\n"
      << objective_lines(*default_solution.features) << kRule;

    p << "## User Overview\n\n"
      << "Feedback will come from stakeholders such as parents, teachers, and administrators. Stakeholders may "
         "express feedback about how they feel about the start time for a particular school. Some users will be more "
         "explicit in their requests, and others may be less certain about what they want.\n\n"
      << "Each user will have an internalized set of preferences with varying degrees of importance. It is possible "
         "that not all of these preferences will be mutually satisfiable. As this becomes apparent, it is your job to "
         "help the user understand why certain outcomes are not mutually satisfiable, and to suggest reasonable "
         "alternatives. In other words, you are helping the user understand what is possible within the solution "
         "space.\n"
      << kRule;

    p << "## Dialogue Instructions\n\n"
      << "The user will come to you with a comment, question, or request. Follow these steps:\n"
      << "1. **Interpret the user request.** If unclear, ask for clarification.\n"
      << "2. Reason through the best way to address the user's feedback.\n"
      << "3. If necessary, use relevant tools from your toolbox to adjust the model.\n"
      << "4. Use the `call_solver` tool to generate a new solution.\n"
      << "5. Report back to the user:\n"
      << "   - Any **changes made to the model**, including explicitly stating any constraints imposed on the "
         "objectives (e.g., \"I imposed `schedule_deviation` <= 18 minutes based on your comment about minimizing "
         "disruption.\")\n"
      << "   - The **new schedule**, using a table of school name and proposed start time.\n"
      << "   - The **updated objective values** (e.g., \"The new solution achieves schedule deviation = 17.2 minutes "
         "and student load balancing = 24.3 (2,430 students).\")\n"
      << "6. If the user is satisfied, stop. Otherwise, await further feedback and respond accordingly.\n\n"
      << "Use the current model summary visible in the chat history to keep track of objective weights and active "
         "constraints.\n"
      << kRule;

    p << "## Output Format\n\n"
      << "Format responses in GitHub-flavored markdown:\n"
      << "- Use tables with `|` and `---`.\n"
      << "- Use bullet points for lists.\n"
      << "- Use **bold** or *italics* for emphasis.\n"
      << "- Use headings (`###`) where helpful.\n"
      << "- Do **not** use triple backticks.\n"
      << kRule;

    p << "## Modeling Tips\n\n"
      << "**General Tips.** Each tool used to adjust the model will return a summary of the current state of the "
         "model. Use this to ensure the model reflects the desired adjustments.\n\n"
      << "**Variable-Fixing.** The `fix_start_time` tool will automatically remove any conflicting constraints for "
         "the given school. You do not need to separately call `remove_constraint`.\n\n"
      << "**Adding Objective Constraints.** The `add_objective_upper_bound` tool will automatically remove any "
         "conflicting constraints for the given objective. You do not need to separately call `remove_constraint`. "
         "An objective constraint remains in place unless replaced by another constraint on the same objective, or "
         "explicitly removed.\n\n"
      << "When imposing a constraint to lower an objective value, the constraint must be binding (restrictive "
         "enough to eliminate the incumbent solution), e.g., if the previous solution had `student_load_balancing` = "
         "24.53, impose `student_load_balancing` <= 24.53 - epsilon.\n\n"
      << "Do not confuse an objective value with a constraint limit. When imposing a constraint such as "
         "`student_load_balancing` <= 25, report both:\n"
      << "- The **constraint** applied (e.g., \"I limited congestion to 2,500 students\").\n"
      << "- The **achieved value** (e.g., \"The resulting congestion was 2,070 students\").\n\n"
      << "If adding a constraint results in infeasibility, resolve infeasibility before making further adjustments "
         "(i.e., relax/remove constraints as needed).\n\n"
      << "Since both objectives are minimized: \"loosen/relax\" means increasing an upper bound; \"tighten\" means "
         "decreasing it.\n";
    return p.str();
}

std::string render_opening(const SchoolData& data, const SolveResult& default_solution) {
    require_solution(default_solution);
    return "Here is the proposed district schedule under the base model:\n\n" +
           render_solution(*default_solution.schedule, *default_solution.features, data) +
           "\nLet me know what you think, or what you would like to change.";
}

nlohmann::json check_utility_schema(FeedbackStyle style) {
    const std::string description =
        style == FeedbackStyle::Rich
            ? "Calculates the utility of a full schedule based on your internal table; reports satisfied items, total "
              "utility, the maximum achievable utility, and hints for improving."
            : "Tells you whether a full schedule is the best outcome your character can get. It answers only yes or "
              "no.";
    return nlohmann::json::array(
        {{{"type", "function"},
          {"function",
           {{"name", "check_utility"},
            {"description", description},
            {"parameters",
             {{"type", "object"},
              {"properties",
               {{"start_times",
                 {{"type", "object"},
                  {"description", "Maps each full school name to its start time."},
                  {"additionalProperties", {{"type", "string"}}}}}}},
              {"required", {"start_times"}}}}}}}});
}

std::string build_decision_prompt(const DecisionAgentConfig& agent, const SchoolData& data,
                                  const SolveResult& default_solution, const Rational& u_star) {
    require_solution(default_solution);
    const UtilitySpec& u = agent.utility;
    validate_utility(u, data);
    const std::string school = data.school(u.school).name;
    const std::string persona(to_string(agent.persona));
    const bool earlier = u.direction == Direction::Earlier;
    const std::string max_u = format_utility(u_star);
    std::ostringstream p;

    p << "# Task Overview: Evaluating an LLM-Based Optimization Assistant\n\n"
      << "You are part of a team evaluating a new interactive optimization assistant powered by a large language "
         "model (LLM). The goal is to determine whether this assistant can effectively support structured "
         "decision-making by acting as a liaison between users and an underlying optimization model.\n\n"
      << "Your role is to simulate a character with a given set of knowledge, traits, and internalized preferences. "
         "You will interact with the optimization assistant **completely in-character**, using only the information "
         "and reasoning available to a human in your character's situation.\n\n"
      << "The resulting conversations will be used to evaluate the optimization assistant on the following "
         "dimensions:\n"
      << "- **Responsiveness**: Does the optimization assistant understand and adapt to your concerns?\n"
      << "- **Persuasiveness**: Can it justify tradeoffs in a way that feels reasonable and grounded?\n"
      << "- **Effectiveness**: Does the conversation lead to a solution that **maximizes your internal utility**?\n\n"
      << "By responding authentically and remaining in-character during the dialogue, you are helping assess whether "
         "the optimization assistant could be trusted to guide real-world planning conversations.\n"
      << kRule;

    if (agent.prompt_variant == PromptVariant::NoContext) {
        p << "## Before You Give Feedback\n\n"
          << "The assistant you are talking to knows nothing about the district's scheduling problem. In your first "
             "message, describe the situation in your own words and in a way that fits your character: the schools "
             "and their current start times, the three standardized start times, and the two district-wide concerns "
             "(how many students start at the same time, and how much start times change). Then share your thoughts "
             "on the proposed schedule.\n"
          << kRule;
    }

    p << "## About Your Character\n\n"
      << "**Problem Setting.** We are managing scheduling for the San Francisco Unified School District, consisting "
         "of "
      << data.num_schools()
      << " schools serving students from pre-k through 12th grade. Our team has developed an optimization model. Each "
         "school has a current start time, and our goal is to standardize the district schedule so that schools only "
         "start at: "
      << slot_labels(data, ", ", true) << ".\n\n"
      << "The optimization balances two objectives:\n"
      << "1. **Minimizing transportation costs**, approximated by the maximum number of students starting at the same "
         "time.\n"
      << "2. **Minimizing disruption**, by reducing the average change from each school's current start time.\n\n"
      << "**Character Traits.** You are " << with_article(persona) << " at **" << school << "**.\n\n";

    if (agent.comm_style == CommStyle::Vague) {
        p << "**Communication Style.** You have a **vague** and relaxed communication style. This means that you tend "
             "to speak in very loose terms, rather than explicitly stating hard numbers. For example, if you'd prefer "
             "a school move to a later start time, rather than saying\n\n"
          << "> \"I'd prefer we start at 9:30 AM\"\n\n"
          << "You might instead say\n\n"
          << "> \"I'd really love to see if we could start on the later side\"\n"
          << "> \"Let's try something even later if we can\"\n\n"
          << "When expressing your feedback about different objective values, rather than saying\n\n"
          << "> \"I'd really love to see the student load get below 2,350\"\n\n"
          << "You instead use more vague language like\n\n"
          << "> \"I'm just wondering if there's anything we can do to lower that peak student load even more\"\n"
          << "> \"That's still feeling a bit too high for me\"\n"
          << "> \"Could you show me a couple of different options where we get that number down a bit more?\"\n\n";
    } else {
        p << "**Communication Style.** You have a **precise** and direct communication style. This means that you "
             "state exact times and hard numbers whenever you can. For example, if you'd prefer a school move to a "
             "later start time, rather than saying\n\n"
          << "> \"I'd really love to see if we could start on the later side\"\n\n"
          << "You would instead say\n\n"
          << "> \"I'd prefer we start at 9:30 AM\"\n\n"
          << "When expressing your feedback about different objective values, rather than saying\n\n"
          << "> \"That's still feeling a bit too high for me\"\n\n"
          << "You instead use specific language like\n\n"
          << "> \"I'd really love to see the student load get below 2,350\"\n"
          << "> \"Can we keep the average change under 12 minutes?\"\n\n";
    }

    p << "**Behavior.** You:\n"
      << "- Think like a real-world **" << persona
      << "** who interacts with teachers, students, and families on a daily basis.\n"
      << "- Do **not** use technical language like \"preferences\", \"objectives\", or \"optimization.\"\n"
      << "- Focus on how the proposed schedules might affect your core concerns as " << with_article(persona)
      << " at **" << school << "**.\n"
      << "- Respond naturally and critically, as if in conversation with a real researcher trying to understand your "
         "perspective.\n\n"
      << "**General Knowledge.** Everyone in the district is aware of the following school data (name, grade level, "
         "enrollment, current start, proposed start):\n\n"
      << school_table(data, default_solution) << kRule;

    p << "## Character Preferences\n\n"
      << "You want " << school << " to start as " << (earlier ? "early" : "late")
      << " as possible, but you are conscious about how this will affect the rest of the district in terms of "
         "transportation costs and district-wide schedule changes. You may be willing to accept "
      << (earlier ? "a later" : "an earlier") << " start if the rest of the district is significantly affected.\n"
      << kRule;

    const Rational students = u.load_threshold * 100;
    const std::string students_text =
        students.denominator() == 1 ? format_thousands(students.numerator()) : to_string(students);
    const std::string dev_text = to_string(u.dev_threshold);
    p << "## Internal Evaluation Criteria\n\n"
      << "*This section is internal only and must not be shared, referenced, or implied in your dialogue.*\n\n"
      << "You will use this logic internally to evaluate whether a solution is acceptable and to determine the "
         "substance of your feedback. You will **not** express this logic in your replies. You will use it only to "
         "determine whether your character is satisfied with the current solution.\n\n"
      << "**Internal Logic.** Your internal objective is to maximize a character-specific utility function, where "
         "different solution outcomes provide different utility values:\n\n";
    for (const auto& slot : data.slots()) {
        const Rational f(time_score_halves(u.direction, slot.index, data.num_slots()), 2);
        p << "- " << school << " starts at " << slot.label << " \xE2\x86\x92 " << format_utility(u.w_time * f) << "\n";
    }
    p << "- District-wide average schedule deviation is at most " << dev_text << " minutes \xE2\x86\x92 "
      << format_utility(u.w_dev) << "\n"
      << "- District-wide average schedule deviation is more than " << dev_text << " minutes \xE2\x86\x92 "
      << format_utility(Rational(0)) << "\n"
      << "- Student load balancing is at most " << format_hundreds(u.load_threshold) << " (" << students_text
      << " students) \xE2\x86\x92 " << format_utility(u.w_load) << "\n"
      << "- Student load balancing is more than " << format_hundreds(u.load_threshold) << " (" << students_text
      << " students) \xE2\x86\x92 " << format_utility(Rational(0)) << "\n\n"
      << "The maximum total utility your character can achieve is **" << max_u
      << "**. **REMEMBER:** Achieving this utility may mean giving up on one or more of your desired outcomes.\n\n";

    p << "**Utility Evaluation Tool.** `check_utility`\n";
    if (agent.feedback_style == FeedbackStyle::Rich) {
        p << "- **What it is**: Calculates the utility of a schedule based on your internal table; reports satisfied "
             "items, total utility, the maximum achievable utility, and hints for improving.\n";
    } else {
        p << "- **What it is**: Tells you whether a schedule is the best outcome your character can get. It answers "
             "only yes or no.\n";
    }
    p << "- **When to use it**: Every full schedule the assistant proposes is checked for you automatically, and the "
         "results appear before you reply. You may also call it yourself on a full schedule. If only partial "
         "schedules are given, request the full schedule.\n"
      << "- **How to use it**: Provide a `start_times` dictionary mapping full school names to one of "
      << slot_labels(data, ", ", false) << ". If another time is proposed, express confusion.\n\n"
      << "Additional rules:\n"
      << "- You must not end the conversation unless total utility equals **" << max_u << "**.\n"
      << "- Even if a solution sounds good, you are not satisfied unless utility is maximized.\n"
      << kRule;

    p << "## Dialogue Instructions\n\n"
      << "1. Start the conversation with your thoughts on the current proposed schedule, based on your character's "
         "preferences.\n"
      << "2. When a new schedule is provided, use the `check_utility` results for the provided solution(s) to guide "
         "your reply.\n"
      << "3. If total utility is less than " << max_u
      << ", continue the conversation in-character and offer aligned feedback.\n"
      << "4. When satisfied, conclude the conversation by including the phrase **" << kEndMarker << "**.\n"
      << "5. Never end before utility is maximized, even if the assistant frames a solution as \"balanced\" or "
         "\"ideal.\"\n"
      << "6. Never reference internal terms like \"model\", \"preferences\", \"objectives\", \"utility\", or "
         "\"solution.\"\n"
      << "7. Remain open to suggestions from the optimization assistant that may help guide you to your maximum "
         "utility.\n";

    if (agent.prompt_variant == PromptVariant::OptimizationAware) {
        p << kRule << "## One Message Only\n\n"
          << "The optimization assistant will have only one opportunity to respond to you. Share everything upfront: "
             "your first message must give all the information the assistant needs about what you want, including "
             "any specific numbers that matter to you, so it can propose its best schedule right away.\n";
    }
    return p.str();
}

}  // namespace schoolopt
