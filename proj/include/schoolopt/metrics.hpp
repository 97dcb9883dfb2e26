#pragma once

#include "schoolopt/conversation.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace schoolopt {

struct RunRecord {
    std::string agent_id;
    std::string utility_id;
    std::string comm_style;
    std::string feedback_style;
    std::string design;
    std::string mode;
    std::string model;
    Rational pi;
    bool success = false;
    int decision_turns = 0;
    int solver_calls = 0;
    Termination termination = Termination::TurnCap;

    bool errored() const noexcept { return termination == Termination::Error; }
};

/// Throws std::invalid_argument unless pi is in [0,1] and success matches pi = 1.
void validate_record(const RunRecord& r);

/// Grouping keys: design, mode, comm_style, feedback_style, model.
std::string record_field(const RunRecord& r, const std::string& key);

struct AggregateReport {
    std::string group;  // "comm_style=vague;feedback_style=rich" or "All"
    std::size_t n = 0;  // records contributing to the means
    std::size_t n_errored = 0;
    Rational avg_score;
    Rational success_rate;
    Rational avg_turns;
    Rational avg_solver_calls;
};

/// One report per distinct key combination (sorted), then an "All" row. Errored
/// records are excluded from means and counted in n_errored.
std::vector<AggregateReport> aggregate(const std::vector<RunRecord>& records, const std::vector<std::string>& keys);

enum class Metric { Score, Success, Turns, SolverCalls };
Metric parse_metric(std::string_view s);

struct PairedResult {
    Rational mean_diff;       // mean of A - B over all pairs
    std::size_t n_pairs = 0;
    std::size_t n_positive = 0;
    std::size_t n_negative = 0;
    double sign_test_p = 1.0;  // one-sided: P(at least n_positive of the non-tied pairs favor A)
};

class PairingError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Pairs records by agent id. Throws PairingError listing the symmetric difference.
PairedResult paired_comparison(const std::vector<RunRecord>& a, const std::vector<RunRecord>& b, Metric metric);

/// Upper tail P(X >= k) for X ~ Binomial(n, 1/2).
double binomial_upper_tail(std::size_t n, std::size_t k);

enum class ReportFormat { Csv, Markdown };
ReportFormat parse_report_format(std::string_view s);

/// Columns: group,n,avg_score,success_rate,avg_turns,avg_solver_calls,n_errored.
std::string emit_report(const std::vector<AggregateReport>& reports, ReportFormat format);

/// Loads records from a run directory (run.json plus transcript outcome lines).
std::vector<RunRecord> load_run_records(const std::string& dir, const SchoolData& data);

/// Builds a record from a finished transcript.
RunRecord record_from_transcript(const Transcript& t);

}  // namespace schoolopt
