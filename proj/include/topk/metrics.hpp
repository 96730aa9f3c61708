#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "topk/bandit.hpp"

namespace topk {

// Folds a round sequence into cumulative reward/regret series (the trace
// fingerprints are left to the caller).
ExperimentTrace accumulate(const std::vector<RoundRecord>& records);

struct ComparisonRow {
    std::string policy;
    std::string model;
    std::size_t checkpoint = 0;  // round index
    double mean_regret = 0.0;
    double sd_regret = 0.0;
    double mean_reward = 0.0;
    double sd_reward = 0.0;
};

// Mean/s.d. of cumulative regret and reward at rounds {T/4, T/2, T} for each
// (policy, model) group, plus the groups ranked by final mean regret.
struct ComparisonTable {
    std::vector<ComparisonRow> rows;
    // (policy, model) pairs ordered best (lowest final mean regret) first
    std::vector<std::pair<std::string, std::string>> ranking;
};

ComparisonTable compare(const std::vector<ExperimentTrace>& traces);

// Trace CSV: header `round,cum_reward,cum_regret,explored_count`, one row
// per round, floats with 9 significant digits.
void write_trace_csv(const ExperimentTrace& trace, std::ostream& out);
void write_trace_csv_file(const ExperimentTrace& trace,
                          const std::string& path);
ExperimentTrace read_trace_csv_file(const std::string& path);

// Comparison CSV: policy,model,checkpoint,mean_regret,sd_regret,mean_reward,
// sd_reward; rows ordered by checkpoint then by final ranking.
void write_comparison_csv(const ComparisonTable& table, std::ostream& out);
void write_comparison_csv_file(const ComparisonTable& table,
                               const std::string& path);

// 9-significant-digit float formatting shared by every CSV writer.
std::string format_float(double v);

}  // namespace topk
