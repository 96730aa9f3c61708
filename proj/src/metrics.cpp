#include "topk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "topk/errors.hpp"

namespace topk {

std::string format_float(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

ExperimentTrace accumulate(const std::vector<RoundRecord>& records) {
    if (records.empty())
        throw InvalidConfigError("accumulate requires at least one round");
    ExperimentTrace trace;
    trace.cum_reward.reserve(records.size());
    trace.cum_regret.reserve(records.size());
    trace.explored.reserve(records.size());
    double reward = 0.0, regret = 0.0;
    for (const auto& r : records) {
        for (double obs : r.observed_rewards) reward += obs;
        regret += r.regret();
        trace.cum_reward.push_back(reward);
        trace.cum_regret.push_back(regret);
        trace.explored.push_back(r.slate.explored_count());
    }
    return trace;
}

namespace {

struct Cell {
    std::vector<const ExperimentTrace*> traces;
};

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

ComparisonTable compare(const std::vector<ExperimentTrace>& traces) {
    if (traces.empty())
        throw InvalidConfigError("compare requires at least one trace");
    const std::string& env_fp = traces.front().env_fingerprint;
    const std::size_t T = traces.front().cum_regret.size();
    for (const auto& t : traces) {
        if (t.env_fingerprint != env_fp)
            throw IncompatibleTracesError(
                "traces were produced under different environments: '" +
                env_fp + "' vs '" + t.env_fingerprint + "'");
        if (t.cum_regret.size() != T)
            throw IncompatibleTracesError(
                "traces have different horizons: " + std::to_string(T) +
                " vs " + std::to_string(t.cum_regret.size()));
    }

    std::map<std::pair<std::string, std::string>, Cell> groups;
    for (const auto& t : traces)
        groups[{t.policy_label, t.model_label}].traces.push_back(&t);

    const std::size_t checkpoints[3] = {std::max<std::size_t>(T / 4, 1),
                                        std::max<std::size_t>(T / 2, 1), T};

    struct GroupStat {
        std::pair<std::string, std::string> key;
        double final_mean_regret = 0.0;
        std::vector<ComparisonRow> rows;
    };
    std::vector<GroupStat> stats;
    for (const auto& [key, cell] : groups) {
        GroupStat g;
        g.key = key;
        for (std::size_t cp : checkpoints) {
            std::vector<double> regrets, rewards;
            for (const ExperimentTrace* t : cell.traces) {
                regrets.push_back(t->cum_regret[cp - 1]);
                rewards.push_back(t->cum_reward[cp - 1]);
            }
            ComparisonRow row;
            row.policy = key.first;
            row.model = key.second;
            row.checkpoint = cp;
            row.mean_regret = mean_of(regrets);
            row.sd_regret = sd_of(regrets, row.mean_regret);
            row.mean_reward = mean_of(rewards);
            row.sd_reward = sd_of(rewards, row.mean_reward);
            g.rows.push_back(row);
        }
        g.final_mean_regret = g.rows.back().mean_regret;
        stats.push_back(std::move(g));
    }

    std::sort(stats.begin(), stats.end(),
              [](const GroupStat& a, const GroupStat& b) {
                  if (a.final_mean_regret != b.final_mean_regret)
                      return a.final_mean_regret < b.final_mean_regret;
                  return a.key < b.key;
              });

    ComparisonTable table;
    for (std::size_t c = 0; c < 3; ++c)
        for (const auto& g : stats) table.rows.push_back(g.rows[c]);
    for (const auto& g : stats) table.ranking.push_back(g.key);
    return table;
}

void write_trace_csv(const ExperimentTrace& trace, std::ostream& out) {
    out << "round,cum_reward,cum_regret,explored_count\n";
    for (std::size_t t = 0; t < trace.cum_reward.size(); ++t) {
        out << (t + 1) << ',' << format_float(trace.cum_reward[t]) << ','
            << format_float(trace.cum_regret[t]) << ',' << trace.explored[t]
            << '\n';
    }
}

void write_trace_csv_file(const ExperimentTrace& trace,
                          const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary: fixed newlines
    if (!out) throw ParseError("cannot write trace file " + path);
    write_trace_csv(trace, out);
}

ExperimentTrace read_trace_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open trace file " + path);
    std::string line;
    if (!std::getline(in, line) ||
        line != "round,cum_reward,cum_regret,explored_count")
        throw ParseError("bad trace header in " + path);
    ExperimentTrace trace;
    std::size_t expected_round = 1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 4)
            throw ParseError("bad trace row in " + path + ": " + line);
        try {
            if (std::stoull(fields[0]) != expected_round)
                throw ParseError("non-contiguous rounds in " + path);
            trace.cum_reward.push_back(std::stod(fields[1]));
            trace.cum_regret.push_back(std::stod(fields[2]));
            trace.explored.push_back(std::stoull(fields[3]));
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception&) {
            throw ParseError("bad trace row in " + path + ": " + line);
        }
        ++expected_round;
    }
    if (trace.cum_reward.empty())
        throw ParseError("trace file " + path + " has no rows");
    return trace;
}

void write_comparison_csv(const ComparisonTable& table, std::ostream& out) {
    out << "policy,model,checkpoint,mean_regret,sd_regret,mean_reward,"
           "sd_reward\n";
    for (const auto& r : table.rows) {
        out << r.policy << ',' << r.model << ',' << r.checkpoint << ','
            << format_float(r.mean_regret) << ',' << format_float(r.sd_regret)
            << ',' << format_float(r.mean_reward) << ','
            << format_float(r.sd_reward) << '\n';
    }
}

void write_comparison_csv_file(const ComparisonTable& table,
                               const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write comparison file " + path);
    write_comparison_csv(table, out);
}

}  // namespace topk
