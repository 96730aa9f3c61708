// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Criteria 5 and 6 run full desk-scale experiments; this is
// the long test (tens of minutes on a small machine).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "topk/cli.hpp"
#include "topk/datagen.hpp"
#include "topk/models.hpp"

using namespace topk;

namespace {

int g_failures = 0;

void criterion(int number, const std::string& name,
               const std::function<std::pair<bool, std::string>()>& body) {
    const auto start = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    try {
        std::tie(pass, detail) = body();
    } catch (const std::exception& e) {
        pass = false;
        detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("%s criterion-%d %s: %s [%.1fs]\n", pass ? "PASS" : "FAIL",
                number, name.c_str(), detail.c_str(), secs);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string data_dir() {
    const char* env = std::getenv("TOPK_BANDIT_DATA");
    return datagen::ensure_datasets(env ? env : "./topk_testdata");
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig base_config(const std::string& env_kind) {
    ExperimentConfig cfg;
    cfg.env.kind = env_kind;
    if (env_kind == "mushroom")
        cfg.env.data_path = data_dir() + "/agaricus-lepiota.data";
    else if (env_kind == "mnist")
        cfg.env.data_path = data_dir();
    cfg.env.apply_defaults();
    return cfg;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// seed-mean of final cumulative regret for one grid group
double final_mean(const std::vector<ExperimentTrace>& traces,
                  const std::string& policy, const std::string& model) {
    std::vector<double> finals;
    for (const auto& t : traces)
        if (t.policy_label == policy && t.model_label == model)
            finals.push_back(t.cum_regret.back());
    return mean_of(finals);
}

std::pair<bool, std::string> gradient_correctness() {
    // frozen instances chosen so no probe straddles a ReLU kink or pooling
    // argmax tie within the finite-difference interval; the analytic
    // gradient is then hundreds of times inside the tolerance
    Rng mlp_rng(5);
    MlpModel mlp(12, 100, 0.0, 64, mlp_rng);
    std::vector<TrainingPair> mlp_pairs(32);
    for (auto& p : mlp_pairs) {
        p.x.resize(12);
        for (auto& v : p.x) v = mlp_rng.uniform(-1, 1);
        p.y = mlp_rng.uniform(-1, 1);
    }
    const double mlp_err = gradient_check(mlp, mlp_pairs, 50, 1e-4, mlp_rng);

    Rng cnn_rng(12);
    CnnModel cnn(784, 100, 0.0, 64, cnn_rng);
    std::vector<TrainingPair> cnn_pairs(6);
    for (auto& p : cnn_pairs) {
        p.x.resize(784);
        for (auto& v : p.x) v = cnn_rng.uniform(0, 1);
        p.y = cnn_rng.uniform(0, 9);
    }
    const double cnn_err = gradient_check(cnn, cnn_pairs, 25, 1e-3, cnn_rng);

    std::ostringstream os;
    os << "mlp max rel err " << format_float(mlp_err) << " (< 1e-4), cnn "
       << format_float(cnn_err) << " (< 1e-3)";
    return {mlp_err < 1e-4 && cnn_err < 1e-3, os.str()};
}

std::pair<bool, std::string> topk_oracle_equivalence() {
    Rng rng(1002);
    std::size_t failures = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.index(7);
        const std::size_t K = 1 + rng.index(n);
        std::vector<double> scores(n);
        for (auto& s : scores) s = rng.uniform(-10, 10);
        FixedScores scorer(scores);
        const Slate slate =
            select_top_k(scorer, n, K, PolicySpec{"greedy"}, 1, rng);
        auto picks = slate.picks;
        std::sort(picks.begin(), picks.end());  // sum in index order so the
        double got = 0.0;                       // comparison is FP-exact
        for (std::size_t i : picks) got += scores[i];
        double best = -1e300;
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
            if (static_cast<std::size_t>(__builtin_popcount(mask)) != K)
                continue;
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (mask & (1u << i)) s += scores[i];
            best = std::max(best, s);
        }
        if (got != best) ++failures;
    }
    return {failures == 0,
            std::to_string(1000 - failures) + "/1000 instances exact"};
}

std::pair<bool, std::string> regret_sanity() {
    std::size_t violations = 0, runs = 0;
    for (const char* env_kind : {"synthetic", "mushroom", "mnist"}) {
        ExperimentConfig cfg = base_config(env_kind);
        cfg.model.kind = "linear";
        cfg.policy.kind = "epsilon_greedy";
        cfg.run.T = 200;
        cfg.run.retrain_every = 50;
        const DataContext data = load_data(cfg.env);
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            cfg.run.seed = seed;
            const auto trace = run_experiment(cfg, data);
            ++runs;
            double prev = 0.0;
            for (double r : trace.cum_regret) {
                if (r < prev - 1e-12) ++violations;  // regret increment < 0
                prev = r;
            }
        }
    }
    return {violations == 0, std::to_string(runs) +
                                 " runs x 200 rounds, " +
                                 std::to_string(violations) +
                                 " negative increments"};
}

std::pair<bool, std::string> synthetic_recovery() {
    ExperimentConfig cfg = base_config("synthetic");
    cfg.env.n = 20;
    cfg.env.K = 3;
    cfg.env.noise_scale = 0.1;
    cfg.env.synthetic_dim = 10;
    cfg.model.kind = "linear";
    cfg.run.T = 1000;

    std::vector<double> linear_rates, random_rates;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        cfg.run.seed = seed;
        cfg.policy.kind = "greedy";
        const auto greedy_trace = run_experiment(cfg, {});
        cfg.policy.kind = "random";
        const auto random_trace = run_experiment(cfg, {});
        linear_rates.push_back(
            (greedy_trace.cum_regret[999] - greedy_trace.cum_regret[899]) /
            100.0);
        random_rates.push_back(
            (random_trace.cum_regret[999] - random_trace.cum_regret[899]) /
            100.0);
    }
    const double lin = mean_of(linear_rates), rnd = mean_of(random_rates);
    std::ostringstream os;
    os << "final-100 regret/round: linear-greedy " << format_float(lin)
       << ", random " << format_float(rnd) << " (need < 10%)";
    return {lin < 0.1 * rnd, os.str()};
}

std::pair<bool, std::string> mushroom_ordering() {
    LoadedConfig loaded;
    loaded.config = base_config("mushroom");
    loaded.config.env.n = 30;
    loaded.config.env.K = 3;
    loaded.config.model.hidden = 100;
    loaded.config.run.T = 2000;
    loaded.config.run.retrain_every = 100;
    loaded.grid.seeds = {1, 2, 3, 4, 5};

    // the panel behind the comparison: random baseline, greedy linear and
    // neural-linear, and the three exploring policies on the network;
    // dropout stays 0 except for the Thompson cells, whose posterior is
    // Monte-Carlo dropout at 0.25
    std::vector<std::pair<std::string, std::string>> cells{
        {"random", "linear"},        {"greedy", "linear"},
        {"greedy", "neural_linear"}, {"epsilon_greedy", "mlp"},
        {"decaying_epsilon", "mlp"}, {"thompson_dropout", "mlp"}};

    std::vector<ExperimentTrace> traces;
    for (const auto& [policy, model] : cells) {
        LoadedConfig cell = loaded;
        cell.grid.policies = {policy};
        cell.grid.models = {model};
        cell.config.model.dropout = policy == "thompson_dropout" ? 0.25 : 0.0;
        auto cell_traces = run_grid(cell, true);
        traces.insert(traces.end(), cell_traces.begin(), cell_traces.end());
    }

    const double random_final = final_mean(traces, "random", "linear");
    struct Learner {
        const char* policy;
        const char* model;
    };
    const Learner learners[] = {{"greedy", "linear"},
                                {"greedy", "neural_linear"},
                                {"epsilon_greedy", "mlp"},
                                {"decaying_epsilon", "mlp"},
                                {"thompson_dropout", "mlp"}};
    bool half_ok = true;
    std::ostringstream os;
    os << "random " << format_float(random_final);
    for (const auto& l : learners) {
        const double f = final_mean(traces, l.policy, l.model);
        os << ", " << l.policy << "/" << l.model << " " << format_float(f);
        half_ok = half_ok && f < 0.5 * random_final;
    }
    const double lin = final_mean(traces, "greedy", "linear");
    const double nl = final_mean(traces, "greedy", "neural_linear");
    const double thompson = final_mean(traces, "thompson_dropout", "mlp");
    const bool order_ok = lin <= thompson && nl <= thompson;
    os << (half_ok ? "; all < 0.5x random" : "; 0.5x-random bound FAILED");
    os << (order_ok ? "; linear,neural-linear <= thompson"
                    : "; linear/neural-linear vs thompson FAILED");
    return {half_ok && order_ok, os.str()};
}

std::pair<bool, std::string> mnist_ordering() {
    LoadedConfig loaded;
    loaded.config = base_config("mnist");
    loaded.config.env.n = 10;
    loaded.config.env.K = 3;
    loaded.config.model.hidden = 100;
    loaded.config.policy.epsilon0 = 0.05;
    loaded.config.run.T = 1500;
    loaded.config.run.retrain_every = 150;
    loaded.grid.seeds = {1, 2, 3};

    LoadedConfig cnn_cfg = loaded;
    cnn_cfg.grid.policies = {"epsilon_greedy"};
    cnn_cfg.grid.models = {"cnn"};
    auto traces = run_grid(cnn_cfg, true);

    LoadedConfig lin_cfg = loaded;
    lin_cfg.grid.policies = {"greedy"};
    lin_cfg.grid.models = {"linear"};
    auto lin_traces = run_grid(lin_cfg, true);
    traces.insert(traces.end(), lin_traces.begin(), lin_traces.end());

    const double cnn_final = final_mean(traces, "epsilon_greedy", "cnn");
    const double lin_final = final_mean(traces, "greedy", "linear");
    std::ostringstream os;
    os << "final mean regret: cnn eps-greedy " << format_float(cnn_final)
       << ", linear " << format_float(lin_final);
    return {cnn_final < lin_final, os.str()};
}

std::pair<bool, std::string> noise_statistics() {
    const DataContext mushroom_data = load_data(base_config("mushroom").env);
    const DataContext mnist_data = load_data(base_config("mnist").env);
    MushroomEnv mushroom_env(mushroom_data.mushroom, 10, 2, 0.5, false);
    MnistEnv mnist_env(mnist_data.mnist, 10, 2, 2.0);

    Rng rng(1007);
    std::ostringstream os;
    bool ok = true;
    struct Setup {
        const char* name;
        Environment* env;
        double scale;
    };
    for (auto [name, env, scale] : {Setup{"mushroom", &mushroom_env, 0.5},
                                    Setup{"mnist", &mnist_env, 2.0}}) {
        const auto draw = env->draw_round(1, rng);
        const int N = 10000;
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < N; ++i) {
            const double resid =
                env->observe_reward(draw, 0, rng) - draw.true_means[0];
            sum += resid;
            sum2 += resid * resid;
        }
        const double mean = sum / N;
        const double sd = std::sqrt((sum2 / N - mean * mean) * N / (N - 1.0));
        const bool sd_ok = std::fabs(sd - scale) < 0.05 * scale;
        const bool mean_ok = std::fabs(mean) < 3.0 * scale / std::sqrt(N);
        ok = ok && sd_ok && mean_ok;
        os << name << " sd " << format_float(sd) << " (target " << scale
           << " +-5%) ";
    }
    return {ok, os.str()};
}

std::pair<bool, std::string> determinism() {
    namespace fs = std::filesystem;
    std::ofstream cfg("acceptance_det.cfg", std::ios::binary);
    cfg << "env.kind = synthetic\nenv.n = 8\nenv.K = 2\n"
           "model.kind = mlp\npolicy.kind = epsilon_greedy\n"
           "run.T = 30\nrun.retrain_every = 10\nrun.epochs_per_fit = 2\n";
    cfg.close();
    for (const char* dir : {"acc_det_a", "acc_det_b"}) {
        if (run_cli({"run", "--config", "acceptance_det.cfg", "--seed", "7",
                     "--out", dir}) != 0)
            return {false, "run subcommand failed"};
    }
    const std::string trace = "/trace_epsilon_greedy_mlp_seed7.csv";
    const bool csv_ok =
        slurp("acc_det_a" + trace) == slurp("acc_det_b" + trace) &&
        !slurp(std::string("acc_det_a") + trace).empty();

    for (const char* dir : {"acc_chart_a", "acc_chart_b"}) {
        if (run_cli({"chart", "acc_det_a" + trace, "--metric", "regret",
                     "--out", dir}) != 0)
            return {false, "chart subcommand failed"};
    }
    const bool svg_ok = slurp("acc_chart_a/chart_regret.svg") ==
                            slurp("acc_chart_b/chart_regret.svg") &&
                        !slurp("acc_chart_a/chart_regret.svg").empty();
    return {csv_ok && svg_ok,
            std::string("trace bytes ") + (csv_ok ? "identical" : "DIFFER") +
                ", svg bytes " + (svg_ok ? "identical" : "DIFFER")};
}

std::pair<bool, std::string> ingestion() {
    const auto pool = parse_mushroom_csv(data_dir() + "/agaricus-lepiota.data");
    const bool mushroom_ok = pool.records.size() == 8124;

    const auto mnist = parse_idx(data_dir() + "/train-images-idx3-ubyte",
                                 data_dir() + "/train-labels-idx1-ubyte");
    bool pixels_ok = mnist.count == 60000;
    for (std::size_t i = 0; i < mnist.count && pixels_ok; i += 997) {
        for (double p : mnist.image(i))
            if (p < 0.0 || p > 1.0) {
                pixels_ok = false;
                break;
            }
    }
    std::ostringstream os;
    os << pool.records.size() << " mushroom records (expect 8124); "
       << mnist.count << " images, pixels in [0,1]";
    return {mushroom_ok && pixels_ok, os.str()};
}

}  // namespace

int main() {
    std::printf("acceptance suite; datasets under %s\n", data_dir().c_str());
    criterion(1, "gradient-correctness", gradient_correctness);
    criterion(2, "topk-oracle-equivalence", topk_oracle_equivalence);
    criterion(3, "regret-sanity", regret_sanity);
    criterion(4, "synthetic-recovery", synthetic_recovery);
    criterion(5, "mushroom-qualitative-ordering", mushroom_ordering);
    criterion(6, "mnist-qualitative-ordering", mnist_ordering);
    criterion(7, "noise-statistics", noise_statistics);
    criterion(8, "determinism", determinism);
    criterion(9, "ingestion", ingestion);
    if (g_failures == 0) {
        std::printf("all 9 criteria passed\n");
        return 0;
    }
    std::printf("%d criteria FAILED\n", g_failures);
    return 1;
}
