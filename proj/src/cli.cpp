#include "topk/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "topk/chart.hpp"
#include "topk/datagen.hpp"
#include "topk/errors.hpp"
#include "topk/models.hpp"

namespace topk {

namespace fs = std::filesystem;

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t pos = 0;
            seeds.push_back(std::stoull(item, &pos));
            if (pos != item.size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw InvalidConfigError("--seeds expects integers, got '" + item +
                                     "'");
        }
    }
    if (seeds.empty())
        throw InvalidConfigError("--seeds expects a comma-separated list");
    return seeds;
}

void write_run_outputs(const ExperimentConfig& cfg, const GridSpec& grid,
                       const std::vector<ExperimentTrace>& traces,
                       const std::string& out_dir, bool with_table,
                       bool with_charts) {
    fs::create_directories(out_dir);
    for (const auto& trace : traces)
        write_trace_csv_file(trace, out_dir + "/" + trace_file_name(trace));
    write_config_echo(cfg, grid, out_dir + "/config.echo");
    if (with_table) {
        const ComparisonTable table = compare(traces);
        write_comparison_csv_file(table, out_dir + "/comparison.csv");
    }
    if (with_charts) {
        for (const char* metric : {"regret", "reward"}) {
            std::vector<ChartSeries> series;
            for (const auto& t : traces) {
                ChartSeries s;
                s.label = t.policy_label + "/" + t.model_label + " seed " +
                          std::to_string(t.seed);
                s.values = std::string(metric) == "regret" ? t.cum_regret
                                                           : t.cum_reward;
                series.push_back(std::move(s));
            }
            write_chart_svg_file(series,
                                 std::string("cumulative ") + metric,
                                 cfg.env.kind + ": cumulative " + metric +
                                     " vs round",
                                 out_dir + "/chart_" + metric + ".svg");
        }
    }
}

int cmd_run(const std::string& config_path, std::int64_t seed_override,
            std::int64_t retrain_override, const std::string& out_dir) {
    LoadedConfig loaded = load_config_file(config_path);
    if (seed_override >= 0) {
        loaded.config.run.seed = static_cast<std::uint64_t>(seed_override);
        loaded.grid.seeds = {loaded.config.run.seed};
    }
    if (retrain_override > 0)
        loaded.config.run.retrain_every =
            static_cast<std::size_t>(retrain_override);
    const ExperimentTrace trace = run_experiment(loaded.config);
    write_run_outputs(loaded.config, loaded.grid, {trace}, out_dir, false,
                      false);
    std::cout << trace_file_name(trace) << ": final cum_regret "
              << format_float(trace.cum_regret.back()) << ", final cum_reward "
              << format_float(trace.cum_reward.back()) << "\n";
    return 0;
}

int cmd_grid(const std::string& config_path, const std::string& seeds_csv,
             std::int64_t retrain_override, const std::string& out_dir,
             bool with_charts) {
    LoadedConfig loaded = load_config_file(config_path);
    if (!seeds_csv.empty()) loaded.grid.seeds = parse_seed_list(seeds_csv);
    if (retrain_override > 0)
        loaded.config.run.retrain_every =
            static_cast<std::size_t>(retrain_override);

    const auto traces = run_grid(loaded, true);
    write_run_outputs(loaded.config, loaded.grid, traces, out_dir, true,
                      with_charts);

    const ComparisonTable table = compare(traces);
    std::cout << "grid complete: " << traces.size() << " traces\n";
    std::cout << "ranking by final mean regret:\n";
    for (std::size_t i = 0; i < table.ranking.size(); ++i)
        std::cout << "  " << (i + 1) << ". " << table.ranking[i].first << "/"
                  << table.ranking[i].second << "\n";
    return 0;
}

int cmd_chart(const std::vector<std::string>& trace_paths,
              const std::string& metric, const std::string& out_dir) {
    std::vector<ChartSeries> series;
    for (const auto& path : trace_paths) {
        const ExperimentTrace trace = read_trace_csv_file(path);
        ChartSeries s;
        s.label = fs::path(path).stem().string();
        s.values = metric == "regret" ? trace.cum_regret : trace.cum_reward;
        series.push_back(std::move(s));
    }
    fs::create_directories(out_dir);
    const std::string out_path = out_dir + "/chart_" + metric + ".svg";
    write_chart_svg_file(series, "cumulative " + metric,
                         "cumulative " + metric + " vs round", out_path);
    std::cout << out_path << "\n";
    return 0;
}

// executable form of the fast acceptance checks
int cmd_check() {
    bool ok = true;
    auto report = [&](const std::string& name, bool pass,
                      const std::string& detail) {
        std::cout << (pass ? "PASS" : "FAIL") << " " << name << ": " << detail
                  << "\n";
        ok = ok && pass;
    };

    {
        Rng rng(11);
        LinearModel model(8, 1e-6);
        std::vector<TrainingPair> pairs;
        for (int i = 0; i < 40; ++i) {
            TrainingPair p;
            for (int j = 0; j < 8; ++j) p.x.push_back(rng.uniform(-1, 1));
            p.y = rng.uniform(-2, 2);
            pairs.push_back(std::move(p));
        }
        for (std::size_t i = 0; i < model.parameter_count(); ++i)
            model.set_parameter(i, rng.uniform(-1, 1));
        const double err = gradient_check(model, pairs, 9, 1e-5, rng);
        report("gradient-linear", err < 1e-8,
               "max relative error " + format_float(err) + " (< 1e-8)");
    }
    {
        Rng rng(12);
        MlpModel model(12, 100, 0.0, 64, rng);
        std::vector<TrainingPair> pairs;
        for (int i = 0; i < 32; ++i) {
            TrainingPair p;
            for (int j = 0; j < 12; ++j) p.x.push_back(rng.uniform(-1, 1));
            p.y = rng.uniform(-1, 1);
            pairs.push_back(std::move(p));
        }
        const double err = gradient_check(model, pairs, 50, 1e-4, rng);
        report("gradient-mlp", err < 1e-4,
               "max relative error " + format_float(err) + " (< 1e-4)");
    }
    {
        Rng rng(14);
        CnnModel model(784, 100, 0.0, 64, rng);
        std::vector<TrainingPair> pairs;
        for (int i = 0; i < 6; ++i) {
            TrainingPair p;
            for (int j = 0; j < 784; ++j) p.x.push_back(rng.uniform(0, 1));
            p.y = rng.uniform(0, 9);
            pairs.push_back(std::move(p));
        }
        const double err = gradient_check(model, pairs, 25, 1e-3, rng);
        report("gradient-cnn", err < 1e-3,
               "max relative error " + format_float(err) + " (< 1e-3)");
    }
    {
        // greedy selection must equal the exhaustive best subset
        Rng rng(14);
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
            std::sort(picks.begin(), picks.end());  // sum in index order so
            double got = 0.0;                       // the check is FP-exact
            for (std::size_t i : picks) got += scores[i];
            double best = -1e300;
            for (std::size_t mask = 0; mask < (1u << n); ++mask) {
                if (static_cast<std::size_t>(__builtin_popcountll(mask)) != K)
                    continue;
                double sum = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    if (mask & (1u << i)) sum += scores[i];
                best = std::max(best, sum);
            }
            if (got != best) ++failures;
        }
        report("topk-oracle-equivalence", failures == 0,
               std::to_string(failures) + " of 1000 instances disagreed");
    }
    {
        Rng rng(15);
        LinearModel model(20, 1.0);
        std::vector<TrainingPair> pairs;
        for (int i = 0; i < 200; ++i) {
            TrainingPair p;
            for (int j = 0; j < 20; ++j) p.x.push_back(rng.uniform(-1, 1));
            p.y = rng.uniform(-1, 1);
            pairs.push_back(std::move(p));
        }
        model.fit(pairs, 1, rng);
        const bool pass =
            model.residual_norm() <= 1e-8 * model.stats_rhs_norm();
        report("ridge-residual", pass,
               "||Aw-b|| = " + format_float(model.residual_norm()) +
                   ", 1e-8*||b|| = " +
                   format_float(1e-8 * model.stats_rhs_norm()));
    }
    return ok ? 0 : 2;
}

int cmd_synth_data(const std::string& out_dir, std::size_t mushroom_count,
                   std::size_t mnist_count) {
    fs::create_directories(out_dir);
    datagen::write_mushroom_csv(out_dir + "/agaricus-lepiota.data",
                                mushroom_count);
    datagen::write_mnist_idx(out_dir, mnist_count);
    std::cout << "wrote " << out_dir << "/agaricus-lepiota.data ("
              << mushroom_count << " records) and IDX files (" << mnist_count
              << " images)\n";
    return 0;
}

}  // namespace

std::string trace_file_name(const ExperimentTrace& trace) {
    return "trace_" + trace.policy_label + "_" + trace.model_label + "_seed" +
           std::to_string(trace.seed) + ".csv";
}

std::vector<ExperimentTrace> run_grid(const LoadedConfig& loaded,
                                      bool parallel_cells) {
    struct CellSpec {
        ExperimentConfig config;
    };
    std::vector<CellSpec> cells;
    for (const auto& policy : loaded.grid.policies)
        for (const auto& model : loaded.grid.models)
            for (std::uint64_t seed : loaded.grid.seeds) {
                ExperimentConfig cfg = loaded.config;
                cfg.policy.kind = policy;
                cfg.model.kind = model;
                cfg.run.seed = seed;
                cfg.validate();
                cells.push_back({std::move(cfg)});
            }

    // datasets parsed once, shared read-only across cells
    const DataContext data = load_data(loaded.config.env);

    std::vector<ExperimentTrace> traces(cells.size());
    std::vector<std::string> errors(cells.size());
    const bool parallel = parallel_cells && cells.size() > 1;
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(cells.size());
         ++i) {
        try {
            traces[i] = run_experiment(cells[i].config, data);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    for (const auto& err : errors)
        if (!err.empty()) throw NumericError("grid cell failed: " + err);
    return traces;
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"top-K contextual bandit simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", seeds_csv, metric = "regret";
    std::int64_t seed_override = -1, retrain_override = -1;
    bool with_charts = false;
    std::vector<std::string> trace_paths;
    std::size_t mushroom_count = 8124, mnist_count = 60000;

    auto* run = app.add_subcommand("run", "run one experiment, write a trace");
    run->add_option("--config", config_path, "config file")->required();
    run->add_option("--seed", seed_override, "seed override");
    run->add_option("--retrain-every", retrain_override,
                    "retraining cadence override");
    run->add_option("--out", out_dir, "output directory");

    auto* grid = app.add_subcommand(
        "grid", "cross policies x models x seeds, write traces and a table");
    grid->add_option("--config", config_path, "config file")->required();
    grid->add_option("--seeds", seeds_csv, "comma-separated seed list");
    grid->add_option("--retrain-every", retrain_override,
                     "retraining cadence override");
    grid->add_option("--out", out_dir, "output directory");
    grid->add_flag("--chart", with_charts, "also emit SVG charts");

    auto* chart = app.add_subcommand("chart", "render trace CSVs to SVG");
    chart->add_option("traces", trace_paths, "trace CSV files")->required();
    chart->add_option("--metric", metric, "regret or reward")
        ->check(CLI::IsMember({"regret", "reward"}));
    chart->add_option("--out", out_dir, "output directory");

    auto* check = app.add_subcommand(
        "check", "gradient and oracle-equivalence self checks");

    auto* synth = app.add_subcommand(
        "synth-data", "generate the synthetic datasets (UCI/IDX schemas)");
    synth->add_option("--out", out_dir, "output directory")->required();
    synth->add_option("--mushroom-count", mushroom_count, "record count");
    synth->add_option("--mnist-count", mnist_count, "image count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 1;
    }

    try {
        if (run->parsed())
            return cmd_run(config_path, seed_override, retrain_override,
                           out_dir);
        if (grid->parsed())
            return cmd_grid(config_path, seeds_csv, retrain_override, out_dir,
                            with_charts);
        if (chart->parsed()) return cmd_chart(trace_paths, metric, out_dir);
        if (check->parsed()) return cmd_check();
        if (synth->parsed())
            return cmd_synth_data(out_dir, mushroom_count, mnist_count);
    } catch (const InvalidConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<std::string> full;
    full.reserve(args.size() + 1);
    full.push_back("topk_bandit");
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    argv.reserve(full.size());
    for (const auto& a : full) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace topk
