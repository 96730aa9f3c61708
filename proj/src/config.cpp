#include "topk/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "topk/errors.hpp"

namespace topk {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        if (value.empty() || value[0] == '-') throw std::invalid_argument("");
        const std::uint64_t v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw InvalidConfigError("config key '" + key + "' expects a " +
                                 "non-negative integer, got '" + value + "'");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw InvalidConfigError("config key '" + key +
                                 "' expects a real number, got '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw InvalidConfigError("config key '" + key +
                             "' expects true or false, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

std::string format_double_exact(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

LoadedConfig parse_config_text(const std::string& text,
                               const std::string& origin) {
    LoadedConfig loaded;
    ExperimentConfig& cfg = loaded.config;
    GridSpec& grid = loaded.grid;

    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw InvalidConfigError(origin + ":" + std::to_string(line_no) +
                                     ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));

        if (key == "env.kind") cfg.env.kind = value;
        else if (key == "env.n") cfg.env.n = parse_u64(key, value);
        else if (key == "env.K") cfg.env.K = parse_u64(key, value);
        else if (key == "env.noise_scale")
            cfg.env.noise_scale = parse_double(key, value);
        else if (key == "env.data_path") cfg.env.data_path = value;
        else if (key == "env.exact_balance")
            cfg.env.exact_balance = parse_bool(key, value);
        else if (key == "env.d") cfg.env.synthetic_dim = parse_u64(key, value);
        else if (key == "model.kind") cfg.model.kind = value;
        else if (key == "model.hidden") cfg.model.hidden = parse_u64(key, value);
        else if (key == "model.dropout")
            cfg.model.dropout = parse_double(key, value);
        else if (key == "model.batch_size")
            cfg.model.batch_size = parse_u64(key, value);
        else if (key == "model.ridge_lambda")
            cfg.model.ridge_lambda = parse_double(key, value);
        else if (key == "policy.kind") cfg.policy.kind = value;
        else if (key == "policy.epsilon0")
            cfg.policy.epsilon0 = parse_double(key, value);
        else if (key == "policy.decay_scale")
            cfg.policy.decay_scale = parse_double(key, value);
        else if (key == "policy.posterior_samples")
            cfg.policy.posterior_samples = parse_u64(key, value);
        else if (key == "run.T") cfg.run.T = parse_u64(key, value);
        else if (key == "run.seed") cfg.run.seed = parse_u64(key, value);
        else if (key == "run.retrain_every")
            cfg.run.retrain_every = parse_u64(key, value);
        else if (key == "run.epochs_per_fit")
            cfg.run.epochs_per_fit = static_cast<int>(parse_u64(key, value));
        else if (key == "run.seeds") {
            grid.seeds.clear();
            for (const auto& s : split_list(value))
                grid.seeds.push_back(parse_u64(key, s));
        } else if (key == "run.policies") grid.policies = split_list(value);
        else if (key == "run.models") grid.models = split_list(value);
        else
            throw InvalidConfigError(origin + ":" + std::to_string(line_no) +
                                     ": unknown config key '" + key + "'");
    }

    cfg.apply_defaults();
    cfg.validate();
    if (cfg.model.hidden != 100 && cfg.model.hidden != 1000)
        throw InvalidConfigError(
            "model.hidden must be 100 or 1000, got " +
            std::to_string(cfg.model.hidden));

    if (grid.seeds.empty()) grid.seeds = {cfg.run.seed};
    if (grid.policies.empty()) grid.policies = {cfg.policy.kind};
    if (grid.models.empty()) grid.models = {cfg.model.kind};
    std::set<std::uint64_t> unique_seeds(grid.seeds.begin(), grid.seeds.end());
    if (unique_seeds.size() != grid.seeds.size())
        throw InvalidConfigError("run.seeds contains duplicates");
    for (const auto& p : grid.policies)
        validate(PolicySpec{p, cfg.policy.epsilon0, cfg.policy.decay_scale,
                            cfg.policy.posterior_samples});
    return loaded;
}

LoadedConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfigError("cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

ExperimentConfig load_config(const std::string& path) {
    return load_config_file(path).config;
}

std::string config_echo_text(const ExperimentConfig& config,
                             const GridSpec& grid) {
    std::ostringstream os;
    os << "# effective configuration (generated; loadable as-is)\n";
    os << "env.kind = " << config.env.kind << "\n";
    os << "env.n = " << config.env.n << "\n";
    os << "env.K = " << config.env.K << "\n";
    os << "env.noise_scale = " << format_double_exact(config.env.noise_scale)
       << "\n";
    if (config.env.kind == "synthetic")
        os << "env.d = " << config.env.synthetic_dim << "\n";
    if (!config.env.data_path.empty())
        os << "env.data_path = " << config.env.data_path << "\n";
    os << "env.exact_balance = "
       << (config.env.exact_balance ? "true" : "false") << "\n";
    os << "model.kind = " << config.model.kind << "\n";
    os << "model.hidden = " << config.model.hidden << "\n";
    os << "model.dropout = " << format_double_exact(config.model.dropout)
       << "\n";
    os << "model.batch_size = " << config.model.batch_size << "\n";
    os << "model.ridge_lambda = "
       << format_double_exact(config.model.ridge_lambda) << "\n";
    os << "policy.kind = " << config.policy.kind << "\n";
    os << "policy.epsilon0 = " << format_double_exact(config.policy.epsilon0)
       << "\n";
    os << "policy.decay_scale = "
       << format_double_exact(config.policy.decay_scale) << "\n";
    os << "policy.posterior_samples = " << config.policy.posterior_samples
       << "\n";
    os << "run.T = " << config.run.T << "\n";
    os << "run.seed = " << config.run.seed << "\n";
    os << "run.retrain_every = " << config.run.retrain_every << "\n";
    os << "run.epochs_per_fit = " << config.run.epochs_per_fit << "\n";
    os << "run.seeds = ";
    for (std::size_t i = 0; i < grid.seeds.size(); ++i)
        os << (i ? "," : "") << grid.seeds[i];
    os << "\n";
    os << "run.policies = ";
    for (std::size_t i = 0; i < grid.policies.size(); ++i)
        os << (i ? "," : "") << grid.policies[i];
    os << "\n";
    os << "run.models = ";
    for (std::size_t i = 0; i < grid.models.size(); ++i)
        os << (i ? "," : "") << grid.models[i];
    os << "\n";
    return os.str();
}

void write_config_echo(const ExperimentConfig& config, const GridSpec& grid,
                       const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write config echo " + path);
    out << config_echo_text(config, grid);
}

}  // namespace topk
