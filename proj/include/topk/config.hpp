#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "topk/bandit.hpp"

namespace topk {

// Grid expansions crossed with the base config by the grid runner.
struct GridSpec {
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> policies;
    std::vector<std::string> models;
};

struct LoadedConfig {
    ExperimentConfig config;
    GridSpec grid;
};

// Flat dotted key=value text ('#' lines are comments). Unknown keys are
// errors, never silently ignored; unset keys take the documented defaults.
LoadedConfig load_config_file(const std::string& path);
LoadedConfig parse_config_text(const std::string& text,
                               const std::string& origin);

ExperimentConfig load_config(const std::string& path);

// Effective-configuration echo: loadable, reproduces the identical run.
std::string config_echo_text(const ExperimentConfig& config,
                             const GridSpec& grid);
void write_config_echo(const ExperimentConfig& config, const GridSpec& grid,
                       const std::string& path);

// shortest round-trip decimal form (config echo must reload bit-identically)
std::string format_double_exact(double v);

}  // namespace topk
