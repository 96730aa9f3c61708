#pragma once

#include <string>
#include <vector>

#include "topk/config.hpp"
#include "topk/metrics.hpp"

namespace topk {

// Entry point behind the binary: subcommands run | grid | chart | check |
// synth-data. Returns 0 on success, 1 on configuration/input errors, 2 on
// runtime failures.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);  // without argv[0]

// Grid execution shared by the CLI and tests: crosses policies x models x
// seeds from the loaded config, optionally running cells concurrently (the
// result does not depend on scheduling; cells are isolated).
std::vector<ExperimentTrace> run_grid(const LoadedConfig& loaded,
                                      bool parallel_cells);

std::string trace_file_name(const ExperimentTrace& trace);

}  // namespace topk
