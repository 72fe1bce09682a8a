#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sfwm/config.hpp"

namespace sfwm::commands {

struct OutputFile {
  std::string name;  // relative to the output directory
  std::string content;
};

struct CommandResult {
  std::string command;
  std::vector<OutputFile> files;  // first entry is <command>.csv
  config::Json report;
  int failed_rows = 0;
};

CommandResult phasematch_curve(const config::RunConfig& rc);
CommandResult jsa(const config::RunConfig& rc);
CommandResult sweep_pump_bandwidth(const config::RunConfig& rc);
CommandResult sweep_inhomogeneity(const config::RunConfig& rc);
CommandResult count_sim(const config::RunConfig& rc);

CommandResult run(const std::string& command, const config::RunConfig& rc);

// Writes every file plus <command>.report.json; returns the written paths.
std::vector<std::filesystem::path> write(const CommandResult& result,
                                         const std::filesystem::path& directory);

// Interpolated sweep value where a sampled curve first leaves [lo, hi], or NaN.
double band_exit(const std::vector<double>& x, const std::vector<double>& y, double lo, double hi);

}  // namespace sfwm::commands
