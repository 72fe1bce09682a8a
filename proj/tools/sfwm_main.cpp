// sfwm: command-line front end.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sfwm/commands.hpp"
#include "sfwm/config.hpp"
#include "sfwm/errors.hpp"

namespace {

constexpr int kConfigExit = 2;
constexpr int kNumericalExit = 3;

int report_error(const std::string& command, const std::string& kind, const std::string& message,
                 const std::optional<std::string>& out_dir, int code) {
  sfwm::config::Json err = {{"command", command},
                            {"status", "error"},
                            {"error", {{"kind", kind}, {"message", message}}},
                            {"exit_code", code}};
  std::cerr << err.dump(2) << "\n";
  if (out_dir && !command.empty()) {
    try {
      std::filesystem::create_directories(*out_dir);
      std::ofstream(std::filesystem::path(*out_dir) / (command + ".report.json")) << err.dump(2) << "\n";
    } catch (...) {
    }
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heralded-photon SFWM source design and simulation"};
  app.require_subcommand(1);

  std::optional<std::string> config_path, preset, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;

  for (const auto& info : sfwm::config::commands()) {
    auto* sub = app.add_subcommand(info.name);
    sub->add_option("--config", config_path, "JSON configuration file");
    sub->add_option("--preset", preset, "built-in scenario (paper)");
    sub->add_option("--out", out_dir, "output directory (default .)");
    sub->add_option("--seed", seed, "random seed, overrides the config");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigExit;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const auto file = config_path ? sfwm::config::load_file(*config_path) : sfwm::config::Json::object();
    const auto rc = sfwm::config::resolve(command, file, preset, seed, threads);
    const auto result = sfwm::commands::run(command, rc);
    for (const auto& p : sfwm::commands::write(result, out_dir.value_or(".")))
      std::cout << p.string() << "\n";
    return 0;
  } catch (const sfwm::ConfigError& e) {
    return report_error(command, "config", e.what(), out_dir, kConfigExit);
  } catch (const sfwm::RangeError& e) {
    return report_error(command, "range", e.what(), out_dir, kConfigExit);
  } catch (const sfwm::DomainError& e) {
    return report_error(command, "domain", e.what(), out_dir, kConfigExit);
  } catch (const sfwm::NumericalError& e) {
    return report_error(command, "numerical", e.what(), out_dir, kNumericalExit);
  } catch (const std::exception& e) {
    return report_error(command, "internal", e.what(), out_dir, 1);
  }
}
