// beatlock: run bundled or user-written beat-note lock scenarios.
//
//   beatlock simulate <scenario> [--seed N] [--output-dir PATH]
//   beatlock validate <scenario>
//   beatlock list-scenarios
//
// Exit codes: 0 success, 1 parse/validation failure, 2 runtime error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "beatlock/beatlock.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

int load(const std::string& arg, beatlock::scenario::Scenario& out) {
  try {
    out = beatlock::scenario::load_scenario(beatlock::scenario::resolve(arg));
    return kOk;
  } catch (const beatlock::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
  } catch (const beatlock::ValidationError& e) {
    std::cerr << arg << ": " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return kInvalid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beat-note stabilization simulator for comb-driven Raman qubits"};
  app.require_subcommand(1);

  std::string file;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;

  auto* simulate = app.add_subcommand("simulate", "Run a scenario and write its artifacts");
  simulate->add_option("scenario", file, "Scenario file or bundled scenario name")->required();
  simulate->add_option("--seed", seed, "Override the scenario seed");
  simulate->add_option("--output-dir", output_dir, "Override the output directory");

  auto* validate = app.add_subcommand("validate", "Parse and validate a scenario without running it");
  validate->add_option("scenario", file, "Scenario file or bundled scenario name")->required();

  auto* list = app.add_subcommand("list-scenarios", "List bundled scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInvalid;
  }

  if (list->parsed()) {
    for (const auto& name : beatlock::scenario::list_bundled()) std::cout << name << '\n';
    return kOk;
  }

  beatlock::scenario::Scenario s;
  if (int rc = load(file, s); rc != kOk) return rc;

  if (validate->parsed()) {
    std::cout << s.name << ": ok (" << beatlock::scenario::experiment_type(s.experiment) << ")\n";
    return kOk;
  }

  if (seed) s.seed = *seed;
  if (output_dir) s.output_dir = *output_dir;
  try {
    const auto m = beatlock::runner::run_scenario(s);
    std::cout << s.name << ": wrote " << m.artifacts.size() << " artifacts to " << s.output_dir.string() << '\n';
    for (const auto& a : m.artifacts) std::cout << "  " << a << '\n';
  } catch (const std::exception& e) {
    std::cerr << s.name << ": " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
