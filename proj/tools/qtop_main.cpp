#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "qtop/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "qtop: topology bounds for intersections of three real quadrics"};
  app.require_subcommand(1);

  qtop::JobConfig config;
  double epsilon = 0.0;

  auto add_common = [&](CLI::App* sub, bool needs_input) {
    auto* input = sub->add_option("--input", config.input_path,
                                  "path to the pencil JSON file");
    if (needs_input) input->required();
    sub->add_option("--depth", config.depth, "mesh subdivision depth")
        ->check(CLI::Range(0, 10))
        ->capture_default_str();
    sub->add_option("--epsilon", epsilon,
                    "override the stabilized epsilon (must be > 0)");
    sub->add_option("--seed", config.seed, "seed for all randomized choices")
        ->capture_default_str();
    sub->add_option("--oracle-res", config.oracle_resolution,
                    "oracle subdivision resolution")
        ->check(CLI::Range(0, 9))
        ->capture_default_str();
    sub->add_option("--out", config.out_dir, "output directory")
        ->capture_default_str();
    return sub;
  };

  auto* analyze = add_common(
      app.add_subcommand("analyze", "inertia analysis and bound report"), true);
  auto* trace = add_common(
      app.add_subcommand("trace", "bound report plus traced oval export"), true);
  auto* verify = add_common(
      app.add_subcommand("verify", "bound report cross-checked by the oracle"),
      true);
  auto* selftest =
      add_common(app.add_subcommand("selftest", "built-in smoke checks"), false);

  CLI11_PARSE(app, argc, argv);

  if (analyze->parsed()) {
    config.command = qtop::Command::analyze;
  } else if (trace->parsed()) {
    config.command = qtop::Command::trace;
  } else if (verify->parsed()) {
    config.command = qtop::Command::verify;
  } else if (selftest->parsed()) {
    config.command = qtop::Command::selftest;
  }
  for (auto* sub : {analyze, trace, verify, selftest}) {
    if (sub->parsed() && sub->count("--epsilon") > 0) {
      config.epsilon = epsilon;
    }
  }
  return qtop::run_job(config);
}
