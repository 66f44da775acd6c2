/* Command line front end.
 *
 * dpglab <command> --config <path> [--out <dir>] [--seed N]
 *
 * Commands: fit-lambda, train, sweep-batch, bench-variance, plot,
 * dump-distribution. --seed overrides the config's training seed (and the
 * sweep seed list). Exit codes: 0 success, 2 lambda fit failure, 3 invalid
 * config or task, 4 runtime abort.
 */

#include <cstdint>
#include <string>

#include <CLI11.hpp>

#include "dpglab/commands.hpp"

int main(int argc, char** argv) {
  using dpglab::commands::CommandOptions;

  CLI::App app{"reward-maximization and distribution-matching lab for enumerable sequence spaces"};
  app.require_subcommand(1);

  CommandOptions opts;
  std::uint64_t seed_value = 0;
  int exit_code = 0;

  const auto add = [&](const char* name, const char* desc, int (*fn)(const CommandOptions&)) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", opts.config_path, "path to the JSON experiment config")
        ->required();
    sub->add_option("--out", opts.out_dir, "output directory for artifacts (default .)");
    sub->add_option("--seed", seed_value, "override the training seed");
    sub->callback([&opts, &seed_value, &exit_code, sub, fn] {
      if (sub->count("--seed") > 0) opts.seed_override = seed_value;
      exit_code = fn(opts);
    });
  };

  add("fit-lambda", "fit feature weights to moment targets",
      dpglab::commands::cmd_fit_lambda);
  add("train", "run one training configuration", dpglab::commands::cmd_train);
  add("sweep-batch", "train a method/seed/batch-size grid into one CSV",
      dpglab::commands::cmd_sweep_batch);
  add("bench-variance", "paired baseline vs no-baseline diagnostics per checkpoint",
      dpglab::commands::cmd_bench_variance);
  add("plot", "render metric CSVs as SVG line charts", dpglab::commands::cmd_plot);
  add("dump-distribution", "write the exact target distribution as CSV",
      dpglab::commands::cmd_dump_distribution);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : dpglab::commands::kExitInvalid;
  }
  return exit_code;
}
