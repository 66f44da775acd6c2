/* Command entry points behind the CLI.
 *
 * Every command loads a JSON config, produces its artifacts under out_dir
 * and writes a manifest.json describing them. Exit codes are uniform:
 *   0  success
 *   2  lambda fit did not meet tolerance (max iterations or a capped bound)
 *   3  invalid config or task (schema violations, unattainable targets,
 *      unknown CSV headers)
 *   4  runtime abort (trainer divergence guard, non-finite gradients, I/O)
 *
 * Training and distribution dumps fit feature weights on the fly when the
 * task declares moment targets without explicit lambdas; an explicit
 * "lambdas" array in the config skips that step.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace dpglab::commands {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFitFailure = 2;
inline constexpr int kExitInvalid = 3;
inline constexpr int kExitAbort = 4;

struct CommandOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed_override;
};

int cmd_fit_lambda(const CommandOptions& opts);
int cmd_train(const CommandOptions& opts);
int cmd_sweep_batch(const CommandOptions& opts);
int cmd_bench_variance(const CommandOptions& opts);
int cmd_plot(const CommandOptions& opts);
int cmd_dump_distribution(const CommandOptions& opts);

}  // namespace dpglab::commands
