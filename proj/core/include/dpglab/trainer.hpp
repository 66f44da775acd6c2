#pragma once

/*
 * Optimization loops over the estimator families.
 *
 * Reward maximization: reinforce (no baseline), reinforce_baseline (batch
 * mean), ziegler (KL-penalized reward, batch-mean baseline).
 * Distribution matching: gdc (off-policy, no baseline) and gdcpp (adds the
 * Z pi/q baseline), both with the KL-adaptive proposal: q starts at the
 * current policy and is replaced by it whenever KL(p, pi) < KL(p, q),
 * tested once per epoch.
 *
 * Per epoch: draw the method's batch, take an ascent step on the mean
 * gradient (distribution-matching gradients are divided by the current Z
 * estimate first), fold the batch's partition estimate into the running
 * mean, and on eval epochs emit a TrainRecord. With z_mode=exact the
 * divergences come from the oracle and the update uses the exact Z; with
 * z_ma they are plug-in estimates and the update uses the running mean from
 * the previous epochs (the first epoch has no estimate yet and steps
 * unscaled, baseline off).
 */

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dpglab/param_vector.hpp"
#include "dpglab/policy.hpp"
#include "dpglab/task.hpp"

namespace dpglab {

enum class Method { reinforce, reinforce_baseline, ziegler, gdc, gdcpp };
enum class OptimizerKind { sgd, adam };
enum class ZMode { exact, z_ma };

bool method_is_distribution_matching(Method m);
std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  Method method = Method::gdcpp;
  int batch_size = 64;
  int epochs = 1;
  double lr = 0.05;
  OptimizerKind optimizer = OptimizerKind::adam;
  AdamParams adam;
  double beta = 1.0;  // ziegler KL penalty coefficient
  ZMode z_mode = ZMode::exact;
  std::uint64_t seed = 0;
  int eval_every = 10;
  int checkpoint_every = 0;     // 0 disables checkpoints
  std::string checkpoint_dir;   // required when checkpoint_every > 0

  void validate() const;
};

struct TrainRecord {
  std::int64_t epoch = 0;
  std::int64_t samples_seen = 0;  // epoch * batch_size
  double z_ma = 0.0;
  double kl_p_pi = 0.0;
  double kl_pi_a = 0.0;
  double tvd = 0.0;
  std::vector<double> mean_phi;  // per task feature, eval batch from pi
  double var_grad = 0.0;
  double var_adv = 0.0;
  double mean_abs_adv = 0.0;
  double distinct_1 = 0.0;
  double wall_ms = 0.0;  // cumulative; kept out of CSV output
};

struct OptimizerState {
  ParamVector m;
  ParamVector v;
  std::int64_t t = 0;
};

/* Ascent step. SGD: params += lr * grad. Adam: bias-corrected first/second
 * moments, params += lr * mhat / (sqrt(vhat) + eps). Throws on non-finite
 * gradients. */
void optimizer_step(ParamVector& params, const ParamVector& grad, OptimizerState& state,
                    const TrainConfig& cfg);

/* Strict comparison; non-finite inputs keep the current proposal. */
bool proposal_accept(double kl_p_pi, double kl_p_q);

using RecordSink = std::function<void(const TrainRecord&)>;

struct TrainResult {
  TrainRecord final_record;
  bool aborted = false;
  std::string abort_reason;
  double adv_mean = 0.0;  // running mean of raw per-sample advantages
  double adv_se = 0.0;    // sigma / sqrt(total samples)
  std::int64_t total_samples = 0;
  double wall_ms_total = 0.0;
};

/* Runs the configured method. Deterministic given config + seed. Aborts
 * (result.aborted, diagnostic record flushed) on non-finite gradients or
 * when KL(pi, a) exceeds 50 nats ("catastrophic drift"). */
TrainResult train(TabularPolicy& policy, const Task& task, const TrainConfig& cfg,
                  const RecordSink& sink);

}  // namespace dpglab
