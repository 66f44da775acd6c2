#include "dpglab/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "dpglab/estimators.hpp"
#include "dpglab/metrics.hpp"
#include "dpglab/numerics.hpp"
#include "dpglab/oracle.hpp"

namespace dpglab {

bool method_is_distribution_matching(Method m) {
  return m == Method::gdc || m == Method::gdcpp;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::reinforce:
      return "reinforce";
    case Method::reinforce_baseline:
      return "reinforce_baseline";
    case Method::ziegler:
      return "ziegler";
    case Method::gdc:
      return "gdc";
    case Method::gdcpp:
      return "gdcpp";
  }
  return "";
}

Method method_from_name(const std::string& name) {
  for (Method m : {Method::reinforce, Method::reinforce_baseline, Method::ziegler, Method::gdc,
                   Method::gdcpp}) {
    if (method_name(m) == name) return m;
  }
  throw std::invalid_argument(
      "unknown method '" + name +
      "'; expected one of reinforce, reinforce_baseline, ziegler, gdc, gdcpp");
}

void TrainConfig::validate() const {
  const bool batch_baseline =
      method == Method::reinforce_baseline || method == Method::ziegler || method == Method::gdcpp;
  if (batch_size < (batch_baseline ? 2 : 1)) {
    throw std::invalid_argument("TrainConfig: batch_size too small for the method");
  }
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be positive");
  if (eval_every < 1) throw std::invalid_argument("TrainConfig: eval_every must be >= 1");
  if (method == Method::ziegler && !(beta > 0.0)) {
    throw std::invalid_argument("TrainConfig: ziegler needs beta > 0");
  }
  if (checkpoint_every < 0) throw std::invalid_argument("TrainConfig: checkpoint_every < 0");
  if (checkpoint_every > 0 && checkpoint_dir.empty()) {
    throw std::invalid_argument("TrainConfig: checkpoint_every needs checkpoint_dir");
  }
}

void optimizer_step(ParamVector& params, const ParamVector& grad, OptimizerState& state,
                    const TrainConfig& cfg) {
  if (params.size() != grad.size()) throw std::invalid_argument("optimizer_step: shape mismatch");
  if (!grad.all_finite()) throw std::invalid_argument("optimizer_step: non-finite gradient");
  if (cfg.optimizer == OptimizerKind::sgd) {
    params.add_scaled(grad, cfg.lr);
    return;
  }
  if (state.m.size() != params.size()) {
    state.m = ParamVector(params.size());
    state.v = ParamVector(params.size());
    state.t = 0;
  }
  ++state.t;
  const AdamParams& a = cfg.adam;
  const double bc1 = 1.0 - std::pow(a.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(a.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    state.m[i] = a.beta1 * state.m[i] + (1.0 - a.beta1) * g;
    state.v[i] = a.beta2 * state.v[i] + (1.0 - a.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] += cfg.lr * mhat / (std::sqrt(vhat) + a.epsilon);
  }
}

bool proposal_accept(double kl_p_pi, double kl_p_q) {
  return std::isfinite(kl_p_pi) && std::isfinite(kl_p_q) && kl_p_pi < kl_p_q;
}

namespace {

constexpr double kDriftLimitNats = 50.0;

struct RunningMoments {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double se() const {
    if (n < 2) return 0.0;
    return std::sqrt(m2 / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
  }
};

/* Partition estimate from a reward-maximization batch, where the reward
 * field is R(x) rather than a ratio: recompute P(x)/pi(x) per sample. */
double rm_partition_estimate(const EbmSpec& ebm, const std::vector<GradSample>& batch) {
  KahanAccumulator acc;
  for (const GradSample& s : batch) {
    const double ls = ebm.log_score(s.x);
    if (ls == -std::numeric_limits<double>::infinity()) continue;
    acc.add(std::exp(ls - s.log_prob_proposal));
  }
  return acc.sum() / static_cast<double>(batch.size());
}

std::string checkpoint_path(const std::string& dir, std::int64_t epoch, const char* role) {
  char name[64];
  std::snprintf(name, sizeof(name), "ckpt_%06lld_%s.txt", static_cast<long long>(epoch), role);
  return dir + "/" + name;
}

}  // namespace

TrainResult train(TabularPolicy& policy, const Task& task, const TrainConfig& cfg,
                  const RecordSink& sink) {
  cfg.validate();
  task.validate();
  if (!(policy.space() == task.space())) {
    throw std::invalid_argument("train: policy and task spaces differ");
  }
  const bool dm = method_is_distribution_matching(cfg.method);
  const bool exact = cfg.z_mode == ZMode::exact;
  const auto n = static_cast<std::size_t>(cfg.batch_size);

  RewardSpec rm_reward = RewardSpec::feature_indicator(Feature::contains_token(0));
  if (!dm) rm_reward = RewardSpec::feature_indicator(task.rm_reward_feature());

  // Oracle tables for exact mode: the target never moves, so p, Z and the
  // base distribution are computed once.
  ExactDistribution target_p;
  double exact_z = 0.0;
  ExactDistribution base_dist;
  if (exact) {
    auto [p, z] = oracle::normalize_ebm(task.ebm);
    target_p = std::move(p);
    exact_z = z;
    base_dist = task.ebm.base.exact_distribution();
  }

  TabularPolicy proposal = policy;  // q; meaningful for gdc/gdcpp only
  RunningPartition rp;
  OptimizerState opt;
  RunningMoments adv_stats;
  TrainResult result;

  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed_ms = [&t0] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  const auto make_record = [&](std::int64_t epoch, const std::vector<GradSample>& batch,
                               double z_ref) {
    TrainRecord rec;
    rec.epoch = epoch;
    rec.samples_seen = epoch * cfg.batch_size;
    rec.z_ma = rp.z_ma;

    if (exact) {
      const ExactDistribution pi = policy.exact_distribution();
      rec.kl_p_pi = oracle::kl(target_p, pi);
      rec.kl_pi_a = oracle::kl(pi, base_dist);
      rec.tvd = oracle::tvd(target_p, pi);
    } else {
      const double z = rp.z_ma;
      const TabularPolicy& sampler = dm ? proposal : policy;
      if (z > 0.0) {
        rec.kl_p_pi = is_kl_from_target(task.ebm, z, sampler, policy, batch);
      } else {
        rec.kl_p_pi = std::numeric_limits<double>::quiet_NaN();
      }
      KahanAccumulator kl_pa;
      KahanAccumulator tvd_acc;
      for (const GradSample& s : batch) {
        kl_pa.add(s.importance_weight * (s.log_prob_policy - task.ebm.base.log_prob(s.x)));
        if (z > 0.0) {
          const double ls = task.ebm.log_score(s.x);
          const double ratio = ls == -std::numeric_limits<double>::infinity()
                                   ? 0.0
                                   : std::exp(ls - s.log_prob_proposal);
          tvd_acc.add(std::fabs(ratio / z - s.importance_weight));
        }
      }
      rec.kl_pi_a = kl_pa.sum() / static_cast<double>(batch.size());
      rec.tvd = z > 0.0 ? 0.5 * tvd_acc.sum() / static_cast<double>(batch.size())
                        : std::numeric_limits<double>::quiet_NaN();
    }

    const VarianceDiagnostics diag = variance_diagnostics(batch, z_ref);
    rec.var_grad = diag.var_grad;
    rec.var_adv = diag.var_adv;
    rec.mean_abs_adv = diag.mean_abs_adv;

    // Constraint satisfaction and diversity are properties of pi itself, so
    // they use a fresh evaluation batch sampled from the policy.
    std::vector<Sequence> eval_batch(n);
    const std::uint64_t eval_base = static_cast<std::uint64_t>(epoch - 1) * n;
    for (std::size_t k = 0; k < n; ++k) {
      auto rng = rng::stream_rng(cfg.seed, rng::Domain::eval, eval_base + k);
      eval_batch[k] = policy.sample(rng);
    }
    rec.mean_phi.assign(task.ebm.features.size(), 0.0);
    for (const Sequence& x : eval_batch) {
      for (std::size_t i = 0; i < task.ebm.features.size(); ++i) {
        if (task.ebm.features[i].feature.eval(x)) rec.mean_phi[i] += 1.0;
      }
    }
    for (double& v : rec.mean_phi) v /= static_cast<double>(n);
    rec.distinct_1 = distinct_n(eval_batch, 1);
    rec.wall_ms = elapsed_ms();
    return rec;
  };

  const auto abort_run = [&](std::int64_t epoch, const std::string& reason,
                             const std::vector<GradSample>& batch, double z_ref) {
    result.aborted = true;
    result.abort_reason = reason;
    result.final_record = make_record(epoch, batch, z_ref);
    sink(result.final_record);
  };

  for (std::int64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const std::uint64_t stream_base = static_cast<std::uint64_t>(epoch - 1) * n;

    // The update's Z: exact when available, else the running estimate from
    // the epochs before this one (zero on the very first epoch).
    const double z_update = exact ? exact_z : rp.z_ma;
    const bool baseline_active = cfg.method == Method::gdcpp && z_update > 0.0;
    const double z_ref = z_update > 0.0 ? z_update : 1.0;

    std::vector<GradSample> batch;
    switch (cfg.method) {
      case Method::reinforce:
        batch = reinforce_batch(policy, rm_reward, BaselineKind::none, n, cfg.seed, stream_base);
        break;
      case Method::reinforce_baseline:
        batch = reinforce_batch(policy, rm_reward, BaselineKind::mean_reward, n, cfg.seed,
                                stream_base);
        break;
      case Method::ziegler:
        batch = ziegler_batch(policy, task.ebm.base, rm_reward, cfg.beta,
                              BaselineKind::mean_reward, n, cfg.seed, stream_base);
        break;
      case Method::gdc:
      case Method::gdcpp:
        batch = dpg_off_batch(policy, proposal, task.ebm, z_ref, baseline_active, n, cfg.seed,
                              stream_base);
        break;
    }

    for (const GradSample& s : batch) adv_stats.add(s.advantage);

    ParamVector grad = batch_mean_grad(batch, policy.param_count());
    if (dm) grad.scale(1.0 / z_ref);
    if (!grad.all_finite()) {
      abort_run(epoch, "non-finite gradient", batch, z_ref);
      break;
    }
    optimizer_step(policy.params(), grad, opt, cfg);

    // Fold this epoch's partition estimate into the running mean. For
    // reward-maximization batches the P/pi ratios are recomputed since the
    // reward field holds R(x).
    if (dm) {
      update_z(rp, batch);
    } else {
      const double z_hat = rm_partition_estimate(task.ebm, batch);
      rp.z_ma = (static_cast<double>(rp.iterations) * rp.z_ma + z_hat) /
                static_cast<double>(rp.iterations + 1);
      ++rp.iterations;
    }

    // KL-adaptive proposal swap, once per epoch, strict improvement only.
    if (dm) {
      double kl_p_pi;
      double kl_p_q;
      if (exact) {
        const ExactDistribution pi = policy.exact_distribution();
        const ExactDistribution q = proposal.exact_distribution();
        kl_p_pi = oracle::kl(target_p, pi);
        kl_p_q = oracle::kl(target_p, q);
      } else if (rp.z_ma > 0.0) {
        kl_p_pi = is_kl_from_target(task.ebm, rp.z_ma, proposal, policy, batch);
        kl_p_q = is_kl_from_target(task.ebm, rp.z_ma, proposal, proposal, batch);
      } else {
        kl_p_pi = kl_p_q = std::numeric_limits<double>::quiet_NaN();
      }
      if (proposal_accept(kl_p_pi, kl_p_q)) proposal = policy;
    }

    const bool eval_due = epoch % cfg.eval_every == 0 || epoch == cfg.epochs;
    if (eval_due) {
      const TrainRecord rec = make_record(epoch, batch, z_ref);
      sink(rec);
      result.final_record = rec;
      if (std::isfinite(rec.kl_pi_a) && rec.kl_pi_a > kDriftLimitNats) {
        result.aborted = true;
        result.abort_reason = "catastrophic drift";
        break;
      }
    }

    if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0) {
      policy.save_checkpoint(checkpoint_path(cfg.checkpoint_dir, epoch, "policy"));
      if (dm) proposal.save_checkpoint(checkpoint_path(cfg.checkpoint_dir, epoch, "proposal"));
    }
  }

  result.adv_mean = adv_stats.mean;
  result.adv_se = adv_stats.se();
  result.total_samples = adv_stats.n;
  result.wall_ms_total = elapsed_ms();
  return result;
}

}  // namespace dpglab
