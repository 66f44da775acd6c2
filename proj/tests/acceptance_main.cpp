/* Acceptance gate for the whole laboratory.
 *
 * Ten end-to-end checks, one [PASS]/[FAIL] line each, exit 0 only when all
 * pass. Every check pins the library against exact enumeration oracles or
 * against fixed-seed Monte Carlo with stated statistical margins:
 *
 *   1. baselines leave expected gradients unchanged, and batch means at
 *      n=1e5 agree with the oracle entrywise within 4 standard errors
 *   2. the baselined off-policy advantage has exactly zero mean under the
 *      proposal at the true partition value
 *   3. the KL-control identity E[R^z] = beta log Z - beta KL(pi, p_z) holds,
 *      and policy-gradient training on R^z reaches its optimum
 *   4. the optimal constant baseline is a variance minimum between the
 *      plain and mean-reward baselines
 *   5. the partition baseline lowers exact gradient and advantage variance
 *      across training checkpoints, and mean |A|/2 tracks TVD
 *   6. the baselined matcher beats the unbaselined one at small batch, and
 *      the gap narrows at large batch
 *   7. coefficient fitting hits moment targets in exact and sampled modes
 *      and matches the single-feature closed form
 *   8. the running partition estimate and the plug-in divergence estimate
 *      converge at the expected statistical rates
 *   9. reward maximization overshoots where distribution matching stays
 *      anchored: higher satisfaction, much larger base drift, lower
 *      diversity
 *  10. every command is byte-deterministic across reruns
 */
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "dpglab/commands.hpp"
#include "dpglab/config.hpp"
#include "dpglab/csv.hpp"
#include "dpglab/ebm.hpp"
#include "dpglab/estimators.hpp"
#include "dpglab/features.hpp"
#include "dpglab/metrics.hpp"
#include "dpglab/numerics.hpp"
#include "dpglab/oracle.hpp"
#include "dpglab/policy.hpp"
#include "dpglab/rng.hpp"
#include "dpglab/seqspace.hpp"
#include "dpglab/task.hpp"
#include "dpglab/trainer.hpp"

#include "test_util.hpp"

using namespace dpglab;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int idx, const std::string& label, bool ok, const std::string& detail = "") {
  std::printf("[%s] %2d. %s%s%s\n", ok ? "PASS" : "FAIL", idx, label.c_str(),
              detail.empty() ? "" : ": ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

void report_error(int idx, const std::string& label, const std::exception& e) {
  report(idx, label, false, std::string("threw ") + e.what());
}

/* Instances whose filter empties the support have no normalizable target,
 * and short spaces can make a drawn count threshold unsatisfiable; walk the
 * seed space until `count` usable draws are collected. */
std::vector<testutil::RandomInstance> usable_instances(std::uint64_t first_seed, int count) {
  std::vector<testutil::RandomInstance> out;
  for (std::uint64_t s = first_seed; static_cast<int>(out.size()) < count; ++s) {
    testutil::RandomInstance inst = testutil::random_instance(s);
    try {
      for (const FeatureSpec& fs : inst.ebm.features) fs.feature.validate(inst.space);
      if (inst.ebm.pointwise_filter) inst.ebm.pointwise_filter->feature.validate(inst.space);
      (void)inst.ebm.exact_partition();
    } catch (const std::domain_error&) {
      continue;
    } catch (const std::invalid_argument&) {
      continue;
    }
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<double> random_reward_table(const VocabSpec& space, std::uint64_t seed) {
  auto rng = rng::stream_rng(seed, rng::Domain::test, 0);
  std::vector<double> table(space.sequence_count());
  for (double& v : table) v = rng.next_uniform(0.0, 1.0);
  return table;
}

oracle::RewardFn table_fn(const VocabSpec& space, const std::vector<double>& table) {
  return [&space, &table](const Sequence& x) { return table[index_of(space, x)]; };
}

struct McMoments {
  ParamVector mean;
  ParamVector se;  // per-entry standard error of the mean
};

McMoments batch_entry_moments(const std::vector<GradSample>& batch, std::size_t param_count) {
  McMoments mm;
  mm.mean = ParamVector(param_count);
  ParamVector sumsq(param_count);
  for (const GradSample& s : batch) {
    s.grad.add_to(mm.mean, 1.0);
    const std::size_t width = s.grad.block_width;
    for (std::size_t r = 0; r < s.grad.rows.size(); ++r) {
      for (std::size_t i = 0; i < width; ++i) {
        const double g = s.grad.values[r * width + i];
        sumsq[s.grad.rows[r] * width + i] += g * g;
      }
    }
  }
  const double n = static_cast<double>(batch.size());
  mm.se = ParamVector(param_count);
  for (std::size_t j = 0; j < param_count; ++j) {
    mm.mean[j] /= n;
    const double var = std::max(0.0, sumsq[j] / n - mm.mean[j] * mm.mean[j]);
    mm.se[j] = std::sqrt(var / n);
  }
  return mm;
}

double max_abs_diff(const ParamVector& a, const ParamVector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

TrainResult run_training(TabularPolicy& policy, const Task& task, const TrainConfig& cfg) {
  return train(policy, task, cfg, [](const TrainRecord&) {});
}

Task fitted_catalog_task(const std::string& name) {
  Task task = catalog_task(name);
  if (!task.ebm.features.empty()) {
    FitConfig fc;
    const FitReport rep = fit_lambdas(task.ebm, MomentTargets{task.targets}, fc, 1);
    if (!rep.converged) throw std::runtime_error("fit failed for " + name);
  }
  return task;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "dpglab_acceptance" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  return p.string();
}

/* 1. Unbiasedness: constant baselines leave the exact reward-maximization
 * gradient unchanged; the partition baseline leaves the exact off-policy
 * matching gradient unchanged; and fixed-seed batch means at n=1e5 agree
 * with the oracle within 4 standard errors per entry. */
void criterion_1() {
  const std::string label = "baselines keep gradients unbiased, batches match the oracle";
  try {
    const std::size_t n = 100000;
    double worst_exact = 0.0;
    double worst_sigmas = 0.0;
    const auto instances = usable_instances(1, 20);
    for (std::size_t k = 0; k < instances.size(); ++k) {
      const auto& inst = instances[k];
      const double z = inst.ebm.exact_partition();
      const auto ebm_ptr = std::make_shared<const EbmSpec>(inst.ebm);
      const oracle::RewardFn r = [&ebm_ptr](const Sequence& x) { return ebm_ptr->score(x); };

      const ParamVector g_plain = oracle::rm_expected_gradient(inst.policy, r, 0.0);
      const ParamVector g_mean = oracle::rm_expected_gradient(
          inst.policy, r, oracle::mean_reward_baseline(inst.policy, r));
      const ParamVector g_opt = oracle::rm_expected_gradient(
          inst.policy, r, oracle::optimal_baseline(inst.policy, r));
      worst_exact = std::max(worst_exact, max_abs_diff(g_plain, g_mean));
      worst_exact = std::max(worst_exact, max_abs_diff(g_plain, g_opt));

      const ParamVector g_with =
          oracle::dpg_off_expected_gradient(inst.policy, inst.proposal, inst.ebm, z, true);
      const ParamVector g_without =
          oracle::dpg_off_expected_gradient(inst.policy, inst.proposal, inst.ebm, z, false);
      worst_exact = std::max(worst_exact, max_abs_diff(g_with, g_without));

      const auto check_mc = [&](const std::vector<GradSample>& batch, const ParamVector& target) {
        const McMoments mm = batch_entry_moments(batch, inst.policy.param_count());
        for (std::size_t j = 0; j < target.size(); ++j) {
          const double err = std::fabs(mm.mean[j] - target[j]);
          const double scale = 4.0 * mm.se[j] + 1e-12;
          worst_sigmas = std::max(worst_sigmas, err / scale * 4.0);
          if (err > scale) return false;
        }
        return true;
      };
      const bool mc_ok =
          check_mc(reinforce_batch(inst.policy, RewardSpec::ebm_score(ebm_ptr),
                                   BaselineKind::mean_reward, n, 7000 + k, 0),
                   g_plain) &&
          check_mc(dpg_off_batch(inst.policy, inst.proposal, inst.ebm, z, true, n, 7100 + k, 0),
                   g_with);
      if (!mc_ok || worst_exact > 1e-10) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "instance %zu: exact diff %.3g, worst %.2f sigma", k,
                      worst_exact, worst_sigmas);
        report(1, label, false, buf);
        return;
      }
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "20 instances, exact diff <= %.2g, batch means within %.2f sigma", worst_exact,
                  worst_sigmas);
    report(1, label, true, buf);
  } catch (const std::exception& e) {
    report_error(1, label, e);
  }
}

/* 2. Null advantage: E_q[P/q - Z pi/q] is exactly zero at the true Z, and
 * the fixed-seed batch mean sits within 3 sigma of zero at n=1e5. */
void criterion_2() {
  const std::string label = "the baselined advantage is centered on zero under the proposal";
  try {
    const std::size_t n = 100000;
    double worst_exact = 0.0;
    double worst_ratio = 0.0;
    const auto instances = usable_instances(201, 20);
    for (std::size_t k = 0; k < instances.size(); ++k) {
      const auto& inst = instances[k];
      const double z = inst.ebm.exact_partition();
      worst_exact = std::max(
          worst_exact,
          std::fabs(oracle::dpg_off_expected_advantage(inst.policy, inst.proposal, inst.ebm, z)));
      const double sigma =
          std::sqrt(oracle::dpg_off_advantage_variance(inst.policy, inst.proposal, inst.ebm, z,
                                                       true));
      const auto batch = dpg_off_batch(inst.policy, inst.proposal, inst.ebm, z, true, n,
                                       7200 + k, 0);
      KahanAccumulator acc;
      for (const GradSample& s : batch) acc.add(s.advantage);
      const double mean = acc.sum() / static_cast<double>(n);
      const double bound = 3.0 * sigma / std::sqrt(static_cast<double>(n)) + 1e-12;
      worst_ratio = std::max(worst_ratio, std::fabs(mean) / bound * 3.0);
      if (worst_exact > 1e-12 || std::fabs(mean) > bound) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "instance %zu: exact %.3g, batch mean at %.2f sigma", k,
                      worst_exact, worst_ratio);
        report(2, label, false, buf);
        return;
      }
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "20 instances, exact |mean| <= %.2g, batches within %.2f sigma",
                  worst_exact, worst_ratio);
    report(2, label, true, buf);
  } catch (const std::exception& e) {
    report_error(2, label, e);
  }
}

/* 3. KL-control identity over 50 random triples, then policy-gradient
 * training on the shaped reward from five random starts reaches the
 * closed-form optimum within TVD 0.05. */
void criterion_3() {
  const std::string label = "KL-control identity holds and its optimum is trainable";
  try {
    const VocabSpec space{3, 3};
    const double betas[] = {0.5, 1.0, 2.0};
    double worst_identity = 0.0;
    for (int i = 0; i < 50; ++i) {
      const TabularPolicy policy = TabularPolicy::randomized(space, 300 + 3 * i);
      const TabularPolicy base = TabularPolicy::randomized(space, 301 + 3 * i);
      const std::vector<double> table = random_reward_table(space, 1000 + i);
      const oracle::RewardFn r = table_fn(space, table);
      const double beta = betas[i % 3];
      const auto [p_z, z_z] = oracle::ziegler_optimal_policy(base, r, beta);
      const double lhs = oracle::expected_ziegler_reward(policy, base, r, beta);
      const double rhs =
          beta * std::log(z_z) - beta * oracle::kl(policy.exact_distribution(), p_z);
      worst_identity = std::max(worst_identity, std::fabs(lhs - rhs));
    }
    if (worst_identity > 1e-9) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "identity residual %.3g > 1e-9", worst_identity);
      report(3, label, false, buf);
      return;
    }

    Task task{"klcontrol", EbmSpec(TabularPolicy::uniform(space)), {}, TaskCategory::pointwise};
    task.ebm.pointwise_filter = FeatureSpec{"goal", Feature::contains_token(1)};
    task.validate();
    const double beta = 0.5;
    const ExactDistribution p_z =
        oracle::ziegler_optimal_policy(
            task.ebm.base,
            [&task](const Sequence& x) {
              return task.ebm.pointwise_filter->feature.eval(x) ? 1.0 : 0.0;
            },
            beta)
            .first;

    double worst_tvd = 0.0;
    for (int i = 0; i < 5; ++i) {
      TabularPolicy policy = TabularPolicy::randomized(space, 400 + i);
      TrainConfig cfg;
      cfg.method = Method::ziegler;
      cfg.beta = beta;
      cfg.batch_size = 64;
      cfg.epochs = 1500;
      cfg.lr = 0.05;
      cfg.eval_every = cfg.epochs;
      cfg.seed = 40 + static_cast<std::uint64_t>(i);
      const TrainResult res = run_training(policy, task, cfg);
      if (res.aborted) {
        report(3, label, false, "training aborted: " + res.abort_reason);
        return;
      }
      worst_tvd = std::max(worst_tvd, oracle::tvd(policy.exact_distribution(), p_z));
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "identity <= %.2g over 50 triples, worst TVD %.3f from 5 starts",
                  worst_identity, worst_tvd);
    report(3, label, worst_tvd <= 0.05, buf);
  } catch (const std::exception& e) {
    report_error(3, label, e);
  }
}

/* 4. The optimal constant baseline: ordered variances, a local minimum under
 * +-0.1 probes, and equality with the mean-reward baseline when the score
 * norm is constant across sequences. */
void criterion_4() {
  const std::string label = "the optimal constant baseline is a variance minimum";
  try {
    const VocabSpec spaces[] = {{2, 2}, {3, 2}, {2, 3}, {3, 3}};
    for (int i = 0; i < 100; ++i) {
      const VocabSpec space = spaces[i % 4];
      const TabularPolicy policy = TabularPolicy::randomized(space, 500 + i);
      const std::vector<double> table = random_reward_table(space, 600 + i);
      const oracle::RewardFn r = table_fn(space, table);
      const double b_star = oracle::optimal_baseline(policy, r);
      const double b_rl = oracle::mean_reward_baseline(policy, r);
      const double v_star = oracle::rm_gradient_variance(policy, r, b_star);
      const double v_rl = oracle::rm_gradient_variance(policy, r, b_rl);
      const double v_zero = oracle::rm_gradient_variance(policy, r, 0.0);
      const bool ordered = v_star <= v_rl + 1e-12 && v_rl <= v_zero + 1e-12;
      const bool local_min =
          oracle::rm_gradient_variance(policy, r, b_star + 0.1) >= v_star - 1e-12 &&
          oracle::rm_gradient_variance(policy, r, b_star - 0.1) >= v_star - 1e-12;
      if (!ordered || !local_min) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "instance %d: Var(B*)=%.6g Var(B_RL)=%.6g Var(0)=%.6g ordered=%d local=%d",
                      i, v_star, v_rl, v_zero, ordered ? 1 : 0, local_min ? 1 : 0);
        report(4, label, false, buf);
        return;
      }
    }
    // Uniform conditionals give every sequence the same squared score norm,
    // collapsing B* onto the mean reward for any reward assignment.
    double worst_eq = 0.0;
    const VocabSpec space{2, 2};
    const TabularPolicy uniform = TabularPolicy::uniform(space);
    for (int i = 0; i < 10; ++i) {
      const std::vector<double> table = random_reward_table(space, 700 + i);
      const oracle::RewardFn r = table_fn(space, table);
      worst_eq = std::max(worst_eq, std::fabs(oracle::optimal_baseline(uniform, r) -
                                              oracle::mean_reward_baseline(uniform, r)));
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "100 instances ordered with local minima; constant-norm |B*-B_RL| <= %.2g",
                  worst_eq);
    report(4, label, worst_eq <= 1e-9, buf);
  } catch (const std::exception& e) {
    report_error(4, label, e);
  }
}

/* 5. Across checkpoints of baselined-matcher runs on the frequent-word and
 * single-marker tasks, the partition baseline lowers both exact variances on
 * at least 90% of checkpoints, and the sampled mean |A|/2 tracks exact TVD. */
void criterion_5() {
  const std::string label = "the partition baseline lowers variance across checkpoints";
  try {
    int lower_grad = 0;
    int lower_adv = 0;
    int checkpoints = 0;
    double worst_track = 0.0;
    for (const std::string name : {"frequent_word", "single_marker"}) {
      const fs::path dir = fresh_dir("crit5_" + name);
      // Batch 256 at lr 0.02 keeps the run in its converging phase, where the
      // policy tracks the target instead of wandering at the optimizer's
      // noise floor; the variance ordering is about that regime.
      const std::string cfg = write_text(dir / "cfg.json", R"({
  "task": {"catalog": ")" + name + R"("},
  "train": {"method": "gdcpp", "batch_size": 256, "epochs": 400, "lr": 0.02,
            "eval_every": 20, "seed": 5},
  "bench": {"mc_batch": 4096}
})");
      commands::CommandOptions opts;
      opts.config_path = cfg;
      opts.out_dir = (dir / "out").string();
      if (commands::cmd_bench_variance(opts) != commands::kExitOk) {
        report(5, label, false, "bench-variance failed on " + name);
        return;
      }
      const csv::Table table = csv::read_file((dir / "out" / "variance.csv").string());
      const auto col = [&table](const char* c) {
        return static_cast<std::size_t>(table.column(c));
      };
      for (std::size_t r = 0; r + 1 < table.rows.size(); r += 2) {
        const auto& gdc = table.rows[r];
        const auto& gdcpp = table.rows[r + 1];
        ++checkpoints;
        if (std::stod(gdcpp[col("var_grad")]) < std::stod(gdc[col("var_grad")])) ++lower_grad;
        if (std::stod(gdcpp[col("var_adv")]) < std::stod(gdc[col("var_adv")])) ++lower_adv;
        const double track = std::fabs(0.5 * std::stod(gdcpp[col("mean_abs_adv")]) -
                                       std::stod(gdcpp[col("tvd")]));
        worst_track = std::max(worst_track, track);
      }
    }
    const double frac_grad = static_cast<double>(lower_grad) / checkpoints;
    const double frac_adv = static_cast<double>(lower_adv) / checkpoints;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "Var(G) lower on %.0f%%, Var(A) lower on %.0f%% of %d checkpoints; "
                  "|mean|A|/2 - TVD| <= %.3f",
                  100.0 * frac_grad, 100.0 * frac_adv, checkpoints, worst_track);
    report(5, label, frac_grad >= 0.9 && frac_adv >= 0.9 && worst_track <= 0.05, buf);
  } catch (const std::exception& e) {
    report_error(5, label, e);
  }
}

/* 6. At equal sample budgets the baselined matcher reaches a lower median
 * final divergence than the unbaselined one at batch 16, and the gap narrows
 * at batch 256. */
void criterion_6() {
  const std::string label = "the baseline helps most at small batch";
  try {
    const Task task = fitted_catalog_task("frequent_word");
    // Plain SGD makes gradient noise translate directly into trajectory
    // noise: the small-batch run is noise-limited, so removing variance
    // through the baseline speeds it up, while at batch 256 both methods
    // ride the nearly deterministic gradient flow and stay close. Adaptive
    // optimizers renormalize per-coordinate noise and blur this contrast.
    const int total_samples = 128000;
    const auto median_final = [&](Method m, int batch) {
      std::vector<double> finals;
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        TabularPolicy policy = TabularPolicy::uniform(task.space());
        TrainConfig cfg;
        cfg.method = m;
        cfg.batch_size = batch;
        cfg.epochs = total_samples / batch;
        cfg.lr = 1.0;
        cfg.optimizer = OptimizerKind::sgd;
        cfg.eval_every = cfg.epochs;
        cfg.seed = seed;
        const TrainResult res = run_training(policy, task, cfg);
        if (res.aborted) throw std::runtime_error("run aborted: " + res.abort_reason);
        finals.push_back(res.final_record.kl_p_pi);
      }
      return median(finals);
    };
    const double gdc_16 = median_final(Method::gdc, 16);
    const double gdcpp_16 = median_final(Method::gdcpp, 16);
    const double gdc_256 = median_final(Method::gdc, 256);
    const double gdcpp_256 = median_final(Method::gdcpp, 256);
    const double gap_16 = gdc_16 - gdcpp_16;
    const double gap_256 = gdc_256 - gdcpp_256;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "batch 16: gdc %.4f vs gdcpp %.4f; batch 256: gdc %.4f vs gdcpp %.4f; "
                  "gaps %.4f -> %.4f",
                  gdc_16, gdcpp_16, gdc_256, gdcpp_256, gap_16, gap_256);
    report(6, label, gdcpp_16 < gdc_16 && gap_256 < gap_16, buf);
  } catch (const std::exception& e) {
    report_error(6, label, e);
  }
}

/* 7. Coefficient fitting: exact mode reaches the moment target within 0.01
 * and the closed-form coefficient within 0.05; sampled mode at 4096 draws
 * reaches the target within 0.03 measured exactly. */
void criterion_7() {
  const std::string label = "coefficient fitting hits its moment targets";
  try {
    Task exact_task = catalog_task("single_marker");
    FitConfig fc;
    const FitReport exact_rep =
        fit_lambdas(exact_task.ebm, MomentTargets{exact_task.targets}, fc, 1);
    const double exact_moment = exact_task.ebm.exact_moments()[0];
    const double lambda_star = std::log(3.0);  // target 0.5 against base rate 1/4
    const double exact_err = std::fabs(exact_moment - 0.5);
    const double lambda_err = std::fabs(exact_rep.lambdas[0] - lambda_star);

    Task snis_task = catalog_task("single_marker");
    FitConfig sc;
    sc.mode = FitMode::snis;
    sc.sample_size = 4096;
    const FitReport snis_rep = fit_lambdas(snis_task.ebm, MomentTargets{snis_task.targets}, sc, 3);
    const double snis_moment = snis_task.ebm.exact_moments()[0];
    const double snis_err = std::fabs(snis_moment - 0.5);

    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "exact |moment-0.5|=%.4f, |lambda-ln3|=%.4f; sampled-mode |moment-0.5|=%.4f",
                  exact_err, lambda_err, snis_err);
    report(7, label,
           exact_rep.converged && exact_err <= 0.01 && lambda_err <= 0.05 &&
               snis_rep.converged && snis_err <= 0.03,
           buf);
  } catch (const std::exception& e) {
    report_error(7, label, e);
  }
}

/* 8. Metric estimators: the running partition mean over 1e3 batches lands
 * within 3 sigma of the exact value, and the plug-in divergence estimate is
 * within 0.05 at 1e4 draws and improves at 4x the sample size. */
void criterion_8() {
  const std::string label = "partition and divergence estimators converge at rate";
  try {
    const Task task = fitted_catalog_task("frequent_word");
    const double z = task.ebm.exact_partition();
    const TabularPolicy& proposal = task.ebm.base;

    RunningPartition rp;
    const std::size_t batch_size = 256;
    std::size_t draw = 0;
    for (int b = 0; b < 1000; ++b) {
      std::vector<GradSample> batch =
          dpg_off_batch(proposal, proposal, task.ebm, 1.0, false, batch_size, 81, draw);
      draw += batch_size;
      update_z(rp, batch);
    }
    const double sigma_mean =
        std::sqrt(z * (1.0 - z) / static_cast<double>(1000 * batch_size));
    const double z_err = std::fabs(rp.z_ma - z);
    const bool z_ok = z_err <= 3.0 * sigma_mean;

    const TabularPolicy model = TabularPolicy::randomized(task.space(), 77, 0.3);
    const double kl_exact =
        oracle::kl(oracle::normalize_ebm(task.ebm).first, model.exact_distribution());
    const auto mean_err = [&](std::size_t k, std::uint64_t seed0) {
      double total = 0.0;
      for (std::uint64_t rep = 0; rep < 5; ++rep) {
        std::vector<GradSample> batch =
            dpg_off_batch(model, proposal, task.ebm, z, false, k, seed0 + rep, 0);
        total += std::fabs(is_kl_from_target(task.ebm, z, proposal, model, batch) - kl_exact);
      }
      return total / 5.0;
    };
    const double err_small = mean_err(10000, 90);
    const double err_large = mean_err(40000, 95);

    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "Z err %.2g (3 sigma %.2g); divergence err %.4f at 1e4 -> %.4f at 4e4",
                  z_err, 3.0 * sigma_mean, err_small, err_large);
    report(8, label, z_ok && err_small <= 0.05 && err_large < err_small, buf);
  } catch (const std::exception& e) {
    report_error(8, label, e);
  }
}

/* 9. Reward maximization vs distribution matching on the frequent-word task:
 * the maximizer satisfies the constraint at least as often but drifts at
 * least 3x further from the base and loses diversity; the matcher satisfies
 * at 0.6+ while staying within 2x of the target's own base divergence. */
void criterion_9() {
  const std::string label = "matching stays anchored where maximization overshoots";
  try {
    const Task task = fitted_catalog_task("frequent_word");
    const Feature& goal = task.rm_reward_feature();
    const ExactDistribution base_dist = task.ebm.base.exact_distribution();
    const ExactDistribution p = oracle::normalize_ebm(task.ebm).first;
    const double kl_p_a = oracle::kl(p, base_dist);

    struct Outcome {
      double satisfaction = 0.0;
      double kl_pi_a = 0.0;
      double distinct1 = 0.0;
    };
    const auto run_method = [&](Method m, std::uint64_t eval_seed) {
      TabularPolicy policy = TabularPolicy::uniform(task.space());
      TrainConfig cfg;
      cfg.method = m;
      cfg.batch_size = 64;
      cfg.epochs = 300;
      cfg.lr = 0.05;
      cfg.eval_every = cfg.epochs;
      cfg.seed = 17;
      const TrainResult res = run_training(policy, task, cfg);
      if (res.aborted) throw std::runtime_error("run aborted: " + res.abort_reason);
      Outcome out;
      const ExactDistribution pi = policy.exact_distribution();
      out.satisfaction = oracle::feature_moment(pi, goal);
      out.kl_pi_a = oracle::kl(pi, base_dist);
      std::vector<Sequence> samples;
      for (std::uint64_t k = 0; k < 256; ++k) {
        auto rng = rng::stream_rng(eval_seed, rng::Domain::test, k);
        samples.push_back(policy.sample(rng));
      }
      out.distinct1 = distinct_n(samples, 1);
      return out;
    };
    const Outcome rm = run_method(Method::reinforce, 9001);
    const Outcome dm = run_method(Method::gdcpp, 9002);

    char buf[240];
    std::snprintf(buf, sizeof(buf),
                  "maximizer: sat %.3f kl %.3f d1 %.3f; matcher: sat %.3f kl %.3f d1 %.3f; "
                  "target kl %.3f",
                  rm.satisfaction, rm.kl_pi_a, rm.distinct1, dm.satisfaction, dm.kl_pi_a,
                  dm.distinct1, kl_p_a);
    const bool ok = rm.satisfaction >= dm.satisfaction && rm.kl_pi_a >= 3.0 * dm.kl_pi_a &&
                    rm.distinct1 < dm.distinct1 && dm.satisfaction >= 0.6 &&
                    dm.kl_pi_a <= 2.0 * kl_p_a;
    report(9, label, ok, buf);
  } catch (const std::exception& e) {
    report_error(9, label, e);
  }
}

/* 10. Every command, re-run on its own config, reproduces byte-identical
 * tabular outputs. */
void criterion_10() {
  const std::string label = "all commands are byte-deterministic";
  try {
    const fs::path dir = fresh_dir("crit10");
    const std::string task_json = R"(
  "task": {
    "name": "marker_small",
    "space": {"vocab_size": 2, "seq_len": 3},
    "features": [{"id": "phi", "rule": "contains:1", "target": 0.7}]
  })";
    const std::string train_cfg = write_text(dir / "train.json", "{" + task_json + R"(,
  "train": {"method": "gdcpp", "batch_size": 16, "epochs": 10, "eval_every": 5, "seed": 7},
  "sweep": {"batch_sizes": [8, 16], "seeds": [0, 1], "methods": ["gdc", "gdcpp"]},
  "bench": {"mc_batch": 256}
})");

    using Runner = std::function<int(const commands::CommandOptions&)>;
    struct Step {
      const char* name;
      Runner run;
      std::vector<std::string> outputs;
    };
    std::vector<Step> steps = {
        {"fit-lambda", commands::cmd_fit_lambda, {"lambda_report.json"}},
        {"train", commands::cmd_train, {"train.csv", "policy_final.txt"}},
        {"sweep-batch", commands::cmd_sweep_batch, {"sweep.csv"}},
        {"bench-variance", commands::cmd_bench_variance, {"variance.csv"}},
        {"dump-distribution", commands::cmd_dump_distribution, {"distribution.csv"}},
    };
    for (const Step& step : steps) {
      for (const char* side : {"a", "b"}) {
        commands::CommandOptions opts;
        opts.config_path = train_cfg;
        opts.out_dir = (dir / (std::string(step.name) + "_" + side)).string();
        if (step.run(opts) != commands::kExitOk) {
          report(10, label, false, std::string(step.name) + " failed");
          return;
        }
      }
      for (const std::string& out : step.outputs) {
        if (slurp(dir / (std::string(step.name) + "_a") / out) !=
            slurp(dir / (std::string(step.name) + "_b") / out)) {
          report(10, label, false, std::string(step.name) + ": " + out + " differs across reruns");
          return;
        }
      }
    }

    // plot consumes the train output produced above.
    const std::string plot_cfg = write_text(
        dir / "plot.json",
        R"({"plot": {"inputs": [")" + (dir / "train_a" / "train.csv").string() + R"("]}})");
    for (const char* side : {"a", "b"}) {
      commands::CommandOptions opts;
      opts.config_path = plot_cfg;
      opts.out_dir = (dir / (std::string("plot_") + side)).string();
      if (commands::cmd_plot(opts) != commands::kExitOk) {
        report(10, label, false, "plot failed");
        return;
      }
    }
    if (slurp(dir / "plot_a" / "plot_tvd.svg") != slurp(dir / "plot_b" / "plot_tvd.svg")) {
      report(10, label, false, "plot output differs across reruns");
      return;
    }
    report(10, label, true, "6 commands, all tabular outputs byte-identical");
  } catch (const std::exception& e) {
    report_error(10, label, e);
  }
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  if (g_failures > 0) {
    std::printf("%d of 10 criteria failed\n", g_failures);
    return 1;
  }
  std::printf("all 10 criteria passed\n");
  return 0;
}
