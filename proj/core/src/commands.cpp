#include "dpglab/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dpglab/config.hpp"
#include "dpglab/csv.hpp"
#include "dpglab/estimators.hpp"
#include "dpglab/metrics.hpp"
#include "dpglab/oracle.hpp"
#include "dpglab/plot.hpp"
#include "dpglab/trainer.hpp"

namespace dpglab::commands {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr const char* kProvenance = "dpglab 0.1.0";

int guarded(const char* what, const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "%s: %s\n", what, e.what());
    return kExitInvalid;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "%s: %s\n", what, e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s: %s\n", what, e.what());
    return kExitAbort;
  }
}

struct Loaded {
  ExperimentConfig cfg;
  std::string base_dir;
};

Loaded load(const CommandOptions& opts) {
  Loaded l;
  l.cfg = load_config(opts.config_path);
  fs::path dir = fs::path(opts.config_path).parent_path();
  l.base_dir = dir.empty() ? "." : dir.string();
  if (opts.seed_override) {
    l.cfg.train.seed = *opts.seed_override;
    l.cfg.sweep.seeds = {*opts.seed_override};
  }
  return l;
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(base_dir) / p).string();
}

void write_manifest(const std::string& out_dir, const char* command,
                    const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds,
                    const std::vector<std::string>& outputs,
                    const std::vector<std::string>& aborted_runs) {
  Json m = Json::object();
  m["provenance"] = kProvenance;
  m["command"] = command;
  m["config_hash"] = config_hash(cfg);
  m["seeds"] = seeds;
  m["outputs"] = outputs;
  m["aborted_runs"] = aborted_runs;
  m["config"] = Json::parse(serialize_config(cfg));
  std::ofstream out(fs::path(out_dir) / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest.json");
  out << m.dump(2) << '\n';
}

std::vector<std::string> record_header(const Task& task) {
  std::vector<std::string> h = {"epoch", "samples_seen", "z_ma", "kl_p_pi", "kl_pi_a", "tvd"};
  for (const FeatureSpec& f : task.ebm.features) h.push_back("mean_phi_" + f.id);
  for (const char* tail : {"var_grad", "var_adv", "mean_abs_adv", "distinct_1"}) {
    h.push_back(tail);
  }
  return h;
}

std::vector<std::string> record_row(const TrainRecord& r) {
  std::vector<std::string> row = {csv::format_int(r.epoch),
                                  csv::format_int(r.samples_seen),
                                  csv::format_double(r.z_ma),
                                  csv::format_double(r.kl_p_pi),
                                  csv::format_double(r.kl_pi_a),
                                  csv::format_double(r.tvd)};
  for (double v : r.mean_phi) row.push_back(csv::format_double(v));
  row.push_back(csv::format_double(r.var_grad));
  row.push_back(csv::format_double(r.var_adv));
  row.push_back(csv::format_double(r.mean_abs_adv));
  row.push_back(csv::format_double(r.distinct_1));
  return row;
}

/* Fits lambdas in place when the task carries moment targets without
 * explicit values. Returns false when the fit missed tolerance. */
bool ensure_lambdas(Task& task, const Loaded& l) {
  if (task.ebm.features.empty()) return true;
  if (l.cfg.task.lambdas.has_value()) return true;
  const FitReport rep =
      fit_lambdas(task.ebm, MomentTargets{task.targets}, l.cfg.fit, l.cfg.train.seed);
  if (rep.capped) {
    std::fprintf(stderr, "warning: lambda pinned at +/-%g for an extreme target\n",
                 EbmSpec::kLambdaMax);
  }
  if (!rep.converged) {
    std::fprintf(stderr, "lambda fit missed tolerance %g after %d iterations\n",
                 l.cfg.fit.tolerance, rep.iterations);
    return false;
  }
  return true;
}

Json record_json(const TrainRecord& r, const Task& task) {
  Json j = Json::object();
  j["epoch"] = r.epoch;
  j["samples_seen"] = r.samples_seen;
  j["z_ma"] = r.z_ma;
  j["kl_p_pi"] = r.kl_p_pi;
  j["kl_pi_a"] = r.kl_pi_a;
  j["tvd"] = r.tvd;
  Json phi = Json::object();
  for (std::size_t i = 0; i < r.mean_phi.size() && i < task.ebm.features.size(); ++i) {
    phi[task.ebm.features[i].id] = r.mean_phi[i];
  }
  j["mean_phi"] = std::move(phi);
  j["var_grad"] = r.var_grad;
  j["var_adv"] = r.var_adv;
  j["mean_abs_adv"] = r.mean_abs_adv;
  j["distinct_1"] = r.distinct_1;
  j["wall_ms"] = r.wall_ms;
  return j;
}

int worker_cap() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("DPGLAB_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return static_cast<int>(hw);
}

}  // namespace

int cmd_fit_lambda(const CommandOptions& opts) {
  return guarded("fit-lambda", [&] {
    const Loaded l = load(opts);
    Task task = build_task(l.cfg.task, l.base_dir);
    if (task.ebm.features.empty()) {
      throw std::invalid_argument("task '" + task.name + "' has no moment features to fit");
    }
    const FitReport rep =
        fit_lambdas(task.ebm, MomentTargets{task.targets}, l.cfg.fit, l.cfg.train.seed);
    if (rep.capped) {
      std::fprintf(stderr, "warning: lambda pinned at +/-%g for an extreme target\n",
                   EbmSpec::kLambdaMax);
    }

    fs::create_directories(opts.out_dir);
    Json report = Json::object();
    report["task"] = task.name;
    report["converged"] = rep.converged;
    report["capped"] = rep.capped;
    report["iterations"] = rep.iterations;
    Json per_feature = Json::array();
    for (std::size_t i = 0; i < task.ebm.features.size(); ++i) {
      per_feature.push_back(Json{{"id", task.ebm.features[i].id},
                                 {"target", task.targets[i]},
                                 {"lambda", rep.lambdas[i]},
                                 {"residual", rep.residuals[i]}});
    }
    report["features"] = std::move(per_feature);
    {
      std::ofstream out(fs::path(opts.out_dir) / "lambda_report.json", std::ios::binary);
      if (!out) throw std::runtime_error("cannot write lambda_report.json");
      out << report.dump(2) << '\n';
    }
    write_manifest(opts.out_dir, "fit-lambda", l.cfg, {l.cfg.train.seed},
                   {"lambda_report.json"}, {});
    std::printf("fit-lambda: %s after %d iterations%s\n",
                rep.converged ? "converged" : "did not converge", rep.iterations,
                rep.capped ? " (capped)" : "");
    return rep.converged && !rep.capped ? kExitOk : kExitFitFailure;
  });
}

int cmd_train(const CommandOptions& opts) {
  return guarded("train", [&] {
    const Loaded l = load(opts);
    Task task = build_task(l.cfg.task, l.base_dir);
    if (!ensure_lambdas(task, l)) return kExitFitFailure;

    TrainConfig tc = l.cfg.train;
    fs::create_directories(opts.out_dir);
    if (tc.checkpoint_every > 0) {
      tc.checkpoint_dir = (fs::path(opts.out_dir) / "checkpoints").string();
      fs::create_directories(tc.checkpoint_dir);
    }

    TabularPolicy policy = task.ebm.base;
    std::int64_t rows = 0;
    TrainResult res;
    {
      csv::Writer writer((fs::path(opts.out_dir) / "train.csv").string(), record_header(task));
      res = train(policy, task, tc, [&](const TrainRecord& rec) {
        writer.row(record_row(rec));
        ++rows;
      });
    }
    policy.save_checkpoint((fs::path(opts.out_dir) / "policy_final.txt").string());

    Json summary = Json::object();
    summary["task"] = task.name;
    summary["method"] = method_name(tc.method);
    summary["batch_size"] = tc.batch_size;
    summary["epochs"] = tc.epochs;
    summary["seed"] = tc.seed;
    summary["z_mode"] = tc.z_mode == ZMode::exact ? "exact" : "z_ma";
    summary["lambdas"] = task.ebm.lambdas;
    summary["aborted"] = res.aborted;
    summary["abort_reason"] = res.abort_reason;
    summary["adv_mean"] = res.adv_mean;
    summary["adv_se"] = res.adv_se;
    summary["total_samples"] = res.total_samples;
    summary["wall_ms_total"] = res.wall_ms_total;
    summary["final"] = record_json(res.final_record, task);
    {
      std::ofstream out(fs::path(opts.out_dir) / "summary.json", std::ios::binary);
      if (!out) throw std::runtime_error("cannot write summary.json");
      out << summary.dump(2) << '\n';
    }

    std::vector<std::string> outputs = {"train.csv", "summary.json", "policy_final.txt"};
    if (tc.checkpoint_every > 0) outputs.push_back("checkpoints/");
    write_manifest(opts.out_dir, "train", l.cfg, {tc.seed}, outputs, {});
    std::printf("train: %s, %lld records, final kl_p_pi=%.6g tvd=%.6g%s\n",
                method_name(tc.method).c_str(), static_cast<long long>(rows),
                res.final_record.kl_p_pi, res.final_record.tvd,
                res.aborted ? (" [aborted: " + res.abort_reason + "]").c_str() : "");
    return res.aborted ? kExitAbort : kExitOk;
  });
}

int cmd_sweep_batch(const CommandOptions& opts) {
  return guarded("sweep-batch", [&] {
    const Loaded l = load(opts);
    Task task = build_task(l.cfg.task, l.base_dir);
    if (!ensure_lambdas(task, l)) return kExitFitFailure;

    std::vector<Method> methods = l.cfg.sweep.methods;
    if (methods.empty()) methods.push_back(l.cfg.train.method);

    struct RunSpec {
      Method method;
      std::uint64_t seed;
      int batch;
    };
    std::vector<RunSpec> runs;
    for (Method m : methods) {
      for (std::uint64_t seed : l.cfg.sweep.seeds) {
        for (int batch : l.cfg.sweep.batch_sizes) {
          runs.push_back(RunSpec{m, seed, batch});
        }
      }
    }
    // Validate every run config up front so schema problems exit 3 instead
    // of surfacing as mid-sweep aborts.
    for (const RunSpec& rs : runs) {
      TrainConfig tc = l.cfg.train;
      tc.method = rs.method;
      tc.seed = rs.seed;
      tc.batch_size = rs.batch;
      tc.checkpoint_every = 0;
      tc.checkpoint_dir.clear();
      tc.validate();
    }

    std::vector<std::vector<TrainRecord>> per_run(runs.size());
    std::vector<std::string> aborted;
    std::mutex mu;
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= runs.size()) break;
        const RunSpec& rs = runs[i];
        TrainConfig tc = l.cfg.train;
        tc.method = rs.method;
        tc.seed = rs.seed;
        tc.batch_size = rs.batch;
        tc.checkpoint_every = 0;
        tc.checkpoint_dir.clear();
        TabularPolicy policy = task.ebm.base;
        const std::string label = method_name(rs.method) + " seed=" + std::to_string(rs.seed) +
                                  " batch=" + std::to_string(rs.batch);
        try {
          const TrainResult r = train(policy, task, tc, [&](const TrainRecord& rec) {
            per_run[i].push_back(rec);
          });
          if (r.aborted) {
            const std::lock_guard<std::mutex> lock(mu);
            aborted.push_back(label + ": " + r.abort_reason);
          }
        } catch (const std::exception& e) {
          const std::lock_guard<std::mutex> lock(mu);
          aborted.push_back(label + ": " + e.what());
        }
      }
    };
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(worker_cap()), runs.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t + 1 < workers; ++t) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();

    // Merge order is independent of scheduling: sort run indices by
    // (method, seed, batch_size); records inside a run are already epoch
    // ascending.
    std::vector<std::size_t> order(runs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const RunSpec& ra = runs[a];
      const RunSpec& rb = runs[b];
      const std::string na = method_name(ra.method);
      const std::string nb = method_name(rb.method);
      if (na != nb) return na < nb;
      if (ra.seed != rb.seed) return ra.seed < rb.seed;
      return ra.batch < rb.batch;
    });

    fs::create_directories(opts.out_dir);
    std::vector<std::string> header = {"method", "seed", "batch_size"};
    for (const std::string& h : record_header(task)) header.push_back(h);
    csv::Writer writer((fs::path(opts.out_dir) / "sweep.csv").string(), header);
    for (std::size_t i : order) {
      const RunSpec& rs = runs[i];
      for (const TrainRecord& rec : per_run[i]) {
        std::vector<std::string> row = {method_name(rs.method),
                                        csv::format_int(static_cast<std::int64_t>(rs.seed)),
                                        csv::format_int(rs.batch)};
        for (const std::string& cell : record_row(rec)) row.push_back(cell);
        writer.row(row);
      }
    }

    write_manifest(opts.out_dir, "sweep-batch", l.cfg, l.cfg.sweep.seeds, {"sweep.csv"}, aborted);
    std::printf("sweep-batch: %zu runs, %zu aborted\n", runs.size(), aborted.size());
    return aborted.empty() ? kExitOk : kExitAbort;
  });
}

int cmd_bench_variance(const CommandOptions& opts) {
  return guarded("bench-variance", [&] {
    const Loaded l = load(opts);
    Task task = build_task(l.cfg.task, l.base_dir);
    if (!ensure_lambdas(task, l)) return kExitFitFailure;
    if (!method_is_distribution_matching(l.cfg.train.method)) {
      throw std::invalid_argument("bench-variance needs a distribution-matching method");
    }

    TrainConfig tc = l.cfg.train;
    if (tc.checkpoint_every <= 0) tc.checkpoint_every = tc.eval_every;
    fs::create_directories(opts.out_dir);
    tc.checkpoint_dir = (fs::path(opts.out_dir) / "checkpoints").string();
    fs::create_directories(tc.checkpoint_dir);

    TabularPolicy policy = task.ebm.base;
    TrainResult res;
    {
      csv::Writer writer((fs::path(opts.out_dir) / "train.csv").string(), record_header(task));
      res = train(policy, task, tc, [&](const TrainRecord& rec) { writer.row(record_row(rec)); });
    }
    if (res.aborted) {
      write_manifest(opts.out_dir, "bench-variance", l.cfg, {tc.seed}, {"train.csv"},
                     {method_name(tc.method) + ": " + res.abort_reason});
      return kExitAbort;
    }

    const auto [p, z] = oracle::normalize_ebm(task.ebm);
    const auto n = static_cast<std::size_t>(l.cfg.bench.mc_batch);
    csv::Writer writer(
        (fs::path(opts.out_dir) / "variance.csv").string(),
        {"epoch", "variant", "var_grad", "var_adv", "mean_abs_adv", "tvd", "mc_batch"});

    std::int64_t idx = 0;
    for (std::int64_t e = tc.checkpoint_every; e <= tc.epochs; e += tc.checkpoint_every, ++idx) {
      char name[64];
      std::snprintf(name, sizeof(name), "ckpt_%06lld", static_cast<long long>(e));
      const std::string stem = tc.checkpoint_dir + "/" + name;
      const TabularPolicy pol = TabularPolicy::load_checkpoint(stem + "_policy.txt");
      // The off-policy reference measure is the base policy, not the training
      // proposal: the adaptive proposal is refreshed to the current policy
      // whenever it improves, and against itself the baseline is a constant
      // shift of the advantage, which makes the variance comparison vacuous.
      const TabularPolicy& prop = task.ebm.base;
      const double tvd = oracle::tvd(p, pol.exact_distribution());

      // Both variants score the same sample set at the same parameters, so
      // the paired rows differ only by the baseline. The stream offset sits
      // far above anything training used.
      const std::uint64_t stream = (1ull << 32) + static_cast<std::uint64_t>(idx) * n;
      for (const bool with_baseline : {false, true}) {
        const auto batch = dpg_off_batch(pol, prop, task.ebm, z, with_baseline, n, tc.seed, stream);
        const VarianceDiagnostics diag = variance_diagnostics(batch, z);
        const double var_grad =
            oracle::dpg_off_gradient_variance(pol, prop, task.ebm, z, with_baseline) / (z * z);
        const double var_adv =
            oracle::dpg_off_advantage_variance(pol, prop, task.ebm, z, with_baseline) / (z * z);
        writer.row({csv::format_int(e), with_baseline ? "gdcpp" : "gdc",
                    csv::format_double(var_grad), csv::format_double(var_adv),
                    csv::format_double(diag.mean_abs_adv), csv::format_double(tvd),
                    csv::format_int(l.cfg.bench.mc_batch)});
      }
    }

    write_manifest(opts.out_dir, "bench-variance", l.cfg, {tc.seed},
                   {"train.csv", "variance.csv", "checkpoints/"}, {});
    std::printf("bench-variance: %lld checkpoints, mc_batch=%d\n", static_cast<long long>(idx),
                l.cfg.bench.mc_batch);
    return kExitOk;
  });
}

int cmd_plot(const CommandOptions& opts) {
  return guarded("plot", [&] {
    const Loaded l = load(opts);
    if (l.cfg.plot_inputs.empty()) {
      throw std::invalid_argument("plot: config needs plot.inputs with at least one CSV path");
    }
    std::vector<std::string> paths;
    for (const std::string& raw : l.cfg.plot_inputs) paths.push_back(resolve(l.base_dir, raw));
    fs::create_directories(opts.out_dir);
    const std::vector<std::string> written = plot::plot_csv_files(paths, opts.out_dir);
    write_manifest(opts.out_dir, "plot", l.cfg, {}, written, {});
    std::printf("plot: wrote %zu images\n", written.size());
    return kExitOk;
  });
}

int cmd_dump_distribution(const CommandOptions& opts) {
  return guarded("dump-distribution", [&] {
    const Loaded l = load(opts);
    Task task = build_task(l.cfg.task, l.base_dir);
    if (!ensure_lambdas(task, l)) return kExitFitFailure;

    const auto [p, z] = oracle::normalize_ebm(task.ebm);
    fs::create_directories(opts.out_dir);
    csv::Writer writer((fs::path(opts.out_dir) / "distribution.csv").string(),
                       {"rank", "sequence", "prob"});
    for_each_sequence(task.space(), [&](std::uint64_t rank, const Sequence& seq) {
      writer.row({csv::format_int(static_cast<std::int64_t>(rank)), format_sequence(seq),
                  csv::format_double(p.probs[rank])});
    });
    write_manifest(opts.out_dir, "dump-distribution", l.cfg, {l.cfg.train.seed},
                   {"distribution.csv"}, {});
    std::printf("dump-distribution: %llu sequences, z=%.10g\n",
                static_cast<unsigned long long>(task.space().sequence_count()), z);
    return kExitOk;
  });
}

}  // namespace dpglab::commands
