#include "dpglab/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dpglab {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw std::invalid_argument("config: " + path + ": " + why);
}

void require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

void check_keys(const Json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed) {
      if (item.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      std::string expected;
      for (const char* k : allowed) {
        if (!expected.empty()) expected += ", ";
        expected += k;
      }
      fail(path, "unknown key '" + item.key() + "' (expected one of: " + expected + ")");
    }
  }
}

std::string key_path(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

int get_int(const Json& obj, const std::string& path, const char* key, int fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_number_integer()) fail(key_path(path, key), "expected an integer");
  return v.get<int>();
}

std::uint64_t get_u64(const Json& obj, const std::string& path, const char* key,
                      std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
  fail(key_path(path, key), "expected a non-negative integer");
}

double get_double(const Json& obj, const std::string& path, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_number()) fail(key_path(path, key), "expected a number");
  return v.get<double>();
}

std::string get_string(const Json& obj, const std::string& path, const char* key,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_string()) fail(key_path(path, key), "expected a string");
  return v.get<std::string>();
}

TaskCategory category_from_name(const std::string& name, const std::string& path) {
  if (name == "pointwise") return TaskCategory::pointwise;
  if (name == "distributional") return TaskCategory::distributional;
  if (name == "hybrid") return TaskCategory::hybrid;
  fail(path, "unknown category '" + name + "' (expected pointwise, distributional, hybrid)");
}

std::string category_name(TaskCategory c) {
  switch (c) {
    case TaskCategory::pointwise:
      return "pointwise";
    case TaskCategory::distributional:
      return "distributional";
    case TaskCategory::hybrid:
      return "hybrid";
  }
  return "";
}

PolicySource parse_base_policy(const Json& v, const std::string& path) {
  PolicySource src;
  if (v.is_string()) {
    if (v.get<std::string>() != "uniform") {
      fail(path, "string form must be \"uniform\"");
    }
    src.kind = PolicySource::Kind::uniform;
    return src;
  }
  require_object(v, path);
  check_keys(v, path, {"checkpoint", "randomized"});
  if (v.size() != 1) fail(path, "expected exactly one of checkpoint, randomized");
  if (v.contains("checkpoint")) {
    if (!v.at("checkpoint").is_string()) fail(key_path(path, "checkpoint"), "expected a string");
    src.kind = PolicySource::Kind::checkpoint;
    src.checkpoint_path = v.at("checkpoint").get<std::string>();
    if (src.checkpoint_path.empty()) fail(key_path(path, "checkpoint"), "path must not be empty");
    return src;
  }
  const Json& r = v.at("randomized");
  const std::string rpath = key_path(path, "randomized");
  require_object(r, rpath);
  check_keys(r, rpath, {"seed", "scale"});
  src.kind = PolicySource::Kind::randomized;
  src.seed = get_u64(r, rpath, "seed", 0);
  src.scale = get_double(r, rpath, "scale", 1.0);
  if (!(src.scale > 0.0)) fail(key_path(rpath, "scale"), "must be positive");
  return src;
}

TaskConfig parse_task(const Json& v, const std::string& path) {
  TaskConfig tc;
  require_object(v, path);
  if (v.contains("catalog")) {
    if (v.size() != 1) fail(path, "catalog tasks take no other keys");
    if (!v.at("catalog").is_string()) fail(key_path(path, "catalog"), "expected a string");
    tc.catalog = v.at("catalog").get<std::string>();
    if (tc.catalog.empty()) fail(key_path(path, "catalog"), "name must not be empty");
    return tc;
  }
  check_keys(v, path,
             {"name", "space", "base_policy", "category", "filter", "features", "lambdas"});
  if (!v.contains("space")) fail(path, "inline tasks need a space");
  const Json& sp = v.at("space");
  const std::string spath = key_path(path, "space");
  require_object(sp, spath);
  check_keys(sp, spath, {"vocab_size", "seq_len"});
  if (!sp.contains("vocab_size") || !sp.contains("seq_len")) {
    fail(spath, "needs vocab_size and seq_len");
  }
  tc.space = VocabSpec{get_int(sp, spath, "vocab_size", 0), get_int(sp, spath, "seq_len", 0)};
  tc.name = get_string(v, path, "name", "custom");
  if (v.contains("base_policy")) {
    tc.base_policy = parse_base_policy(v.at("base_policy"), key_path(path, "base_policy"));
  }
  if (v.contains("filter")) {
    if (!v.at("filter").is_string()) fail(key_path(path, "filter"), "expected a rule string");
    tc.filter_rule = v.at("filter").get<std::string>();
  }
  if (v.contains("features")) {
    const Json& feats = v.at("features");
    const std::string fpath = key_path(path, "features");
    if (!feats.is_array()) fail(fpath, "expected an array");
    for (std::size_t i = 0; i < feats.size(); ++i) {
      const std::string ipath = fpath + "[" + std::to_string(i) + "]";
      const Json& f = feats.at(i);
      require_object(f, ipath);
      check_keys(f, ipath, {"id", "rule", "target"});
      if (!f.contains("id") || !f.contains("rule") || !f.contains("target")) {
        fail(ipath, "needs id, rule and target");
      }
      FeatureEntry e;
      e.id = get_string(f, ipath, "id", "");
      e.rule = get_string(f, ipath, "rule", "");
      e.target = get_double(f, ipath, "target", 0.0);
      tc.features.push_back(std::move(e));
    }
  }
  if (v.contains("lambdas")) {
    const Json& ls = v.at("lambdas");
    const std::string lpath = key_path(path, "lambdas");
    if (!ls.is_array()) fail(lpath, "expected an array of numbers");
    std::vector<double> lambdas;
    for (const Json& x : ls) {
      if (!x.is_number()) fail(lpath, "expected an array of numbers");
      lambdas.push_back(x.get<double>());
    }
    if (lambdas.size() != tc.features.size()) {
      fail(lpath, "length must match features");
    }
    tc.lambdas = std::move(lambdas);
  }
  if (v.contains("category")) {
    tc.category = category_from_name(get_string(v, path, "category", ""),
                                     key_path(path, "category"));
  } else if (tc.filter_rule && tc.features.empty()) {
    tc.category = TaskCategory::pointwise;
  } else if (tc.filter_rule) {
    tc.category = TaskCategory::hybrid;
  } else {
    tc.category = TaskCategory::distributional;
  }
  return tc;
}

FitConfig parse_fit(const Json& v, const std::string& path) {
  FitConfig fc;
  require_object(v, path);
  check_keys(v, path, {"mode", "lr", "tolerance", "max_iters", "sample_size"});
  const std::string mode = get_string(v, path, "mode", "exact");
  if (mode == "exact") {
    fc.mode = FitMode::exact;
  } else if (mode == "snis") {
    fc.mode = FitMode::snis;
  } else {
    fail(key_path(path, "mode"), "expected exact or snis");
  }
  fc.lr = get_double(v, path, "lr", fc.lr);
  fc.tolerance = get_double(v, path, "tolerance", fc.tolerance);
  fc.max_iters = get_int(v, path, "max_iters", fc.max_iters);
  fc.sample_size = get_u64(v, path, "sample_size", fc.sample_size);
  return fc;
}

TrainConfig parse_train(const Json& v, const std::string& path) {
  TrainConfig tc;
  require_object(v, path);
  check_keys(v, path,
             {"method", "batch_size", "epochs", "lr", "optimizer", "adam_beta1", "adam_beta2",
              "adam_epsilon", "beta", "z_mode", "seed", "eval_every", "checkpoint_every"});
  if (v.contains("method")) {
    tc.method = method_from_name(get_string(v, path, "method", ""));
  }
  tc.batch_size = get_int(v, path, "batch_size", tc.batch_size);
  tc.epochs = get_int(v, path, "epochs", tc.epochs);
  tc.lr = get_double(v, path, "lr", tc.lr);
  if (v.contains("optimizer")) {
    const std::string opt = get_string(v, path, "optimizer", "");
    if (opt == "sgd") {
      tc.optimizer = OptimizerKind::sgd;
    } else if (opt == "adam") {
      tc.optimizer = OptimizerKind::adam;
    } else {
      fail(key_path(path, "optimizer"), "expected sgd or adam");
    }
  }
  tc.adam.beta1 = get_double(v, path, "adam_beta1", tc.adam.beta1);
  tc.adam.beta2 = get_double(v, path, "adam_beta2", tc.adam.beta2);
  tc.adam.epsilon = get_double(v, path, "adam_epsilon", tc.adam.epsilon);
  tc.beta = get_double(v, path, "beta", tc.beta);
  if (v.contains("z_mode")) {
    const std::string zm = get_string(v, path, "z_mode", "");
    if (zm == "exact") {
      tc.z_mode = ZMode::exact;
    } else if (zm == "z_ma") {
      tc.z_mode = ZMode::z_ma;
    } else {
      fail(key_path(path, "z_mode"), "expected exact or z_ma");
    }
  }
  tc.seed = get_u64(v, path, "seed", tc.seed);
  tc.eval_every = get_int(v, path, "eval_every", tc.eval_every);
  tc.checkpoint_every = get_int(v, path, "checkpoint_every", tc.checkpoint_every);
  return tc;
}

SweepConfig parse_sweep(const Json& v, const std::string& path) {
  SweepConfig sc;
  require_object(v, path);
  check_keys(v, path, {"batch_sizes", "seeds", "methods"});
  if (v.contains("batch_sizes")) {
    const Json& bs = v.at("batch_sizes");
    if (!bs.is_array() || bs.empty()) fail(key_path(path, "batch_sizes"), "expected a non-empty array");
    sc.batch_sizes.clear();
    for (const Json& x : bs) {
      if (!x.is_number_integer()) fail(key_path(path, "batch_sizes"), "expected integers");
      sc.batch_sizes.push_back(x.get<int>());
    }
  }
  if (v.contains("seeds")) {
    const Json& ss = v.at("seeds");
    if (!ss.is_array() || ss.empty()) fail(key_path(path, "seeds"), "expected a non-empty array");
    sc.seeds.clear();
    for (const Json& x : ss) {
      if (!x.is_number_unsigned() && !(x.is_number_integer() && x.get<std::int64_t>() >= 0)) {
        fail(key_path(path, "seeds"), "expected non-negative integers");
      }
      sc.seeds.push_back(x.get<std::uint64_t>());
    }
  }
  if (v.contains("methods")) {
    // An empty list is the documented fallback state (use train.method), and
    // the canonical serialization of a default config round-trips through it.
    const Json& ms = v.at("methods");
    if (!ms.is_array()) fail(key_path(path, "methods"), "expected an array");
    for (const Json& x : ms) {
      if (!x.is_string()) fail(key_path(path, "methods"), "expected method names");
      sc.methods.push_back(method_from_name(x.get<std::string>()));
    }
  }
  return sc;
}

Json dump_base_policy(const PolicySource& src) {
  switch (src.kind) {
    case PolicySource::Kind::uniform:
      return Json("uniform");
    case PolicySource::Kind::checkpoint:
      return Json{{"checkpoint", src.checkpoint_path}};
    case PolicySource::Kind::randomized:
      return Json{{"randomized", Json{{"seed", src.seed}, {"scale", src.scale}}}};
  }
  return Json();
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  Json root;
  try {
    root = Json::parse(json_text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  require_object(root, "<root>");
  check_keys(root, "<root>", {"task", "fit", "train", "sweep", "bench", "plot"});

  ExperimentConfig cfg;
  if (root.contains("task")) cfg.task = parse_task(root.at("task"), "task");
  if (root.contains("fit")) cfg.fit = parse_fit(root.at("fit"), "fit");
  if (root.contains("train")) cfg.train = parse_train(root.at("train"), "train");
  if (root.contains("sweep")) cfg.sweep = parse_sweep(root.at("sweep"), "sweep");
  if (root.contains("bench")) {
    const Json& b = root.at("bench");
    require_object(b, "bench");
    check_keys(b, "bench", {"mc_batch"});
    cfg.bench.mc_batch = get_int(b, "bench", "mc_batch", cfg.bench.mc_batch);
    if (cfg.bench.mc_batch < 2) fail("bench.mc_batch", "must be at least 2");
  }
  if (root.contains("plot")) {
    const Json& p = root.at("plot");
    require_object(p, "plot");
    check_keys(p, "plot", {"inputs"});
    if (p.contains("inputs")) {
      const Json& in = p.at("inputs");
      if (!in.is_array()) fail("plot.inputs", "expected an array of paths");
      for (const Json& x : in) {
        if (!x.is_string()) fail("plot.inputs", "expected an array of paths");
        cfg.plot_inputs.push_back(x.get<std::string>());
      }
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  Json root = Json::object();

  Json task = Json::object();
  if (!cfg.task.catalog.empty()) {
    task["catalog"] = cfg.task.catalog;
  } else {
    task["name"] = cfg.task.name;
    task["space"] = Json{{"vocab_size", cfg.task.space.vocab_size},
                         {"seq_len", cfg.task.space.seq_len}};
    task["base_policy"] = dump_base_policy(cfg.task.base_policy);
    task["category"] = category_name(cfg.task.category);
    if (cfg.task.filter_rule) task["filter"] = *cfg.task.filter_rule;
    Json feats = Json::array();
    for (const FeatureEntry& e : cfg.task.features) {
      feats.push_back(Json{{"id", e.id}, {"rule", e.rule}, {"target", e.target}});
    }
    task["features"] = std::move(feats);
    if (cfg.task.lambdas) task["lambdas"] = *cfg.task.lambdas;
  }
  root["task"] = std::move(task);

  root["fit"] = Json{{"mode", cfg.fit.mode == FitMode::exact ? "exact" : "snis"},
                     {"lr", cfg.fit.lr},
                     {"tolerance", cfg.fit.tolerance},
                     {"max_iters", cfg.fit.max_iters},
                     {"sample_size", cfg.fit.sample_size}};

  root["train"] = Json{{"method", method_name(cfg.train.method)},
                       {"batch_size", cfg.train.batch_size},
                       {"epochs", cfg.train.epochs},
                       {"lr", cfg.train.lr},
                       {"optimizer", cfg.train.optimizer == OptimizerKind::sgd ? "sgd" : "adam"},
                       {"adam_beta1", cfg.train.adam.beta1},
                       {"adam_beta2", cfg.train.adam.beta2},
                       {"adam_epsilon", cfg.train.adam.epsilon},
                       {"beta", cfg.train.beta},
                       {"z_mode", cfg.train.z_mode == ZMode::exact ? "exact" : "z_ma"},
                       {"seed", cfg.train.seed},
                       {"eval_every", cfg.train.eval_every},
                       {"checkpoint_every", cfg.train.checkpoint_every}};

  Json methods = Json::array();
  for (Method m : cfg.sweep.methods) methods.push_back(method_name(m));
  root["sweep"] = Json{{"batch_sizes", cfg.sweep.batch_sizes},
                       {"seeds", cfg.sweep.seeds},
                       {"methods", std::move(methods)}};

  root["bench"] = Json{{"mc_batch", cfg.bench.mc_batch}};
  root["plot"] = Json{{"inputs", cfg.plot_inputs}};

  return root.dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = serialize_config(cfg);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Task build_task(const TaskConfig& tc, const std::string& base_dir) {
  if (!tc.catalog.empty()) {
    Task task = catalog_task(tc.catalog);
    task.validate();
    return task;
  }
  tc.space.validate();
  TabularPolicy base = TabularPolicy::uniform(tc.space);
  switch (tc.base_policy.kind) {
    case PolicySource::Kind::uniform:
      break;
    case PolicySource::Kind::checkpoint: {
      std::filesystem::path p(tc.base_policy.checkpoint_path);
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      base = TabularPolicy::load_checkpoint(p.string());
      if (!(base.space() == tc.space)) {
        throw std::invalid_argument("config: checkpoint space does not match task space");
      }
      break;
    }
    case PolicySource::Kind::randomized:
      base = TabularPolicy::randomized(tc.space, tc.base_policy.seed, tc.base_policy.scale);
      break;
  }

  EbmSpec ebm(std::move(base));
  if (tc.filter_rule) {
    Feature f = Feature::parse(*tc.filter_rule);
    f.validate(tc.space);
    ebm.pointwise_filter = FeatureSpec{"constraint", std::move(f)};
  }
  std::vector<double> targets;
  for (const FeatureEntry& e : tc.features) {
    Feature f = Feature::parse(e.rule);
    f.validate(tc.space);
    ebm.features.push_back(FeatureSpec{e.id, std::move(f)});
    targets.push_back(e.target);
  }
  ebm.lambdas = tc.lambdas ? *tc.lambdas : std::vector<double>(tc.features.size(), 0.0);

  Task task{tc.name, std::move(ebm), std::move(targets), tc.category};
  task.validate();
  return task;
}

}  // namespace dpglab
