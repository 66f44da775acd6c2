#include "dpglab/task.hpp"

#include <stdexcept>

namespace dpglab {

void Task::validate() const {
  ebm.validate();
  if (targets.size() != ebm.features.size()) {
    throw std::invalid_argument("task '" + name + "': " + std::to_string(targets.size()) +
                                " targets vs " + std::to_string(ebm.features.size()) +
                                " features");
  }
  switch (category) {
    case TaskCategory::pointwise:
      if (!ebm.pointwise_filter) {
        throw std::invalid_argument("task '" + name + "': pointwise tasks need a filter");
      }
      if (!ebm.features.empty()) {
        throw std::invalid_argument("task '" + name +
                                    "': pointwise tasks express constraints via the filter only");
      }
      break;
    case TaskCategory::distributional:
      if (ebm.pointwise_filter) {
        throw std::invalid_argument("task '" + name + "': distributional tasks have no filter");
      }
      if (ebm.features.empty()) {
        throw std::invalid_argument("task '" + name + "': distributional tasks need features");
      }
      for (double t : targets) {
        if (!(t > 0.0 && t < 1.0)) {
          throw std::invalid_argument("task '" + name + "': distributional target " +
                                      std::to_string(t) + " must lie strictly in (0,1)");
        }
      }
      break;
    case TaskCategory::hybrid:
      if (!ebm.pointwise_filter || ebm.features.empty()) {
        throw std::invalid_argument("task '" + name + "': hybrid tasks need filter and features");
      }
      break;
  }
  MomentTargets{targets}.validate(ebm);
}

const Feature& Task::rm_reward_feature() const {
  if (!ebm.pointwise_filter) {
    throw std::invalid_argument("task '" + name +
                                "': reward-maximization methods need a pointwise filter");
  }
  return ebm.pointwise_filter->feature;
}

const std::vector<std::string>& catalog_names() {
  static const std::vector<std::string> names = {
      "frequent_word", "rare_word",     "wordlist_pair",  "wordlist_any", "parity_even",
      "parity_odd",    "single_marker", "multi_topic",    "hybrid_marker", "hybrid_parity",
  };
  return names;
}

namespace {

Task pointwise(const std::string& name, const VocabSpec& space, const std::string& filter_rule) {
  Task t{name, EbmSpec(TabularPolicy::uniform(space)), {}, TaskCategory::pointwise};
  t.ebm.pointwise_filter = FeatureSpec{"constraint", Feature::parse(filter_rule)};
  return t;
}

}  // namespace

Task catalog_task(const std::string& name) {
  const VocabSpec small{4, 6};  // pointwise ladder
  const VocabSpec large{4, 8};  // distributional and hybrid ladder

  Task t{name, EbmSpec(TabularPolicy::uniform(large)), {}, TaskCategory::distributional};
  if (name == "frequent_word") {
    t = pointwise(name, small, "contains:3");
  } else if (name == "rare_word") {
    t = pointwise(name, small, "prefix:0,1,2,3,0");
  } else if (name == "wordlist_pair") {
    t = pointwise(name, small, "or[atleast:2:2,atleast:3:2]");
  } else if (name == "wordlist_any") {
    t = pointwise(name, small, "or[contains:2,contains:3]");
  } else if (name == "parity_even") {
    t = pointwise(name, small, "parity:1");
  } else if (name == "parity_odd") {
    t = pointwise(name, small, "not[parity:1]");
  } else if (name == "single_marker") {
    t.ebm.features = {FeatureSpec{"marker", Feature::parse("prefix:3")}};
    t.ebm.lambdas = {0.0};
    t.targets = {0.5};
  } else if (name == "multi_topic") {
    for (int i = 0; i < 4; ++i) {
      t.ebm.features.push_back(
          FeatureSpec{"topic_" + std::to_string(i), Feature::parse("atleast:" + std::to_string(i) + ":3")});
      t.ebm.lambdas.push_back(0.0);
      t.targets.push_back(0.25);
    }
  } else if (name == "hybrid_marker") {
    t.category = TaskCategory::hybrid;
    t.ebm.pointwise_filter = FeatureSpec{"constraint", Feature::parse("contains:2")};
    t.ebm.features = {FeatureSpec{"marker", Feature::parse("prefix:1")}};
    t.ebm.lambdas = {0.0};
    t.targets = {0.5};
  } else if (name == "hybrid_parity") {
    t.category = TaskCategory::hybrid;
    t.ebm.pointwise_filter = FeatureSpec{"constraint", Feature::parse("or[contains:2,contains:3]")};
    t.ebm.features = {FeatureSpec{"balance", Feature::parse("parity:1")}};
    t.ebm.lambdas = {0.0};
    t.targets = {0.5};
  } else {
    std::string known;
    for (const std::string& n : catalog_names()) known += (known.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown catalog task '" + name + "'; known tasks: " + known);
  }
  t.name = name;
  t.validate();
  return t;
}

}  // namespace dpglab
