#pragma once

/*
 * A task bundles the target EBM with its moment targets and category. The
 * built-in catalog mirrors a ladder of constraint shapes at toy scale:
 * frequent and rare single-token pointwise constraints, token-list
 * composites, parity (non-local) constraints, single- and multi-feature
 * distributional targets, and hybrid filter+feature tasks.
 */

#include <string>
#include <vector>

#include "dpglab/ebm.hpp"
#include "dpglab/features.hpp"

namespace dpglab {

enum class TaskCategory { pointwise, distributional, hybrid };

struct Task {
  std::string name;
  EbmSpec ebm;                   // base a, soft features + lambdas, optional filter
  std::vector<double> targets;   // one per soft feature
  TaskCategory category = TaskCategory::pointwise;

  const VocabSpec& space() const { return ebm.base.space(); }

  /* Category and attainability checks. Throws std::invalid_argument or
   * std::domain_error naming the violation. */
  void validate() const;

  /* The reward feature for reward-maximization methods: the pointwise
   * filter. Throws std::invalid_argument when the task has none. */
  const Feature& rm_reward_feature() const;
};

const std::vector<std::string>& catalog_names();

/* Builds a catalog task with a uniform base policy and zero lambdas (fitting
 * is a separate step). Throws std::invalid_argument on unknown names. */
Task catalog_task(const std::string& name);

}  // namespace dpglab
