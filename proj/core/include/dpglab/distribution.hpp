#pragma once

#include <vector>

#include "dpglab/seqspace.hpp"

namespace dpglab {

/* A full probability table over an enumerable space, indexed by sequence
 * rank. probs[r] corresponds to sequence_at(space, r). */
struct ExactDistribution {
  VocabSpec space;
  std::vector<double> probs;
};

}  // namespace dpglab
