#pragma once

/*
 * Binary sequence features and their composition algebra.
 *
 * A feature maps a sequence to {0, 1}. Primitives:
 *   contains_token(t)      some position equals t
 *   count_at_least(t, k)   at least k positions equal t
 *   prefix_is(p)           the first |p| tokens equal p
 *   parity_even(t)         t occurs an even number of times (zero included)
 * plus boolean combinators all_of / any_of / negation. all_of([]) is
 * constant 1, any_of([]) constant 0.
 *
 * Text rule syntax, used in configs and reports:
 *   contains:3   atleast:2:2   prefix:0,1   parity:1
 *   and[rule,rule,...]   or[rule,...]   not[rule]
 */

#include <string>
#include <vector>

#include "dpglab/policy.hpp"
#include "dpglab/seqspace.hpp"

namespace dpglab {

class Feature {
 public:
  enum class Kind { contains_token, count_at_least, prefix_is, parity_even, all_of, any_of, negation };

  static Feature contains_token(Token t);
  static Feature count_at_least(Token t, int k);
  static Feature prefix_is(std::vector<Token> prefix);
  static Feature parity_even(Token t);
  static Feature all_of(std::vector<Feature> children);
  static Feature any_of(std::vector<Feature> children);
  static Feature negation(Feature child);

  /* Parses the rule syntax above. Throws std::invalid_argument with the
   * offending fragment on malformed input. */
  static Feature parse(const std::string& rule);

  /* Canonical rule text; parse(to_string()) reproduces the feature. */
  std::string to_string() const;

  /* Token-range and prefix-length checks against a space. Throws
   * std::invalid_argument naming the violation. */
  void validate(const VocabSpec& space) const;

  bool eval(const Sequence& seq) const;

  Kind kind() const { return kind_; }

 private:
  Feature() = default;

  Kind kind_ = Kind::contains_token;
  Token token_ = 0;
  int threshold_ = 0;
  std::vector<Token> prefix_;
  std::vector<Feature> children_;
};

/* A named feature as it appears in task configs and metric columns. */
struct FeatureSpec {
  std::string id;
  Feature feature;
};

/* E_pi[phi] by exact enumeration. Requires an enumerable space. */
double base_rate(const Feature& feature, const TabularPolicy& policy);

}  // namespace dpglab
