#include "dpglab/features.hpp"

#include <cctype>
#include <stdexcept>

#include "dpglab/numerics.hpp"

namespace dpglab {
namespace {

[[noreturn]] void parse_fail(const std::string& rule, const std::string& why) {
  throw std::invalid_argument("feature rule '" + rule + "': " + why);
}

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

int parse_int(const std::string& rule, const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) parse_fail(rule, "expected an integer");
  std::size_t pos = 0;
  int value = 0;
  try {
    value = std::stoi(t, &pos);
  } catch (const std::exception&) {
    parse_fail(rule, "'" + t + "' is not an integer");
  }
  if (pos != t.size()) parse_fail(rule, "'" + t + "' is not an integer");
  return value;
}

/* Splits on commas at bracket depth zero. */
std::vector<std::string> split_args(const std::string& rule, const std::string& body) {
  std::vector<std::string> parts;
  int depth = 0;
  std::string cur;
  for (char c : body) {
    if (c == '[') ++depth;
    if (c == ']') --depth;
    if (depth < 0) parse_fail(rule, "unbalanced ']'");
    if (c == ',' && depth == 0) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (depth != 0) parse_fail(rule, "unbalanced '['");
  parts.push_back(cur);
  return parts;
}

}  // namespace

Feature Feature::contains_token(Token t) {
  Feature f;
  f.kind_ = Kind::contains_token;
  f.token_ = t;
  return f;
}

Feature Feature::count_at_least(Token t, int k) {
  Feature f;
  f.kind_ = Kind::count_at_least;
  f.token_ = t;
  f.threshold_ = k;
  return f;
}

Feature Feature::prefix_is(std::vector<Token> prefix) {
  Feature f;
  f.kind_ = Kind::prefix_is;
  f.prefix_ = std::move(prefix);
  return f;
}

Feature Feature::parity_even(Token t) {
  Feature f;
  f.kind_ = Kind::parity_even;
  f.token_ = t;
  return f;
}

Feature Feature::all_of(std::vector<Feature> children) {
  Feature f;
  f.kind_ = Kind::all_of;
  f.children_ = std::move(children);
  return f;
}

Feature Feature::any_of(std::vector<Feature> children) {
  Feature f;
  f.kind_ = Kind::any_of;
  f.children_ = std::move(children);
  return f;
}

Feature Feature::negation(Feature child) {
  Feature f;
  f.kind_ = Kind::negation;
  f.children_.push_back(std::move(child));
  return f;
}

Feature Feature::parse(const std::string& rule) {
  const std::string r = trim(rule);
  if (r.empty()) parse_fail(rule, "empty rule");

  const auto starts_with = [&](const char* p) { return r.rfind(p, 0) == 0; };

  if (starts_with("contains:")) {
    return contains_token(static_cast<Token>(parse_int(rule, r.substr(9))));
  }
  if (starts_with("atleast:")) {
    const std::string body = r.substr(8);
    const std::size_t colon = body.find(':');
    if (colon == std::string::npos) parse_fail(rule, "atleast needs 'atleast:<token>:<count>'");
    const int t = parse_int(rule, body.substr(0, colon));
    const int k = parse_int(rule, body.substr(colon + 1));
    if (k < 0) parse_fail(rule, "count must be >= 0");
    return count_at_least(static_cast<Token>(t), k);
  }
  if (starts_with("prefix:")) {
    std::vector<Token> prefix;
    for (const std::string& part : split_args(rule, r.substr(7))) {
      prefix.push_back(static_cast<Token>(parse_int(rule, part)));
    }
    if (prefix.empty()) parse_fail(rule, "prefix needs at least one token");
    return prefix_is(std::move(prefix));
  }
  if (starts_with("parity:")) {
    return parity_even(static_cast<Token>(parse_int(rule, r.substr(7))));
  }

  for (const char* name : {"and", "or", "not"}) {
    if (!starts_with(name)) continue;
    const std::size_t open = std::string(name).size();
    if (open >= r.size() || r[open] != '[') continue;
    if (r.back() != ']') parse_fail(rule, "missing closing ']'");
    const std::string body = r.substr(open + 1, r.size() - open - 2);
    std::vector<Feature> children;
    if (!trim(body).empty()) {
      for (const std::string& part : split_args(rule, body)) children.push_back(parse(part));
    }
    const std::string n = name;
    if (n == "not") {
      if (children.size() != 1) parse_fail(rule, "not[] takes exactly one rule");
      return negation(std::move(children[0]));
    }
    return n == "and" ? all_of(std::move(children)) : any_of(std::move(children));
  }

  parse_fail(rule, "unrecognized rule");
}

std::string Feature::to_string() const {
  switch (kind_) {
    case Kind::contains_token:
      return "contains:" + std::to_string(token_);
    case Kind::count_at_least:
      return "atleast:" + std::to_string(token_) + ":" + std::to_string(threshold_);
    case Kind::prefix_is: {
      std::string out = "prefix:";
      for (std::size_t i = 0; i < prefix_.size(); ++i) {
        if (i > 0) out.push_back(',');
        out += std::to_string(prefix_[i]);
      }
      return out;
    }
    case Kind::parity_even:
      return "parity:" + std::to_string(token_);
    case Kind::all_of:
    case Kind::any_of: {
      std::string out = kind_ == Kind::all_of ? "and[" : "or[";
      for (std::size_t i = 0; i < children_.size(); ++i) {
        if (i > 0) out.push_back(',');
        out += children_[i].to_string();
      }
      out.push_back(']');
      return out;
    }
    case Kind::negation:
      return "not[" + children_[0].to_string() + "]";
  }
  return "";
}

void Feature::validate(const VocabSpec& space) const {
  space.validate();
  const auto check_token = [&](Token t) {
    if (t < 0 || t >= space.vocab_size) {
      throw std::invalid_argument("feature '" + to_string() + "': token " + std::to_string(t) +
                                  " outside vocabulary of size " + std::to_string(space.vocab_size));
    }
  };
  switch (kind_) {
    case Kind::contains_token:
    case Kind::parity_even:
      check_token(token_);
      break;
    case Kind::count_at_least:
      check_token(token_);
      if (threshold_ > space.seq_len) {
        throw std::invalid_argument("feature '" + to_string() + "': count " +
                                    std::to_string(threshold_) + " exceeds sequence length " +
                                    std::to_string(space.seq_len));
      }
      break;
    case Kind::prefix_is:
      if (prefix_.size() > static_cast<std::size_t>(space.seq_len)) {
        throw std::invalid_argument("feature '" + to_string() + "': prefix longer than L=" +
                                    std::to_string(space.seq_len));
      }
      for (Token t : prefix_) check_token(t);
      break;
    case Kind::all_of:
    case Kind::any_of:
    case Kind::negation:
      for (const Feature& c : children_) c.validate(space);
      break;
  }
}

bool Feature::eval(const Sequence& seq) const {
  switch (kind_) {
    case Kind::contains_token:
      for (Token t : seq) {
        if (t == token_) return true;
      }
      return false;
    case Kind::count_at_least: {
      int count = 0;
      for (Token t : seq) {
        if (t == token_ && ++count >= threshold_) return true;
      }
      return threshold_ <= 0;
    }
    case Kind::prefix_is:
      if (prefix_.size() > seq.size()) return false;
      for (std::size_t i = 0; i < prefix_.size(); ++i) {
        if (seq[i] != prefix_[i]) return false;
      }
      return true;
    case Kind::parity_even: {
      int count = 0;
      for (Token t : seq) {
        if (t == token_) ++count;
      }
      return count % 2 == 0;
    }
    case Kind::all_of:
      for (const Feature& c : children_) {
        if (!c.eval(seq)) return false;
      }
      return true;
    case Kind::any_of:
      for (const Feature& c : children_) {
        if (c.eval(seq)) return true;
      }
      return false;
    case Kind::negation:
      return !children_[0].eval(seq);
  }
  return false;
}

double base_rate(const Feature& feature, const TabularPolicy& policy) {
  feature.validate(policy.space());
  const ExactDistribution dist = policy.exact_distribution();
  KahanAccumulator acc;
  for_each_sequence(policy.space(), [&](std::uint64_t rank, const Sequence& seq) {
    if (feature.eval(seq)) acc.add(dist.probs[static_cast<std::size_t>(rank)]);
  });
  return acc.sum();
}

}  // namespace dpglab
