#include "dpglab/seqspace.hpp"

#include <limits>
#include <stdexcept>
#include <string>

namespace dpglab {

void VocabSpec::validate() const {
  if (vocab_size < 2) {
    throw std::invalid_argument("VocabSpec: vocab_size must be >= 2, got " +
                                std::to_string(vocab_size));
  }
  if (seq_len < 1) {
    throw std::invalid_argument("VocabSpec: seq_len must be >= 1, got " +
                                std::to_string(seq_len));
  }
}

std::uint64_t VocabSpec::sequence_count() const {
  validate();
  std::uint64_t n = 1;
  const auto v = static_cast<std::uint64_t>(vocab_size);
  for (int i = 0; i < seq_len; ++i) {
    if (n > std::numeric_limits<std::uint64_t>::max() / v) {
      throw std::overflow_error("VocabSpec: V^L overflows 64 bits (V=" +
                                std::to_string(vocab_size) + ", L=" + std::to_string(seq_len) + ")");
    }
    n *= v;
  }
  return n;
}

bool VocabSpec::enumerable() const {
  try {
    return sequence_count() <= kMaxEnumerable;
  } catch (const std::overflow_error&) {
    return false;
  }
}

void VocabSpec::require_enumerable() const {
  if (!enumerable()) {
    throw std::domain_error("space V=" + std::to_string(vocab_size) + ", L=" +
                            std::to_string(seq_len) + " exceeds the enumerability bound 2^22");
  }
}

Sequence sequence_at(const VocabSpec& space, std::uint64_t rank) {
  const std::uint64_t n = space.sequence_count();
  if (rank >= n) {
    throw std::out_of_range("sequence_at: rank " + std::to_string(rank) +
                            " >= sequence count " + std::to_string(n));
  }
  Sequence seq(static_cast<std::size_t>(space.seq_len), 0);
  const auto v = static_cast<std::uint64_t>(space.vocab_size);
  for (int pos = space.seq_len - 1; pos >= 0; --pos) {
    seq[static_cast<std::size_t>(pos)] = static_cast<Token>(rank % v);
    rank /= v;
  }
  return seq;
}

std::uint64_t index_of(const VocabSpec& space, const Sequence& seq) {
  space.validate();
  if (seq.size() != static_cast<std::size_t>(space.seq_len)) {
    throw std::invalid_argument("index_of: sequence length " + std::to_string(seq.size()) +
                                " does not match L=" + std::to_string(space.seq_len));
  }
  std::uint64_t rank = 0;
  for (Token t : seq) {
    if (t < 0 || t >= space.vocab_size) {
      throw std::invalid_argument("index_of: token " + std::to_string(t) +
                                  " outside vocabulary of size " + std::to_string(space.vocab_size));
    }
    rank = rank * static_cast<std::uint64_t>(space.vocab_size) + static_cast<std::uint64_t>(t);
  }
  return rank;
}

std::string format_sequence(const Sequence& seq) {
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i > 0) out.push_back('-');
    out += std::to_string(seq[i]);
  }
  return out;
}

}  // namespace dpglab
