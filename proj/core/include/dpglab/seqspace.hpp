#pragma once

/*
 * Exactly enumerable token-sequence spaces.
 *
 * A space is all V^L fixed-length sequences over vocabulary {0..V-1}.
 * Canonical order is lexicographic with token 0 first, which coincides with
 * reading a sequence as an L-digit base-V number. Everything downstream
 * (distribution vectors, reward tables, CSV dumps) indexes sequences by that
 * rank, so the bijection here is the ground truth for the whole library.
 */

#include <cstdint>
#include <string>
#include <vector>

namespace dpglab {

using Token = std::int32_t;
using Sequence = std::vector<Token>;

struct VocabSpec {
  int vocab_size = 0;  // V >= 2
  int seq_len = 0;     // L >= 1

  /* Spaces above this size may not be enumerated; oracle work refuses them. */
  static constexpr std::uint64_t kMaxEnumerable = 1ull << 22;

  bool operator==(const VocabSpec&) const = default;

  /* Throws std::invalid_argument unless V >= 2 and L >= 1. */
  void validate() const;

  /* V^L. Throws std::overflow_error if it does not fit in 64 bits. */
  std::uint64_t sequence_count() const;

  bool enumerable() const;

  /* Throws std::domain_error naming V and L when V^L > kMaxEnumerable. */
  void require_enumerable() const;
};

/* Rank -> sequence, canonical order. rank must be < sequence_count(). */
Sequence sequence_at(const VocabSpec& space, std::uint64_t rank);

/* Sequence -> rank. Throws std::invalid_argument on wrong length or a token
 * outside [0, V). */
std::uint64_t index_of(const VocabSpec& space, const Sequence& seq);

/* Calls fn(rank, seq) for every sequence in canonical order. The Sequence
 * buffer is reused between calls; copy it if you keep it. Requires an
 * enumerable space. */
template <typename Fn>
void for_each_sequence(const VocabSpec& space, Fn&& fn) {
  space.require_enumerable();
  const std::uint64_t n = space.sequence_count();
  Sequence seq(static_cast<std::size_t>(space.seq_len), 0);
  for (std::uint64_t rank = 0; rank < n; ++rank) {
    fn(rank, const_cast<const Sequence&>(seq));
    // Increment as a base-V number, least significant digit last.
    for (int pos = space.seq_len - 1; pos >= 0; --pos) {
      if (++seq[static_cast<std::size_t>(pos)] < space.vocab_size) break;
      seq[static_cast<std::size_t>(pos)] = 0;
    }
  }
}

/* Renders tokens joined by '-', e.g. [0,2,1] -> "0-2-1". */
std::string format_sequence(const Sequence& seq);

}  // namespace dpglab
