#include <doctest.h>

#include <stdexcept>
#include <vector>

#include "dpglab/seqspace.hpp"

using namespace dpglab;

TEST_CASE("enumeration of the smallest space") {
  const VocabSpec space{2, 1};
  std::vector<Sequence> all;
  for_each_sequence(space, [&](std::uint64_t, const Sequence& seq) { all.push_back(seq); });
  REQUIRE(all.size() == 2);
  CHECK(all[0] == Sequence{0});
  CHECK(all[1] == Sequence{1});
}

TEST_CASE("enumeration order is lexicographic") {
  const VocabSpec space{2, 2};
  std::vector<Sequence> all;
  for_each_sequence(space, [&](std::uint64_t, const Sequence& seq) { all.push_back(seq); });
  REQUIRE(all.size() == 4);
  CHECK(all[0] == Sequence{0, 0});
  CHECK(all[1] == Sequence{0, 1});
  CHECK(all[2] == Sequence{1, 0});
  CHECK(all[3] == Sequence{1, 1});
}

TEST_CASE("V=3 L=4 has 81 sequences with the expected endpoints") {
  const VocabSpec space{3, 4};
  CHECK(space.sequence_count() == 81);
  std::uint64_t count = 0;
  Sequence first;
  Sequence last;
  for_each_sequence(space, [&](std::uint64_t rank, const Sequence& seq) {
    if (rank == 0) first = seq;
    last = seq;
    ++count;
  });
  CHECK(count == 81);
  CHECK(first == Sequence{0, 0, 0, 0});
  CHECK(last == Sequence{2, 2, 2, 2});
}

TEST_CASE("index_of matches base-V positional value") {
  CHECK(index_of(VocabSpec{2, 2}, {0, 0}) == 0);
  CHECK(index_of(VocabSpec{2, 2}, {1, 1}) == 3);
  CHECK(index_of(VocabSpec{3, 3}, {2, 1, 0}) == 21);
}

TEST_CASE("rank round trip is the identity on every space tried") {
  for (const VocabSpec space : {VocabSpec{2, 5}, VocabSpec{3, 3}, VocabSpec{5, 2}}) {
    for (std::uint64_t r = 0; r < space.sequence_count(); ++r) {
      CHECK(index_of(space, sequence_at(space, r)) == r);
    }
  }
}

TEST_CASE("enumeration is a bijection onto the rank range") {
  const VocabSpec space{3, 3};
  std::vector<int> seen(space.sequence_count(), 0);
  for_each_sequence(space, [&](std::uint64_t rank, const Sequence& seq) {
    REQUIRE(rank < seen.size());
    seen[rank] += 1;
    CHECK(index_of(space, seq) == rank);
  });
  for (int c : seen) CHECK(c == 1);
}

TEST_CASE("spec validation rejects degenerate shapes") {
  CHECK_THROWS_AS(VocabSpec(1, 3).validate(), std::invalid_argument);
  CHECK_THROWS_AS(VocabSpec(2, 0).validate(), std::invalid_argument);
  CHECK_NOTHROW(VocabSpec(2, 1).validate());
}

TEST_CASE("sequence_count overflow and enumerability guard") {
  CHECK_THROWS_AS(VocabSpec(4, 40).sequence_count(), std::overflow_error);
  CHECK(VocabSpec(2, 22).enumerable());
  CHECK_FALSE(VocabSpec(2, 23).enumerable());
  CHECK_THROWS_AS(VocabSpec(2, 23).require_enumerable(), std::domain_error);
}

TEST_CASE("index_of rejects malformed sequences") {
  const VocabSpec space{3, 2};
  CHECK_THROWS_AS(index_of(space, {0}), std::invalid_argument);
  CHECK_THROWS_AS(index_of(space, {0, 3}), std::invalid_argument);
  CHECK_THROWS_AS(index_of(space, {-1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(sequence_at(space, 9), std::out_of_range);
}

TEST_CASE("sequences format with dash separators") {
  CHECK(format_sequence({0, 1, 2}) == "0-1-2");
  CHECK(format_sequence({3}) == "3");
}
