#pragma once
// Reproducible random streams.
//
// Stream-splitting rule: every independent unit of work (a replication, an
// observation inside a dataset, a cross-validation shuffle) gets its own
// std::mt19937_64 seeded through std::seed_seq from the master seed followed by
// the unit's path of integer ids. Results therefore do not depend on the order
// or thread in which the units are processed.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace sage {

using Rng = std::mt19937_64;

inline Rng make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * (path.size() + 1));
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(master);
  for (std::uint64_t id : path) push(id);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

/// A derived 64-bit seed for the stream at `path` (used to hand a replication its dataset seed).
inline std::uint64_t substream_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  Rng r = make_stream(master, path);
  return r();
}

}  // namespace sage
