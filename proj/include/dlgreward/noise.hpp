#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dlgreward/corpus.hpp"
#include "dlgreward/rng.hpp"

namespace dlgreward {

// A (possibly distorted) dialogue with its integer reward label.
// Invariant: score == num_turns - 2 * noise_level, 0 <= noise_level <= turns,
// and exactly the first noise_level turns carry a replaced B-sentence.
struct ScoredDialogue {
  Dialogue dialogue;
  int score = 0;
  int noise_level = 0;
  std::string source_id;
};

// Every B-sentence of a corpus, each with the id of the dialogue it came
// from. Replacements are drawn from here, never from the seed dialogue
// itself.
struct ReplacementPool {
  struct Entry {
    Sentence sentence;
    std::string source_id;
  };
  std::vector<Entry> entries;

  std::size_t size() const { return entries.size(); }
};

ReplacementPool build_pool(const std::vector<Dialogue>& corpus);

// Replaces the B-sentences of the first n turns with sentences sampled
// uniformly from the pool, excluding entries from the seed dialogue and
// resampling on exact text collision with the sentence being replaced.
ScoredDialogue distort(const Dialogue& seed, int n, const ReplacementPool& pool,
                       Rng& rng);

// For each seed dialogue emits one scored dialogue per noise level
// n = 0..T. Deterministic given (corpus, seed): each (dialogue, n) pair uses
// its own RNG substream, so generation order does not matter.
std::vector<ScoredDialogue> generate_dataset(const std::vector<Dialogue>& corpus,
                                             std::uint64_t seed);

// Scored-dialogue file: corpus format with a header line per block,
//   # score=<int> noise=<int> source=<id>
void write_scored(std::ostream& out, const std::vector<ScoredDialogue>& data);
void save_scored(const std::string& path, const std::vector<ScoredDialogue>& data);
std::vector<ScoredDialogue> parse_scored(std::istream& in);
std::vector<ScoredDialogue> load_scored(const std::string& path);

}  // namespace dlgreward
