#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace dlgreward {

// One speaker contribution: lowercase tokens, split on single spaces.
struct Sentence {
  std::vector<std::string> tokens;

  std::string text() const;  // tokens joined by single spaces
  bool operator==(const Sentence&) const = default;
};

// Strict A/B alternation: a turn always holds both sentences.
struct DialogueTurn {
  Sentence a;
  Sentence b;

  bool operator==(const DialogueTurn&) const = default;
};

struct Dialogue {
  std::string id;
  std::vector<DialogueTurn> turns;

  std::size_t num_turns() const { return turns.size(); }
  bool same_transcript(const Dialogue& other) const {
    return turns == other.turns;
  }
};

struct CorpusStats {
  std::size_t num_dialogues = 0;
  double mean_turns = 0.0;
  double mean_words = 0.0;  // tokens per dialogue, punctuation included
  std::size_t vocab_size = 0;
};

// Lowercases (ASCII) and splits on spaces. Throws on whitespace inside a
// token or when nothing remains.
Sentence make_sentence(const std::string& raw);

// Corpus file format: one dialogue per block, blocks separated by exactly one
// blank line, lines alternating "A: <text>" / "B: <text>" starting with A.
// Dialogues are assigned ids "d0", "d1", ... in file order.
std::vector<Dialogue> parse_corpus(std::istream& in);
std::vector<Dialogue> load_corpus(const std::string& path);

void write_corpus(std::ostream& out, const std::vector<Dialogue>& corpus);
void save_corpus(const std::string& path, const std::vector<Dialogue>& corpus);

CorpusStats compute_stats(const std::vector<Dialogue>& corpus);

}  // namespace dlgreward
