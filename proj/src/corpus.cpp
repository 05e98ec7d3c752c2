#include "dlgreward/corpus.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "dlgreward/error.hpp"

namespace dlgreward {

std::string Sentence::text() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

Sentence make_sentence(const std::string& raw) {
  Sentence s;
  std::string token;
  auto flush = [&] {
    if (!token.empty()) {
      s.tokens.push_back(token);
      token.clear();
    }
  };
  for (char raw_c : raw) {
    const unsigned char c = static_cast<unsigned char>(raw_c);
    if (c == ' ') {
      flush();
    } else if (std::isspace(c)) {
      throw_format("whitespace other than single spaces inside sentence: \"" +
                   raw + "\"");
    } else {
      token += static_cast<char>(std::tolower(c));
    }
  }
  flush();
  if (s.tokens.empty()) {
    throw_format("sentence has no tokens: \"" + raw + "\"");
  }
  return s;
}

namespace {

struct TaggedLine {
  std::string text;
  std::size_t line_no = 0;
};

Sentence parse_speaker_line(const TaggedLine& line, char expected) {
  const std::string& t = line.text;
  if (t.size() < 4 || (t[0] != 'A' && t[0] != 'B') || t[1] != ':' ||
      t[2] != ' ') {
    throw_format("malformed speaker tag at line " + std::to_string(line.line_no));
  }
  if (t[0] != expected) {
    throw_format(std::string("expected speaker ") + expected + " at line " +
                 std::to_string(line.line_no) + ", got " + t[0]);
  }
  try {
    return make_sentence(t.substr(3));
  } catch (const Error& e) {
    throw_format(std::string(e.what()) + " (line " +
                 std::to_string(line.line_no) + ")");
  }
}

Dialogue parse_block(const std::vector<TaggedLine>& block, std::size_t index) {
  if (block.size() % 2 != 0) {
    throw_format("unpaired A line at line " +
                 std::to_string(block.back().line_no));
  }
  Dialogue d;
  d.id = "d" + std::to_string(index);
  d.turns.reserve(block.size() / 2);
  for (std::size_t i = 0; i < block.size(); i += 2) {
    DialogueTurn turn;
    turn.a = parse_speaker_line(block[i], 'A');
    turn.b = parse_speaker_line(block[i + 1], 'B');
    d.turns.push_back(std::move(turn));
  }
  return d;
}

}  // namespace

std::vector<Dialogue> parse_corpus(std::istream& in) {
  std::vector<Dialogue> corpus;
  std::vector<TaggedLine> block;
  std::string line;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (block.empty()) {
        throw_format("empty dialogue block at line " + std::to_string(line_no));
      }
      corpus.push_back(parse_block(block, corpus.size()));
      block.clear();
    } else {
      block.push_back({line, line_no});
    }
  }
  if (!block.empty()) {
    corpus.push_back(parse_block(block, corpus.size()));
  }
  return corpus;
}

std::vector<Dialogue> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open corpus file: " + path);
  return parse_corpus(in);
}

void write_corpus(std::ostream& out, const std::vector<Dialogue>& corpus) {
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (i) out << '\n';
    for (const DialogueTurn& turn : corpus[i].turns) {
      out << "A: " << turn.a.text() << '\n';
      out << "B: " << turn.b.text() << '\n';
    }
  }
}

void save_corpus(const std::string& path, const std::vector<Dialogue>& corpus) {
  std::ofstream out(path);
  if (!out) throw_io("cannot write corpus file: " + path);
  write_corpus(out, corpus);
  if (!out) throw_io("write failed: " + path);
}

CorpusStats compute_stats(const std::vector<Dialogue>& corpus) {
  if (corpus.empty()) throw_format("cannot compute stats of an empty corpus");
  CorpusStats stats;
  stats.num_dialogues = corpus.size();
  std::size_t total_turns = 0;
  std::size_t total_tokens = 0;
  std::unordered_set<std::string> vocab;
  for (const Dialogue& d : corpus) {
    total_turns += d.turns.size();
    for (const DialogueTurn& turn : d.turns) {
      for (const Sentence* s : {&turn.a, &turn.b}) {
        total_tokens += s->tokens.size();
        vocab.insert(s->tokens.begin(), s->tokens.end());
      }
    }
  }
  stats.mean_turns =
      static_cast<double>(total_turns) / static_cast<double>(corpus.size());
  stats.mean_words =
      static_cast<double>(total_tokens) / static_cast<double>(corpus.size());
  stats.vocab_size = vocab.size();
  return stats;
}

}  // namespace dlgreward
