#include "dlgreward/noise.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

#include "dlgreward/error.hpp"

namespace dlgreward {

ReplacementPool build_pool(const std::vector<Dialogue>& corpus) {
  if (corpus.empty()) throw_format("cannot build a replacement pool from an empty corpus");
  ReplacementPool pool;
  for (const Dialogue& d : corpus) {
    for (const DialogueTurn& turn : d.turns) {
      pool.entries.push_back({turn.b, d.id});
    }
  }
  // Canonical order, so sampling does not depend on how the corpus was
  // permuted on disk. Entries of one dialogue keep their turn order.
  std::stable_sort(pool.entries.begin(), pool.entries.end(),
                   [](const ReplacementPool::Entry& x,
                      const ReplacementPool::Entry& y) {
                     return x.source_id < y.source_id;
                   });
  return pool;
}

namespace {

// Uniform over pool entries that are foreign to the seed and textually
// different from the original. Bounded rejection first, exact enumeration as
// the fallback; both draw the same distribution.
const Sentence& sample_replacement(const ReplacementPool& pool,
                                   const std::string& seed_id,
                                   const Sentence& original, Rng& rng) {
  constexpr int kRejectionAttempts = 64;
  for (int k = 0; k < kRejectionAttempts; ++k) {
    const auto& e = pool.entries[uniform_index(rng, pool.entries.size())];
    if (e.source_id != seed_id && e.sentence != original) return e.sentence;
  }
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < pool.entries.size(); ++i) {
    const auto& e = pool.entries[i];
    if (e.source_id != seed_id && e.sentence != original) eligible.push_back(i);
  }
  if (eligible.empty()) {
    throw_format("replacement pool has no foreign sentence differing from \"" +
                 original.text() + "\"");
  }
  return pool.entries[eligible[uniform_index(rng, eligible.size())]].sentence;
}

}  // namespace

ScoredDialogue distort(const Dialogue& seed, int n, const ReplacementPool& pool,
                       Rng& rng) {
  const int turns = static_cast<int>(seed.turns.size());
  if (n < 0 || n > turns) {
    throw_usage("noise level " + std::to_string(n) + " out of range [0, " +
                std::to_string(turns) + "] for dialogue " + seed.id);
  }
  ScoredDialogue out;
  out.dialogue.id = seed.id + "#n" + std::to_string(n);
  out.dialogue.turns = seed.turns;
  out.score = turns - 2 * n;
  out.noise_level = n;
  out.source_id = seed.id;
  for (int j = 0; j < n; ++j) {
    out.dialogue.turns[j].b =
        sample_replacement(pool, seed.id, seed.turns[j].b, rng);
  }
  return out;
}

std::vector<ScoredDialogue> generate_dataset(const std::vector<Dialogue>& corpus,
                                             std::uint64_t seed) {
  const ReplacementPool pool = build_pool(corpus);
  std::vector<ScoredDialogue> out;
  std::size_t total = 0;
  for (const Dialogue& d : corpus) total += d.turns.size() + 1;
  out.reserve(total);
  for (const Dialogue& d : corpus) {
    const std::uint64_t id_hash = fnv1a64(d.id);
    for (int n = 0; n <= static_cast<int>(d.turns.size()); ++n) {
      Rng rng = make_rng(mix_seed(seed, id_hash, static_cast<std::uint64_t>(n)));
      out.push_back(distort(d, n, pool, rng));
    }
  }
  return out;
}

void write_scored(std::ostream& out, const std::vector<ScoredDialogue>& data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (i) out << '\n';
    const ScoredDialogue& sd = data[i];
    out << "# score=" << sd.score << " noise=" << sd.noise_level
        << " source=" << sd.source_id << '\n';
    for (const DialogueTurn& turn : sd.dialogue.turns) {
      out << "A: " << turn.a.text() << '\n';
      out << "B: " << turn.b.text() << '\n';
    }
  }
}

void save_scored(const std::string& path, const std::vector<ScoredDialogue>& data) {
  std::ofstream out(path);
  if (!out) throw_io("cannot write scored file: " + path);
  write_scored(out, data);
  if (!out) throw_io("write failed: " + path);
}

namespace {

int parse_header_int(std::string_view line, std::string_view key,
                     std::size_t& pos, std::size_t line_no) {
  if (line.substr(pos, key.size()) != key) {
    throw_format("malformed scored header at line " + std::to_string(line_no));
  }
  pos += key.size();
  int value = 0;
  const char* begin = line.data() + pos;
  const char* end = line.data() + line.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{}) {
    throw_format("malformed scored header at line " + std::to_string(line_no));
  }
  pos += static_cast<std::size_t>(ptr - begin);
  return value;
}

}  // namespace

std::vector<ScoredDialogue> parse_scored(std::istream& in) {
  std::vector<ScoredDialogue> out;
  std::vector<std::string> block;
  std::vector<std::size_t> block_lines;
  std::string line;
  std::size_t line_no = 0;

  auto flush = [&]() {
    const std::size_t header_line = block_lines.front();
    std::string_view header = block[0];
    std::size_t pos = 0;
    if (header.substr(0, 2) != "# ") {
      throw_format("missing scored header at line " + std::to_string(header_line));
    }
    pos = 2;
    const int score = parse_header_int(header, "score=", pos, header_line);
    if (pos >= header.size() || header[pos] != ' ') {
      throw_format("malformed scored header at line " + std::to_string(header_line));
    }
    ++pos;
    const int noise = parse_header_int(header, "noise=", pos, header_line);
    if (pos >= header.size() || header[pos] != ' ') {
      throw_format("malformed scored header at line " + std::to_string(header_line));
    }
    ++pos;
    if (header.substr(pos, 7) != "source=" || pos + 7 >= header.size()) {
      throw_format("malformed scored header at line " + std::to_string(header_line));
    }
    std::string source(header.substr(pos + 7));

    // Reparse the dialogue lines through the corpus path for identical
    // tagging and error reporting.
    std::string body;
    for (std::size_t i = 1; i < block.size(); ++i) {
      body += block[i];
      body += '\n';
    }
    std::istringstream body_stream(body);
    std::vector<Dialogue> parsed;
    try {
      parsed = parse_corpus(body_stream);
    } catch (const Error& e) {
      throw_format(std::string(e.what()) + " (within block at line " +
                   std::to_string(header_line) + ")");
    }
    if (parsed.size() != 1) {
      throw_format("scored block at line " + std::to_string(header_line) +
                   " must contain exactly one dialogue");
    }
    ScoredDialogue sd;
    sd.dialogue = std::move(parsed[0]);
    sd.dialogue.id = source + "#n" + std::to_string(noise);
    sd.score = score;
    sd.noise_level = noise;
    sd.source_id = std::move(source);
    const int turns = static_cast<int>(sd.dialogue.turns.size());
    if (noise < 0 || noise > turns || score != turns - 2 * noise) {
      throw_format("inconsistent score/noise header at line " +
                   std::to_string(header_line) + ": score=" +
                   std::to_string(score) + " noise=" + std::to_string(noise) +
                   " turns=" + std::to_string(turns));
    }
    out.push_back(std::move(sd));
    block.clear();
    block_lines.clear();
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (block.empty()) {
        throw_format("empty scored block at line " + std::to_string(line_no));
      }
      flush();
    } else {
      block.push_back(line);
      block_lines.push_back(line_no);
    }
  }
  if (!block.empty()) flush();
  return out;
}

std::vector<ScoredDialogue> load_scored(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open scored file: " + path);
  return parse_scored(in);
}

}  // namespace dlgreward
