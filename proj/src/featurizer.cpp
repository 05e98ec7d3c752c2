#include "dlgreward/featurizer.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "dlgreward/error.hpp"

namespace dlgreward {

EmbeddingTable::EmbeddingTable(int dim) : dim_(dim) {
  if (dim < 1) throw_usage("embedding dimension must be >= 1");
}

const double* EmbeddingTable::find(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return nullptr;
  return storage_.data() + it->second;
}

void EmbeddingTable::insert(const std::string& token,
                            std::span<const double> vec) {
  if (static_cast<int>(vec.size()) != dim_) {
    throw_usage("vector size does not match table dimension");
  }
  if (index_.contains(token)) return;
  index_.emplace(token, storage_.size());
  storage_.insert(storage_.end(), vec.begin(), vec.end());
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (start <= line.size()) {
    std::size_t end = line.find(' ', start);
    if (end == std::string_view::npos) end = line.size();
    fields.push_back(line.substr(start, end - start));
    start = end + 1;
  }
  return fields;
}

double parse_coeff(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw_format("non-numeric field \"" + std::string(field) + "\" at line " +
                 std::to_string(line_no));
  }
  return value;
}

}  // namespace

EmbeddingTable parse_embeddings(std::istream& in, int dim) {
  EmbeddingTable table(dim);
  std::string line;
  std::size_t line_no = 0;
  int stored_dim = -1;  // decided by the first line
  std::vector<double> coeffs;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      throw_format("empty line at line " + std::to_string(line_no));
    }
    std::vector<std::string_view> fields = split_fields(line);
    if (stored_dim < 0) {
      stored_dim = static_cast<int>(fields.size()) - 1;
      if (stored_dim < 1) {
        throw_format("first line has no coefficients (line 1)");
      }
      if (dim > stored_dim) {
        throw_usage("requested dimension " + std::to_string(dim) +
                    " exceeds stored dimensionality " +
                    std::to_string(stored_dim));
      }
    }
    if (static_cast<int>(fields.size()) < stored_dim + 1) {
      throw_format("expected " + std::to_string(stored_dim) +
                   " coefficients at line " + std::to_string(line_no));
    }
    const std::size_t first_coeff = fields.size() - stored_dim;
    // Anchor the split at the right edge: the token is whatever precedes the
    // stored_dim coefficients, spaces included.
    std::string token(line.substr(0, line.find(' ')));
    if (first_coeff > 1) {
      std::size_t token_end = fields[first_coeff].data() - line.data() - 1;
      token = line.substr(0, token_end);
    }
    coeffs.clear();
    for (std::size_t i = first_coeff; i < fields.size(); ++i) {
      coeffs.push_back(parse_coeff(fields[i], line_no));
    }
    table.insert(token, std::span<const double>(coeffs.data(),
                                                static_cast<std::size_t>(dim)));
  }
  return table;
}

EmbeddingTable load_embeddings(const std::string& path, int dim) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open embedding file: " + path);
  return parse_embeddings(in, dim);
}

Eigen::VectorXd sentence_vector(const Sentence& s, const EmbeddingTable& table) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(table.dim());
  int found = 0;
  for (const std::string& token : s.tokens) {
    if (const double* vec = table.find(token)) {
      acc += Eigen::Map<const Eigen::VectorXd>(vec, table.dim());
      ++found;
    }
  }
  if (found > 0) acc /= static_cast<double>(found);
  return acc;
}

Window parse_window(const std::string& name) {
  if (name == "last") return Window::last;
  if (name == "first") return Window::first;
  throw_usage("unknown window mode \"" + name + "\" (expected last|first)");
}

const char* window_name(Window w) {
  return w == Window::last ? "last" : "first";
}

FeatureSequence featurize(const ScoredDialogue& d, int history_len,
                          const EmbeddingTable& table, Window window) {
  if (history_len < 1) throw_usage("history length must be >= 1");
  const int dim = table.dim();
  std::vector<const Sentence*> flat;
  flat.reserve(d.dialogue.turns.size() * 2);
  for (const DialogueTurn& turn : d.dialogue.turns) {
    flat.push_back(&turn.a);
    flat.push_back(&turn.b);
  }
  const int total = static_cast<int>(flat.size());
  const int keep = std::min(history_len, total);
  const int begin = window == Window::last ? total - keep : 0;

  FeatureSequence out;
  out.vectors = Eigen::MatrixXd::Zero(history_len, dim);
  out.target = static_cast<double>(d.score);
  out.source_id = d.source_id;
  out.noise_level = d.noise_level;
  // Front padding: the final timestep always holds the newest kept sentence.
  const int pad = history_len - keep;
  for (int k = 0; k < keep; ++k) {
    out.vectors.row(pad + k) = sentence_vector(*flat[begin + k], table);
  }
  return out;
}

namespace {

constexpr char kCacheMagic[8] = {'D', 'R', 'W', 'F', 'E', 'A', 'T', '1'};
constexpr std::uint32_t kCacheVersion = 1;
constexpr std::uint32_t kByteOrderMark = 0x01020304u;

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw_format("truncated feature cache");
  return value;
}

}  // namespace

void write_feature_cache(std::ostream& out,
                         const std::vector<FeatureSequence>& feats, int dim,
                         int history_len) {
  out.write(kCacheMagic, sizeof(kCacheMagic));
  write_pod(out, kCacheVersion);
  write_pod(out, kByteOrderMark);
  write_pod(out, static_cast<std::uint32_t>(dim));
  write_pod(out, static_cast<std::uint32_t>(history_len));
  write_pod(out, static_cast<std::uint64_t>(feats.size()));
  for (const FeatureSequence& f : feats) {
    if (f.vectors.rows() != history_len || f.vectors.cols() != dim) {
      throw_usage("feature sequence shape does not match cache header");
    }
    write_pod(out, static_cast<std::uint32_t>(f.source_id.size()));
    out.write(f.source_id.data(),
              static_cast<std::streamsize>(f.source_id.size()));
    write_pod(out, static_cast<std::int32_t>(f.noise_level));
    write_pod(out, f.target);
    for (int t = 0; t < history_len; ++t) {
      for (int j = 0; j < dim; ++j) write_pod(out, f.vectors(t, j));
    }
  }
}

void save_feature_cache(const std::string& path,
                        const std::vector<FeatureSequence>& feats, int dim,
                        int history_len) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io("cannot write feature cache: " + path);
  write_feature_cache(out, feats, dim, history_len);
  if (!out) throw_io("write failed: " + path);
}

std::vector<FeatureSequence> read_feature_cache(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0) {
    throw_format("not a feature cache file");
  }
  if (read_pod<std::uint32_t>(in) != kCacheVersion) {
    throw_format("unsupported feature cache version");
  }
  if (read_pod<std::uint32_t>(in) != kByteOrderMark) {
    throw_format("feature cache written with a different byte order");
  }
  const int dim = static_cast<int>(read_pod<std::uint32_t>(in));
  const int history_len = static_cast<int>(read_pod<std::uint32_t>(in));
  const std::uint64_t count = read_pod<std::uint64_t>(in);
  std::vector<FeatureSequence> feats;
  feats.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    FeatureSequence f;
    const std::uint32_t id_len = read_pod<std::uint32_t>(in);
    f.source_id.resize(id_len);
    in.read(f.source_id.data(), id_len);
    if (!in) throw_format("truncated feature cache");
    f.noise_level = static_cast<int>(read_pod<std::int32_t>(in));
    f.target = read_pod<double>(in);
    f.vectors.resize(history_len, dim);
    for (int t = 0; t < history_len; ++t) {
      for (int j = 0; j < dim; ++j) f.vectors(t, j) = read_pod<double>(in);
    }
    feats.push_back(std::move(f));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw_format("trailing bytes after feature cache records");
  }
  return feats;
}

std::vector<FeatureSequence> load_feature_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open feature cache: " + path);
  return read_feature_cache(in);
}

}  // namespace dlgreward
