#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dlgreward/noise.hpp"

namespace dlgreward {

// token -> dense vector, loaded from a GloVe-style text file. Vectors are
// truncated to the first `dim` stored coefficients.
class EmbeddingTable {
public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(int dim);

  int dim() const { return dim_; }
  std::size_t size() const { return index_.size(); }

  // nullptr when the token is out of vocabulary.
  const double* find(const std::string& token) const;

  // Keeps the first occurrence of a duplicate token.
  void insert(const std::string& token, std::span<const double> vec);

private:
  int dim_ = 0;
  std::vector<double> storage_;
  std::unordered_map<std::string, std::size_t> index_;
};

// File format: one entry per line, token then space-separated decimal
// floats. The stored dimensionality is taken from the first line; tokens may
// themselves contain spaces (everything before the trailing floats), which
// the reference GloVe releases rely on.
EmbeddingTable parse_embeddings(std::istream& in, int dim);
EmbeddingTable load_embeddings(const std::string& path, int dim);

// Mean of the in-vocabulary token vectors; zero vector when none are.
Eigen::VectorXd sentence_vector(const Sentence& s, const EmbeddingTable& table);

// Which end of the flattened sentence list the history window keeps.
enum class Window { last, first };

Window parse_window(const std::string& name);
const char* window_name(Window w);

// Fixed-length regressor input: `history_len` sentence mean-vectors (row per
// timestep), front-padded with zeros when the dialogue is shorter.
struct FeatureSequence {
  Eigen::MatrixXd vectors;  // history_len x dim
  double target = 0.0;
  std::string source_id;
  int noise_level = 0;
};

FeatureSequence featurize(const ScoredDialogue& d, int history_len,
                          const EmbeddingTable& table,
                          Window window = Window::last);

// Binary feature cache (versioned header; see README for the layout).
void write_feature_cache(std::ostream& out,
                         const std::vector<FeatureSequence>& feats, int dim,
                         int history_len);
void save_feature_cache(const std::string& path,
                        const std::vector<FeatureSequence>& feats, int dim,
                        int history_len);
std::vector<FeatureSequence> read_feature_cache(std::istream& in);
std::vector<FeatureSequence> load_feature_cache(const std::string& path);

}  // namespace dlgreward
