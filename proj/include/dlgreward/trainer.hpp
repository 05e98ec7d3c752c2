#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dlgreward/featurizer.hpp"
#include "dlgreward/gru.hpp"
#include "dlgreward/noise.hpp"

namespace dlgreward {

struct TrainConfig {
  int batch_size = 128;
  int max_epochs = 100;
  int patience = 10;
  double valid_fraction = 0.2;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
};

// Deterministic shuffled split; the validation side gets floor(fraction * n).
SplitIndices split_indices(std::size_t n, double fraction, std::uint64_t seed);

double mae(const Eigen::VectorXd& predictions, const Eigen::VectorXd& targets);

struct AdamState {
  std::int64_t step = 0;
  Gradients m;
  Gradients v;
};

AdamState make_adam_state(const ModelConfig& cfg);

void adam_step(ModelParams& params, Gradients& grads, AdamState& state,
               const ModelConfig& model_cfg, const TrainConfig& train_cfg);

struct EpochStats {
  int epoch = 0;  // zero-based
  double train_mae = 0.0;
  double valid_mae = 0.0;
  bool improved = false;
};

struct TrainReport {
  int epochs_run = 0;
  int best_epoch = 0;
  double best_valid_mae = 0.0;
  bool stopped_early = false;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Trains a regressor on the scored dialogues, featurizing lazily per batch.
// Early stopping tracks validation MAE; the returned checkpoint holds the
// parameters (and normalization statistics) from the best epoch.
TrainReport train(std::span<const ScoredDialogue> data,
                  const EmbeddingTable& table, int history_length,
                  Window window, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg, Checkpoint& out,
                  const EpochCallback& on_epoch = nullptr);

}  // namespace dlgreward
