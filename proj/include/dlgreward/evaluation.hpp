#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dlgreward/gru.hpp"
#include "dlgreward/noise.hpp"
#include "dlgreward/trainer.hpp"

namespace dlgreward {

// Sample correlation; errors when either side has zero variance.
double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

struct EvalReport {
  int history_length = 0;
  std::uint64_t seed = 0;
  double pearson_r = 0.0;
  double mae = 0.0;
  std::size_t pairs = 0;
};

EvalReport evaluate_predictions(const Eigen::VectorXd& targets,
                                const Eigen::VectorXd& predictions);

Eigen::VectorXd predict(std::span<const ScoredDialogue> data,
                        const EmbeddingTable& table, const Checkpoint& ckpt,
                        std::size_t batch_size = 256);

EvalReport evaluate(std::span<const ScoredDialogue> data,
                    const EmbeddingTable& table, const Checkpoint& ckpt,
                    std::size_t batch_size = 256);

struct SweepConfig {
  std::vector<int> history_lengths{1, 3, 5, 10, 25, 50};
  int runs = 3;
  std::uint64_t base_seed = 0;
  int jobs = 1;
  Window window = Window::last;
  ModelConfig model;
  TrainConfig train;  // the seed field is overridden per run
};

struct SweepEntry {
  int history_length = 0;
  std::vector<EvalReport> runs;
  double mean_r = 0.0;
  double std_r = 0.0;  // sample standard deviation, 0 for a single run
  std::uint64_t best_seed = 0;
  double best_valid_mae = 0.0;
  Checkpoint best_checkpoint;  // lowest validation MAE among the runs
};

struct SweepResult {
  std::vector<SweepEntry> entries;
};

using SweepProgress =
    std::function<void(int history_length, int run_index, const EvalReport&)>;

// Trains `runs` models per history length (seed = base_seed + run index),
// evaluates each on the test set, and aggregates per-length statistics.
SweepResult run_sweep(std::span<const ScoredDialogue> train_data,
                      std::span<const ScoredDialogue> test_data,
                      const EmbeddingTable& table, const SweepConfig& cfg,
                      const SweepProgress& progress = nullptr);

void write_sweep_json(std::ostream& out, const SweepResult& result);
void write_bar_csv(std::ostream& out, const SweepResult& result);

// Scatter of predictions against jittered targets ("x_jittered,predicted").
void write_scatter_csv(std::ostream& out, const Eigen::VectorXd& targets,
                       const Eigen::VectorXd& predictions, double jitter_sigma,
                       std::uint64_t seed);

}  // namespace dlgreward
