#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dlgreward/featurizer.hpp"
#include "dlgreward/rng.hpp"

namespace dlgreward {

struct ModelConfig {
  int input_dim = 100;
  int hidden_dim = 256;
  int num_layers = 2;
  double dropout_rate = 0.2;
  bool batchnorm = false;
  double epsilon = 1e-5;     // normalization stabilizer
  double bn_momentum = 0.99; // running-statistics decay

  void validate() const;
};

struct LayerParams {
  // Gate weights, one row per hidden unit.
  Eigen::MatrixXd w_reset, w_update, w_cand;  // hidden x in
  Eigen::MatrixXd u_reset, u_update, u_cand;  // hidden x hidden
  Eigen::VectorXd b_reset, b_update, b_cand;  // hidden
  // Normalization parameters; running stats are state, not optimized.
  Eigen::VectorXd bn_gamma, bn_beta;
  Eigen::VectorXd bn_running_mean, bn_running_var;
};

struct HeadParams {
  Eigen::VectorXd weight;  // hidden
  double bias = 0.0;
};

struct ModelParams {
  std::vector<LayerParams> layers;
  HeadParams head;
};

// Same shape as the learnable subset of ModelParams.
using Gradients = ModelParams;

enum class Mode { train, infer };

std::int64_t count_params(const ModelConfig& cfg);

// Uniform Glorot weights, zero biases, gamma=1 beta=0, running mean 0 var 1.
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);
Gradients zero_gradients(const ModelConfig& cfg);

// Visits the learnable tensors of a params/gradients structure in canonical
// order (layer-major; BN gamma/beta only when batchnorm is enabled).
template <typename F>
void visit_learnable(const ModelConfig& cfg, ModelParams& p, F&& f) {
  for (LayerParams& layer : p.layers) {
    f(layer.w_reset.data(), layer.w_reset.size());
    f(layer.u_reset.data(), layer.u_reset.size());
    f(layer.b_reset.data(), layer.b_reset.size());
    f(layer.w_update.data(), layer.w_update.size());
    f(layer.u_update.data(), layer.u_update.size());
    f(layer.b_update.data(), layer.b_update.size());
    f(layer.w_cand.data(), layer.w_cand.size());
    f(layer.u_cand.data(), layer.u_cand.size());
    f(layer.b_cand.data(), layer.b_cand.size());
    if (cfg.batchnorm) {
      f(layer.bn_gamma.data(), layer.bn_gamma.size());
      f(layer.bn_beta.data(), layer.bn_beta.size());
    }
  }
  f(p.head.weight.data(), p.head.weight.size());
  f(&p.head.bias, 1);
}

// Per-timestep activations cached for the backward pass.
struct CellTrace {
  Eigen::MatrixXd input;      // batch x in (dropout already applied)
  Eigen::MatrixXd reset, update, cand;
  Eigen::MatrixXd state_pre;  // before normalization
  Eigen::MatrixXd xhat;       // normalized state (batchnorm only)
  Eigen::RowVectorXd batch_istd;  // 1/sqrt(var+eps) used by the norm
};

struct LayerTrace {
  std::vector<CellTrace> steps;
  std::vector<Eigen::MatrixXd> hidden;  // steps+1 entries, hidden[0] == 0
  Eigen::MatrixXd dropout_mask;         // batch x in, empty when inactive
};

struct ForwardTrace {
  std::vector<LayerTrace> layers;
  Mode mode = Mode::infer;
  int batch = 0;
  int steps = 0;
};

// Time-major batch: one (batch x input_dim) matrix per timestep.
using TimeMajorBatch = std::vector<Eigen::MatrixXd>;

TimeMajorBatch to_time_major(std::span<const FeatureSequence> feats);
Eigen::VectorXd targets_of(std::span<const FeatureSequence> feats);

// One recurrent step over a batch of rows; exposed for testing. In train
// mode with batchnorm the mini-batch statistics are used and, when
// `update_running` is set, folded into the layer's running stats.
Eigen::MatrixXd cell_forward(const Eigen::MatrixXd& x,
                             const Eigen::MatrixXd& h_prev, LayerParams& layer,
                             const ModelConfig& cfg, Mode mode,
                             CellTrace* trace = nullptr,
                             bool update_running = true);

struct ForwardResult {
  Eigen::VectorXd predictions;   // per sequence, head at the final timestep
  Eigen::MatrixXd step_outputs;  // batch x steps, filled on request
};

// dropout_rng is required in train mode when dropout_rate > 0.
ForwardResult forward(const TimeMajorBatch& x, ModelParams& params,
                      const ModelConfig& cfg, Mode mode,
                      Rng* dropout_rng = nullptr, ForwardTrace* trace = nullptr,
                      bool update_running = true,
                      bool want_step_outputs = false);

// Reverse-mode gradients of forward() given d(loss)/d(prediction) per
// sequence. The trace must come from a matching forward call.
Gradients backward(const ForwardTrace& trace, const ModelParams& params,
                   const ModelConfig& cfg, const Eigen::VectorXd& dpred);

// Checkpoint: versioned binary header (config, featurizer settings,
// parameter shapes) followed by the tensors in canonical order.
struct Checkpoint {
  ModelConfig config;
  int history_length = 0;
  Window window = Window::last;
  ModelParams params;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dlgreward
