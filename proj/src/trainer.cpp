#include "dlgreward/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "dlgreward/error.hpp"

namespace dlgreward {

namespace {

struct TensorView {
  double* data;
  std::size_t size;
};

std::vector<TensorView> learnable_views(const ModelConfig& cfg, ModelParams& p) {
  std::vector<TensorView> views;
  visit_learnable(cfg, p, [&](double* data, Eigen::Index size) {
    views.push_back({data, static_cast<std::size_t>(size)});
  });
  return views;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size <= 0) throw_usage("batch_size must be positive");
  if (max_epochs <= 0) throw_usage("max_epochs must be positive");
  if (patience < 0) throw_usage("patience must be non-negative");
  if (!(valid_fraction >= 0.0 && valid_fraction < 1.0)) {
    throw_usage("valid_fraction must be in [0, 1)");
  }
  if (!(learning_rate > 0.0)) throw_usage("learning_rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw_usage("adam betas must be in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw_usage("adam_epsilon must be positive");
}

SplitIndices split_indices(std::size_t n, double fraction, std::uint64_t seed) {
  if (n == 0) throw_usage("cannot split an empty dataset");
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw_usage("valid_fraction must be in [0, 1)");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(seed);
  shuffle_in_place(order, rng);
  const auto valid_count =
      static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  SplitIndices split;
  split.valid.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(valid_count));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(valid_count), order.end());
  return split;
}

double mae(const Eigen::VectorXd& predictions, const Eigen::VectorXd& targets) {
  if (predictions.size() != targets.size()) {
    throw Error(ErrorKind::internal, "mae: size mismatch");
  }
  if (predictions.size() == 0) {
    throw Error(ErrorKind::internal, "mae: empty input");
  }
  return (predictions - targets).array().abs().mean();
}

AdamState make_adam_state(const ModelConfig& cfg) {
  AdamState state;
  state.step = 0;
  state.m = zero_gradients(cfg);
  state.v = zero_gradients(cfg);
  return state;
}

void adam_step(ModelParams& params, Gradients& grads, AdamState& state,
               const ModelConfig& model_cfg, const TrainConfig& train_cfg) {
  auto pv = learnable_views(model_cfg, params);
  auto gv = learnable_views(model_cfg, grads);
  auto mv = learnable_views(model_cfg, state.m);
  auto vv = learnable_views(model_cfg, state.v);
  if (pv.size() != gv.size() || pv.size() != mv.size() || pv.size() != vv.size()) {
    throw Error(ErrorKind::internal, "adam_step: structure mismatch");
  }
  ++state.step;
  const double b1 = train_cfg.beta1;
  const double b2 = train_cfg.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const double lr = train_cfg.learning_rate;
  const double eps = train_cfg.adam_epsilon;
  for (std::size_t k = 0; k < pv.size(); ++k) {
    if (pv[k].size != gv[k].size) {
      throw Error(ErrorKind::internal, "adam_step: tensor shape mismatch");
    }
    double* p = pv[k].data;
    double* g = gv[k].data;
    double* m = mv[k].data;
    double* v = vv[k].data;
    for (std::size_t i = 0; i < pv[k].size; ++i) {
      if (!std::isfinite(g[i])) {
        throw_numeric("non-finite gradient encountered");
      }
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

namespace {

std::vector<FeatureSequence> featurize_batch(
    std::span<const ScoredDialogue> data, std::span<const std::size_t> indices,
    int history_length, const EmbeddingTable& table, Window window) {
  std::vector<FeatureSequence> feats;
  feats.reserve(indices.size());
  for (std::size_t idx : indices) {
    feats.push_back(featurize(data[idx], history_length, table, window));
  }
  return feats;
}

// Consecutive [begin, end) chunks; with batchnorm a trailing singleton is
// merged into the previous chunk so batch statistics stay defined.
std::vector<std::pair<std::size_t, std::size_t>> make_batches(
    std::size_t n, std::size_t batch_size, bool merge_trailing_singleton) {
  std::vector<std::pair<std::size_t, std::size_t>> batches;
  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    batches.emplace_back(begin, std::min(begin + batch_size, n));
  }
  if (merge_trailing_singleton && batches.size() >= 2 &&
      batches.back().second - batches.back().first == 1) {
    batches[batches.size() - 2].second = batches.back().second;
    batches.pop_back();
  }
  return batches;
}

double predict_mae(std::span<const ScoredDialogue> data,
                   std::span<const std::size_t> indices,
                   const EmbeddingTable& table, int history_length,
                   Window window, ModelParams& params, const ModelConfig& cfg,
                   std::size_t batch_size) {
  double abs_sum = 0.0;
  for (std::size_t begin = 0; begin < indices.size(); begin += batch_size) {
    const std::size_t end = std::min(begin + batch_size, indices.size());
    auto feats = featurize_batch(data, indices.subspan(begin, end - begin),
                                 history_length, table, window);
    TimeMajorBatch x = to_time_major(feats);
    ForwardResult out = forward(x, params, cfg, Mode::infer);
    Eigen::VectorXd y = targets_of(feats);
    abs_sum += (out.predictions - y).array().abs().sum();
  }
  return abs_sum / static_cast<double>(indices.size());
}

}  // namespace

TrainReport train(std::span<const ScoredDialogue> data,
                  const EmbeddingTable& table, int history_length,
                  Window window, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg, Checkpoint& out,
                  const EpochCallback& on_epoch) {
  model_cfg.validate();
  train_cfg.validate();
  if (history_length <= 0) throw_usage("history_length must be positive");
  if (model_cfg.input_dim != table.dim()) {
    throw_usage("model input_dim " + std::to_string(model_cfg.input_dim) +
                " does not match embedding dim " + std::to_string(table.dim()));
  }
  if (data.empty()) throw_usage("training set is empty");

  SplitIndices split = split_indices(data.size(), train_cfg.valid_fraction,
                                     mix_seed(train_cfg.seed, fnv1a64("split")));
  if (split.valid.empty()) {
    throw_usage("validation split is empty; increase valid_fraction or dataset size");
  }
  if (split.train.empty()) {
    throw_usage("training split is empty");
  }

  ModelParams params =
      init_params(model_cfg, mix_seed(train_cfg.seed, fnv1a64("init")));
  AdamState adam = make_adam_state(model_cfg);
  Rng dropout_rng = make_rng(mix_seed(train_cfg.seed, fnv1a64("dropout")));
  Rng shuffle_rng = make_rng(mix_seed(train_cfg.seed, fnv1a64("shuffle")));

  ModelParams best_params = params;
  double best_valid = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int since_best = 0;
  const int stop_after = std::max(train_cfg.patience, 1);

  TrainReport report;
  report.stopped_early = false;

  const auto batch_size = static_cast<std::size_t>(train_cfg.batch_size);
  std::vector<std::size_t> order = split.train;

  int epoch = 0;
  for (; epoch < train_cfg.max_epochs; ++epoch) {
    shuffle_in_place(order, shuffle_rng);
    auto batches = make_batches(order.size(), batch_size, model_cfg.batchnorm);
    double abs_sum = 0.0;
    for (const auto& [begin, end] : batches) {
      auto feats = featurize_batch(
          data, std::span<const std::size_t>(order).subspan(begin, end - begin),
          history_length, table, window);
      TimeMajorBatch x = to_time_major(feats);
      Eigen::VectorXd y = targets_of(feats);
      ForwardTrace trace;
      ForwardResult fwd =
          forward(x, params, model_cfg, Mode::train, &dropout_rng, &trace);
      Eigen::VectorXd err = fwd.predictions - y;
      const double batch_abs = err.array().abs().sum();
      if (!std::isfinite(batch_abs)) {
        throw_numeric("training diverged: non-finite loss at epoch " +
                      std::to_string(epoch));
      }
      abs_sum += batch_abs;
      Eigen::VectorXd dpred =
          (err.array().sign() / static_cast<double>(err.size())).matrix();
      Gradients grads = backward(trace, params, model_cfg, dpred);
      adam_step(params, grads, adam, model_cfg, train_cfg);
    }
    const double train_mae = abs_sum / static_cast<double>(order.size());

    const double valid_mae =
        predict_mae(data, split.valid, table, history_length, window, params,
                    model_cfg, batch_size);
    if (!std::isfinite(valid_mae)) {
      throw_numeric("training diverged: non-finite validation loss at epoch " +
                    std::to_string(epoch));
    }

    const bool improved = valid_mae < best_valid;
    if (improved) {
      best_valid = valid_mae;
      best_epoch = epoch;
      best_params = params;
      since_best = 0;
    } else {
      ++since_best;
    }

    if (on_epoch) {
      on_epoch(EpochStats{epoch, train_mae, valid_mae, improved});
    }

    if (since_best >= stop_after) {
      ++epoch;
      report.stopped_early = true;
      break;
    }
  }

  report.epochs_run = epoch;
  report.best_epoch = best_epoch;
  report.best_valid_mae = best_valid;

  out.config = model_cfg;
  out.history_length = history_length;
  out.window = window;
  out.params = std::move(best_params);
  return report;
}

}  // namespace dlgreward
