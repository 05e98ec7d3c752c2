#include "dlgreward/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "dlgreward/error.hpp"

namespace dlgreward {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::internal, "pearson: size mismatch");
  }
  if (x.size() < 2) {
    throw_numeric("pearson requires at least two pairs");
  }
  const Eigen::VectorXd xc = x.array() - x.mean();
  const Eigen::VectorXd yc = y.array() - y.mean();
  const double sxx = xc.squaredNorm();
  const double syy = yc.squaredNorm();
  if (sxx == 0.0 || syy == 0.0) {
    throw_numeric("pearson undefined for zero-variance input");
  }
  const double r = xc.dot(yc) / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

EvalReport evaluate_predictions(const Eigen::VectorXd& targets,
                                const Eigen::VectorXd& predictions) {
  EvalReport report;
  report.pearson_r = pearson(targets, predictions);
  report.mae = mae(predictions, targets);
  report.pairs = static_cast<std::size_t>(targets.size());
  return report;
}

Eigen::VectorXd predict(std::span<const ScoredDialogue> data,
                        const EmbeddingTable& table, const Checkpoint& ckpt,
                        std::size_t batch_size) {
  if (data.empty()) throw_usage("prediction set is empty");
  if (batch_size == 0) throw_usage("batch_size must be positive");
  if (ckpt.config.input_dim != table.dim()) {
    throw_usage("checkpoint input_dim " + std::to_string(ckpt.config.input_dim) +
                " does not match embedding dim " + std::to_string(table.dim()));
  }
  ModelParams params = ckpt.params;  // forward() takes a mutable reference
  Eigen::VectorXd preds(static_cast<Eigen::Index>(data.size()));
  for (std::size_t begin = 0; begin < data.size(); begin += batch_size) {
    const std::size_t end = std::min(begin + batch_size, data.size());
    std::vector<FeatureSequence> feats;
    feats.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      feats.push_back(
          featurize(data[i], ckpt.history_length, table, ckpt.window));
    }
    TimeMajorBatch x = to_time_major(feats);
    ForwardResult out = forward(x, params, ckpt.config, Mode::infer);
    preds.segment(static_cast<Eigen::Index>(begin),
                  static_cast<Eigen::Index>(end - begin)) = out.predictions;
  }
  return preds;
}

EvalReport evaluate(std::span<const ScoredDialogue> data,
                    const EmbeddingTable& table, const Checkpoint& ckpt,
                    std::size_t batch_size) {
  Eigen::VectorXd preds = predict(data, table, ckpt, batch_size);
  Eigen::VectorXd targets(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    targets[static_cast<Eigen::Index>(i)] = static_cast<double>(data[i].score);
  }
  EvalReport report = evaluate_predictions(targets, preds);
  report.history_length = ckpt.history_length;
  return report;
}

SweepResult run_sweep(std::span<const ScoredDialogue> train_data,
                      std::span<const ScoredDialogue> test_data,
                      const EmbeddingTable& table, const SweepConfig& cfg,
                      const SweepProgress& progress) {
  if (cfg.history_lengths.empty()) throw_usage("no history lengths given");
  if (cfg.runs <= 0) throw_usage("runs must be positive");
  if (cfg.jobs <= 0) throw_usage("jobs must be positive");

  struct RunSlot {
    EvalReport report;
    double valid_mae = 0.0;
    Checkpoint ckpt;
  };
  const std::size_t lengths = cfg.history_lengths.size();
  const auto runs = static_cast<std::size_t>(cfg.runs);
  std::vector<RunSlot> slots(lengths * runs);

  std::atomic<std::size_t> next{0};
  std::mutex progress_mu;
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&]() {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= slots.size()) return;
      {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (failure) return;
      }
      const std::size_t li = j / runs;
      const std::size_t run = j % runs;
      try {
        const int length = cfg.history_lengths[li];
        TrainConfig tc = cfg.train;
        tc.seed = cfg.base_seed + run;
        Checkpoint ckpt;
        TrainReport tr = train(train_data, table, length, cfg.window,
                               cfg.model, tc, ckpt);
        EvalReport ev = evaluate(test_data, table, ckpt);
        ev.seed = tc.seed;
        RunSlot& slot = slots[j];
        slot.report = ev;
        slot.valid_mae = tr.best_valid_mae;
        slot.ckpt = std::move(ckpt);
        if (progress) {
          std::lock_guard<std::mutex> lock(progress_mu);
          progress(length, static_cast<int>(run), ev);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  if (cfg.jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const auto n_threads =
        std::min(static_cast<std::size_t>(cfg.jobs), slots.size());
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  SweepResult result;
  result.entries.resize(lengths);
  for (std::size_t li = 0; li < lengths; ++li) {
    SweepEntry& entry = result.entries[li];
    entry.history_length = cfg.history_lengths[li];
    double sum = 0.0;
    std::size_t best = 0;
    for (std::size_t run = 0; run < runs; ++run) {
      RunSlot& slot = slots[li * runs + run];
      entry.runs.push_back(slot.report);
      sum += slot.report.pearson_r;
      if (slot.valid_mae < slots[li * runs + best].valid_mae) best = run;
    }
    entry.mean_r = sum / static_cast<double>(runs);
    if (runs > 1) {
      double ss = 0.0;
      for (const EvalReport& r : entry.runs) {
        const double d = r.pearson_r - entry.mean_r;
        ss += d * d;
      }
      entry.std_r = std::sqrt(ss / static_cast<double>(runs - 1));
    }
    RunSlot& best_slot = slots[li * runs + best];
    entry.best_seed = best_slot.report.seed;
    entry.best_valid_mae = best_slot.valid_mae;
    entry.best_checkpoint = std::move(best_slot.ckpt);
  }
  return result;
}

void write_sweep_json(std::ostream& out, const SweepResult& result) {
  nlohmann::ordered_json doc;
  doc["entries"] = nlohmann::ordered_json::array();
  for (const SweepEntry& entry : result.entries) {
    nlohmann::ordered_json e;
    e["history_length"] = entry.history_length;
    e["mean_r"] = entry.mean_r;
    e["std_r"] = entry.std_r;
    e["best_seed"] = entry.best_seed;
    e["best_valid_mae"] = entry.best_valid_mae;
    e["runs"] = nlohmann::ordered_json::array();
    for (const EvalReport& run : entry.runs) {
      nlohmann::ordered_json r;
      r["seed"] = run.seed;
      r["pearson_r"] = run.pearson_r;
      r["mae"] = run.mae;
      r["pairs"] = run.pairs;
      e["runs"].push_back(std::move(r));
    }
    doc["entries"].push_back(std::move(e));
  }
  out << doc.dump(2) << '\n';
}

void write_bar_csv(std::ostream& out, const SweepResult& result) {
  out << "history_length,mean_r,std_r\n";
  for (const SweepEntry& entry : result.entries) {
    out << entry.history_length << ',' << fmt_double(entry.mean_r) << ','
        << fmt_double(entry.std_r) << '\n';
  }
}

void write_scatter_csv(std::ostream& out, const Eigen::VectorXd& targets,
                       const Eigen::VectorXd& predictions, double jitter_sigma,
                       std::uint64_t seed) {
  if (targets.size() != predictions.size()) {
    throw Error(ErrorKind::internal, "scatter: size mismatch");
  }
  if (jitter_sigma < 0.0) throw_usage("jitter sigma must be non-negative");
  Rng rng = make_rng(seed);
  out << "x_jittered,predicted\n";
  for (Eigen::Index i = 0; i < targets.size(); ++i) {
    const double jitter = jitter_sigma == 0.0 ? 0.0 : jitter_sigma * gaussian(rng);
    out << fmt_double(targets[i] + jitter) << ',' << fmt_double(predictions[i])
        << '\n';
  }
}

}  // namespace dlgreward
