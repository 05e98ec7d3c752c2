#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "dlgreward/corpus.hpp"
#include "dlgreward/error.hpp"
#include "dlgreward/evaluation.hpp"
#include "dlgreward/featurizer.hpp"
#include "dlgreward/gru.hpp"
#include "dlgreward/manifest.hpp"
#include "dlgreward/noise.hpp"
#include "dlgreward/trainer.hpp"

namespace {

using dlgreward::Manifest;
using ordered_json = nlohmann::ordered_json;

// "" means stdout.
void emit_text(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) dlgreward::throw_io("cannot open for writing: " + path);
  out << content;
  out.flush();
  if (!out) dlgreward::throw_io("write failed: " + path);
}

void finish_manifest(Manifest& manifest, const std::string& primary_output) {
  for (auto& [path, digest] : manifest.inputs) {
    digest = dlgreward::file_digest(path);
  }
  for (auto& [path, digest] : manifest.outputs) {
    digest = dlgreward::file_digest(path);
  }
  dlgreward::write_manifest(dlgreward::manifest_path_for(primary_output),
                            manifest);
}

struct ModelFlags {
  int hidden = 256;
  int layers = 2;
  double dropout = 0.2;
  bool batchnorm = false;
  double epsilon = 1e-5;
  double bn_momentum = 0.99;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--hidden", hidden, "Hidden units per layer")
        ->capture_default_str();
    cmd->add_option("--layers", layers, "Recurrent layers")
        ->capture_default_str();
    cmd->add_option("--dropout", dropout, "Dropout rate on layer inputs")
        ->capture_default_str();
    cmd->add_flag("--batchnorm", batchnorm,
                  "Normalize the recurrent state update");
    cmd->add_option("--epsilon", epsilon, "Normalization stabilizer")
        ->capture_default_str();
    cmd->add_option("--bn-momentum", bn_momentum,
                    "Running-statistics momentum")
        ->capture_default_str();
  }

  dlgreward::ModelConfig to_config(int input_dim) const {
    dlgreward::ModelConfig cfg;
    cfg.input_dim = input_dim;
    cfg.hidden_dim = hidden;
    cfg.num_layers = layers;
    cfg.dropout_rate = dropout;
    cfg.batchnorm = batchnorm;
    cfg.epsilon = epsilon;
    cfg.bn_momentum = bn_momentum;
    return cfg;
  }

  void describe(ordered_json& doc) const {
    doc["hidden"] = hidden;
    doc["layers"] = layers;
    doc["dropout"] = dropout;
    doc["batchnorm"] = batchnorm;
    doc["epsilon"] = epsilon;
    doc["bn_momentum"] = bn_momentum;
  }
};

struct TrainFlags {
  int batch_size = 128;
  int max_epochs = 100;
  int patience = 10;
  double valid_fraction = 0.2;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--batch-size", batch_size, "Training batch size")
        ->capture_default_str();
    cmd->add_option("--max-epochs", max_epochs, "Maximum training epochs")
        ->capture_default_str();
    cmd->add_option("--patience", patience,
                    "Stop after this many epochs without improvement")
        ->capture_default_str();
    cmd->add_option("--valid-fraction", valid_fraction,
                    "Fraction of dialogues held out for validation")
        ->capture_default_str();
    cmd->add_option("--learning-rate", learning_rate, "Adam learning rate")
        ->capture_default_str();
    cmd->add_option("--beta1", beta1, "Adam first-moment decay")
        ->capture_default_str();
    cmd->add_option("--beta2", beta2, "Adam second-moment decay")
        ->capture_default_str();
    cmd->add_option("--adam-epsilon", adam_epsilon, "Adam stabilizer")
        ->capture_default_str();
  }

  dlgreward::TrainConfig to_config(std::uint64_t seed) const {
    dlgreward::TrainConfig cfg;
    cfg.batch_size = batch_size;
    cfg.max_epochs = max_epochs;
    cfg.patience = patience;
    cfg.valid_fraction = valid_fraction;
    cfg.learning_rate = learning_rate;
    cfg.beta1 = beta1;
    cfg.beta2 = beta2;
    cfg.adam_epsilon = adam_epsilon;
    cfg.seed = seed;
    return cfg;
  }

  void describe(ordered_json& doc) const {
    doc["batch_size"] = batch_size;
    doc["max_epochs"] = max_epochs;
    doc["patience"] = patience;
    doc["valid_fraction"] = valid_fraction;
    doc["learning_rate"] = learning_rate;
    doc["beta1"] = beta1;
    doc["beta2"] = beta2;
    doc["adam_epsilon"] = adam_epsilon;
  }
};

int run(int argc, char** argv) {
  CLI::App app{"Dialogue reward prediction pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version",
                       std::string(dlgreward::kToolName) + " " +
                           dlgreward::kToolVersion);
  app.set_config("--config", "", "Read option values from a TOML file");

  // ---- stats ----
  auto* stats_cmd =
      app.add_subcommand("stats", "Summarize a dialogue corpus")
          ->configurable();
  std::string stats_corpus, stats_output;
  stats_cmd->add_option("corpus", stats_corpus, "Dialogue corpus file")
      ->required();
  stats_cmd->add_option("--output", stats_output,
                        "Write the JSON report here instead of stdout");
  stats_cmd->callback([&] {
    auto corpus = dlgreward::load_corpus(stats_corpus);
    auto stats = dlgreward::compute_stats(corpus);
    ordered_json doc;
    doc["num_dialogues"] = stats.num_dialogues;
    doc["mean_turns"] = stats.mean_turns;
    doc["mean_words"] = stats.mean_words;
    doc["vocab_size"] = stats.vocab_size;
    emit_text(stats_output, doc.dump(2) + "\n");
    if (!stats_output.empty()) {
      Manifest m;
      m.subcommand = "stats";
      m.config = ordered_json::object();
      m.inputs = {{stats_corpus, ""}};
      m.outputs = {{stats_output, ""}};
      finish_manifest(m, stats_output);
    }
  });

  // ---- generate ----
  auto* gen_cmd =
      app.add_subcommand("generate",
                         "Build a noise-graded scored dataset from a corpus")
          ->configurable();
  std::string gen_corpus, gen_output;
  std::uint64_t gen_seed = 0;
  gen_cmd->add_option("corpus", gen_corpus, "Seed dialogue corpus")->required();
  gen_cmd->add_option("--seed", gen_seed, "Replacement sampling seed")
      ->capture_default_str();
  gen_cmd->add_option("--output", gen_output, "Scored dataset file")
      ->required();
  gen_cmd->callback([&] {
    auto corpus = dlgreward::load_corpus(gen_corpus);
    auto data = dlgreward::generate_dataset(corpus, gen_seed);
    dlgreward::save_scored(gen_output, data);
    Manifest m;
    m.subcommand = "generate";
    m.config = ordered_json{{"seed", gen_seed}};
    m.inputs = {{gen_corpus, ""}};
    m.outputs = {{gen_output, ""}};
    finish_manifest(m, gen_output);
    std::cerr << "wrote " << data.size() << " scored dialogues\n";
  });

  // ---- featurize ----
  auto* feat_cmd =
      app.add_subcommand("featurize",
                         "Turn a scored dataset into cached feature sequences")
          ->configurable();
  std::string feat_scored, feat_embeddings, feat_output, feat_window = "last";
  int feat_dim = 100, feat_len = 0;
  feat_cmd->add_option("scored", feat_scored, "Scored dataset file")
      ->required();
  feat_cmd->add_option("--embeddings", feat_embeddings, "Word vector file")
      ->required();
  feat_cmd->add_option("--dim", feat_dim, "Embedding dimensions to keep")
      ->capture_default_str();
  feat_cmd->add_option("--history-length", feat_len, "Sentences per sequence")
      ->required();
  feat_cmd->add_option("--window", feat_window, "Which sentences to keep when truncating (last|first)")
      ->capture_default_str();
  feat_cmd->add_option("--output", feat_output, "Feature cache file")
      ->required();
  feat_cmd->callback([&] {
    const dlgreward::Window window = dlgreward::parse_window(feat_window);
    auto data = dlgreward::load_scored(feat_scored);
    auto table = dlgreward::load_embeddings(feat_embeddings, feat_dim);
    std::vector<dlgreward::FeatureSequence> feats;
    feats.reserve(data.size());
    for (const auto& d : data) {
      feats.push_back(dlgreward::featurize(d, feat_len, table, window));
    }
    dlgreward::save_feature_cache(feat_output, feats, feat_dim, feat_len);
    Manifest m;
    m.subcommand = "featurize";
    m.config = ordered_json{{"dim", feat_dim},
                            {"history_length", feat_len},
                            {"window", feat_window}};
    m.inputs = {{feat_scored, ""}, {feat_embeddings, ""}};
    m.outputs = {{feat_output, ""}};
    finish_manifest(m, feat_output);
    std::cerr << "wrote " << feats.size() << " feature sequences\n";
  });

  // ---- train ----
  auto* train_cmd =
      app.add_subcommand("train", "Train a reward regressor")->configurable();
  std::string train_scored, train_embeddings, train_output, train_log,
      train_window = "last";
  int train_dim = 100, train_len = 0;
  std::uint64_t train_seed = 0;
  ModelFlags train_model;
  TrainFlags train_flags;
  train_cmd->add_option("scored", train_scored, "Scored dataset file")
      ->required();
  train_cmd->add_option("--embeddings", train_embeddings, "Word vector file")
      ->required();
  train_cmd->add_option("--dim", train_dim, "Embedding dimensions to keep")
      ->capture_default_str();
  train_cmd
      ->add_option("--history-length", train_len, "Sentences per sequence")
      ->required();
  train_cmd
      ->add_option("--window", train_window,
                   "Which sentences to keep when truncating (last|first)")
      ->capture_default_str();
  train_model.add_to(train_cmd);
  train_flags.add_to(train_cmd);
  train_cmd->add_option("--seed", train_seed, "Training seed")
      ->capture_default_str();
  train_cmd->add_option("--output", train_output, "Checkpoint file")
      ->required();
  train_cmd->add_option("--log", train_log, "Per-epoch JSONL log file");
  train_cmd->callback([&] {
    const dlgreward::Window window = dlgreward::parse_window(train_window);
    auto data = dlgreward::load_scored(train_scored);
    auto table = dlgreward::load_embeddings(train_embeddings, train_dim);
    const dlgreward::ModelConfig model_cfg = train_model.to_config(table.dim());
    const dlgreward::TrainConfig train_cfg = train_flags.to_config(train_seed);

    std::ofstream log;
    if (!train_log.empty()) {
      log.open(train_log, std::ios::binary);
      if (!log) dlgreward::throw_io("cannot open for writing: " + train_log);
    }
    auto on_epoch = [&](const dlgreward::EpochStats& stats) {
      if (log.is_open()) {
        ordered_json line;
        line["epoch"] = stats.epoch;
        line["train_mae"] = stats.train_mae;
        line["valid_mae"] = stats.valid_mae;
        line["improved"] = stats.improved;
        log << line.dump() << '\n';
      }
      std::cerr << "epoch " << stats.epoch << " train_mae " << stats.train_mae
                << " valid_mae " << stats.valid_mae
                << (stats.improved ? " *" : "") << '\n';
    };

    dlgreward::Checkpoint ckpt;
    dlgreward::TrainReport report =
        dlgreward::train(data, table, train_len, window, model_cfg, train_cfg,
                         ckpt, on_epoch);
    if (log.is_open()) {
      log.flush();
      if (!log) dlgreward::throw_io("write failed: " + train_log);
      log.close();
    }
    dlgreward::save_checkpoint(train_output, ckpt);

    Manifest m;
    m.subcommand = "train";
    ordered_json cfg;
    cfg["dim"] = train_dim;
    cfg["history_length"] = train_len;
    cfg["window"] = train_window;
    train_model.describe(cfg);
    train_flags.describe(cfg);
    cfg["seed"] = train_seed;
    cfg["epochs_run"] = report.epochs_run;
    cfg["best_epoch"] = report.best_epoch;
    cfg["best_valid_mae"] = report.best_valid_mae;
    cfg["stopped_early"] = report.stopped_early;
    m.config = cfg;
    m.inputs = {{train_scored, ""}, {train_embeddings, ""}};
    m.outputs = {{train_output, ""}};
    if (!train_log.empty()) m.outputs.push_back({train_log, ""});
    finish_manifest(m, train_output);
    std::cerr << "best epoch " << report.best_epoch << " valid_mae "
              << report.best_valid_mae << '\n';
  });

  // ---- evaluate ----
  auto* eval_cmd =
      app.add_subcommand("evaluate",
                         "Score a checkpoint against a held-out dataset")
          ->configurable();
  std::string eval_ckpt, eval_scored, eval_embeddings, eval_output;
  int eval_dim = 100, eval_batch = 256;
  eval_cmd->add_option("checkpoint", eval_ckpt, "Checkpoint file")->required();
  eval_cmd->add_option("scored", eval_scored, "Scored dataset file")
      ->required();
  eval_cmd->add_option("--embeddings", eval_embeddings, "Word vector file")
      ->required();
  eval_cmd->add_option("--dim", eval_dim, "Embedding dimensions to keep")
      ->capture_default_str();
  eval_cmd->add_option("--batch-size", eval_batch, "Prediction batch size")
      ->capture_default_str();
  eval_cmd->add_option("--output", eval_output,
                       "Write the JSON report here instead of stdout");
  eval_cmd->callback([&] {
    auto ckpt = dlgreward::load_checkpoint(eval_ckpt);
    auto data = dlgreward::load_scored(eval_scored);
    auto table = dlgreward::load_embeddings(eval_embeddings, eval_dim);
    auto report = dlgreward::evaluate(data, table, ckpt,
                                      static_cast<std::size_t>(eval_batch));
    ordered_json doc;
    doc["history_length"] = report.history_length;
    doc["pearson_r"] = report.pearson_r;
    doc["mae"] = report.mae;
    doc["pairs"] = report.pairs;
    emit_text(eval_output, doc.dump(2) + "\n");
    if (!eval_output.empty()) {
      Manifest m;
      m.subcommand = "evaluate";
      m.config = ordered_json{{"dim", eval_dim}, {"batch_size", eval_batch}};
      m.inputs = {{eval_ckpt, ""}, {eval_scored, ""}, {eval_embeddings, ""}};
      m.outputs = {{eval_output, ""}};
      finish_manifest(m, eval_output);
    }
  });

  // ---- predict ----
  auto* pred_cmd =
      app.add_subcommand("predict", "Emit per-dialogue predictions as CSV")
          ->configurable();
  std::string pred_ckpt, pred_scored, pred_embeddings, pred_output;
  int pred_dim = 100, pred_batch = 256;
  pred_cmd->add_option("checkpoint", pred_ckpt, "Checkpoint file")->required();
  pred_cmd->add_option("scored", pred_scored, "Scored dataset file")
      ->required();
  pred_cmd->add_option("--embeddings", pred_embeddings, "Word vector file")
      ->required();
  pred_cmd->add_option("--dim", pred_dim, "Embedding dimensions to keep")
      ->capture_default_str();
  pred_cmd->add_option("--batch-size", pred_batch, "Prediction batch size")
      ->capture_default_str();
  pred_cmd->add_option("--output", pred_output,
                       "Write the CSV here instead of stdout");
  pred_cmd->callback([&] {
    auto ckpt = dlgreward::load_checkpoint(pred_ckpt);
    auto data = dlgreward::load_scored(pred_scored);
    auto table = dlgreward::load_embeddings(pred_embeddings, pred_dim);
    Eigen::VectorXd preds = dlgreward::predict(
        data, table, ckpt, static_cast<std::size_t>(pred_batch));
    std::string csv = "id,target,predicted\n";
    char buf[64];
    for (std::size_t i = 0; i < data.size(); ++i) {
      csv += data[i].dialogue.id;
      std::snprintf(buf, sizeof(buf), ",%d,%.17g\n", data[i].score,
                    preds[static_cast<Eigen::Index>(i)]);
      csv += buf;
    }
    emit_text(pred_output, csv);
    if (!pred_output.empty()) {
      Manifest m;
      m.subcommand = "predict";
      m.config = ordered_json{{"dim", pred_dim}, {"batch_size", pred_batch}};
      m.inputs = {{pred_ckpt, ""}, {pred_scored, ""}, {pred_embeddings, ""}};
      m.outputs = {{pred_output, ""}};
      finish_manifest(m, pred_output);
    }
  });

  // ---- sweep ----
  auto* sweep_cmd =
      app.add_subcommand(
             "sweep", "Train and evaluate across history lengths and seeds")
          ->configurable();
  std::string sweep_train, sweep_test, sweep_embeddings, sweep_output,
      sweep_bar_csv, sweep_ckpt_dir, sweep_window = "last";
  int sweep_dim = 100, sweep_runs = 3, sweep_jobs = 1;
  std::uint64_t sweep_base_seed = 0;
  std::vector<int> sweep_lengths{1, 3, 5, 10, 25, 50};
  ModelFlags sweep_model;
  TrainFlags sweep_flags;
  sweep_cmd->add_option("train", sweep_train, "Scored training dataset")
      ->required();
  sweep_cmd->add_option("test", sweep_test, "Scored evaluation dataset")
      ->required();
  sweep_cmd->add_option("--embeddings", sweep_embeddings, "Word vector file")
      ->required();
  sweep_cmd->add_option("--dim", sweep_dim, "Embedding dimensions to keep")
      ->capture_default_str();
  sweep_cmd
      ->add_option("--lengths", sweep_lengths, "History lengths to sweep")
      ->capture_default_str();
  sweep_cmd->add_option("--runs", sweep_runs, "Seeded runs per length")
      ->capture_default_str();
  sweep_cmd->add_option("--base-seed", sweep_base_seed,
                        "Seed of the first run; run k uses base+k")
      ->capture_default_str();
  sweep_cmd->add_option("--jobs", sweep_jobs, "Concurrent training jobs")
      ->capture_default_str();
  sweep_cmd
      ->add_option("--window", sweep_window,
                   "Which sentences to keep when truncating (last|first)")
      ->capture_default_str();
  sweep_model.add_to(sweep_cmd);
  sweep_flags.add_to(sweep_cmd);
  sweep_cmd->add_option("--output", sweep_output, "Summary JSON file")
      ->required();
  sweep_cmd->add_option("--bar-csv", sweep_bar_csv,
                        "Also write per-length mean/std as CSV");
  sweep_cmd->add_option("--checkpoint-dir", sweep_ckpt_dir,
                        "Save each length's best checkpoint in this directory");
  sweep_cmd->callback([&] {
    auto train_data = dlgreward::load_scored(sweep_train);
    auto test_data = dlgreward::load_scored(sweep_test);
    auto table = dlgreward::load_embeddings(sweep_embeddings, sweep_dim);

    dlgreward::SweepConfig cfg;
    cfg.history_lengths = sweep_lengths;
    cfg.runs = sweep_runs;
    cfg.base_seed = sweep_base_seed;
    cfg.jobs = sweep_jobs;
    cfg.window = dlgreward::parse_window(sweep_window);
    cfg.model = sweep_model.to_config(table.dim());
    cfg.train = sweep_flags.to_config(0);

    auto progress = [](int length, int run, const dlgreward::EvalReport& r) {
      std::cerr << "L=" << length << " run " << run << " r=" << r.pearson_r
                << " mae=" << r.mae << '\n';
    };
    dlgreward::SweepResult result = dlgreward::run_sweep(
        train_data, test_data, table, cfg, progress);

    Manifest m;
    m.subcommand = "sweep";
    ordered_json mcfg;
    mcfg["dim"] = sweep_dim;
    mcfg["lengths"] = sweep_lengths;
    mcfg["runs"] = sweep_runs;
    mcfg["base_seed"] = sweep_base_seed;
    mcfg["jobs"] = sweep_jobs;
    mcfg["window"] = sweep_window;
    sweep_model.describe(mcfg);
    sweep_flags.describe(mcfg);
    m.config = mcfg;
    m.inputs = {{sweep_train, ""}, {sweep_test, ""}, {sweep_embeddings, ""}};

    {
      std::ofstream out(sweep_output, std::ios::binary);
      if (!out) dlgreward::throw_io("cannot open for writing: " + sweep_output);
      dlgreward::write_sweep_json(out, result);
      out.flush();
      if (!out) dlgreward::throw_io("write failed: " + sweep_output);
    }
    m.outputs = {{sweep_output, ""}};
    if (!sweep_bar_csv.empty()) {
      std::ofstream out(sweep_bar_csv, std::ios::binary);
      if (!out) {
        dlgreward::throw_io("cannot open for writing: " + sweep_bar_csv);
      }
      dlgreward::write_bar_csv(out, result);
      out.flush();
      if (!out) dlgreward::throw_io("write failed: " + sweep_bar_csv);
      m.outputs.push_back({sweep_bar_csv, ""});
    }
    if (!sweep_ckpt_dir.empty()) {
      for (const dlgreward::SweepEntry& entry : result.entries) {
        const std::string path = sweep_ckpt_dir + "/ckpt_L" +
                                 std::to_string(entry.history_length) + ".bin";
        dlgreward::save_checkpoint(path, entry.best_checkpoint);
        m.outputs.push_back({path, ""});
      }
    }
    finish_manifest(m, sweep_output);
  });

  // ---- export-scatter ----
  auto* scatter_cmd =
      app.add_subcommand("export-scatter",
                         "Predictions vs jittered targets as CSV")
          ->configurable();
  std::string sc_ckpt, sc_scored, sc_embeddings, sc_output;
  int sc_dim = 100, sc_batch = 256;
  double sc_sigma = 0.1;
  std::uint64_t sc_seed = 0;
  scatter_cmd->add_option("checkpoint", sc_ckpt, "Checkpoint file")
      ->required();
  scatter_cmd->add_option("scored", sc_scored, "Scored dataset file")
      ->required();
  scatter_cmd->add_option("--embeddings", sc_embeddings, "Word vector file")
      ->required();
  scatter_cmd->add_option("--dim", sc_dim, "Embedding dimensions to keep")
      ->capture_default_str();
  scatter_cmd->add_option("--batch-size", sc_batch, "Prediction batch size")
      ->capture_default_str();
  scatter_cmd
      ->add_option("--sigma", sc_sigma, "Stddev of the jitter on targets")
      ->capture_default_str();
  scatter_cmd->add_option("--seed", sc_seed, "Jitter seed")
      ->capture_default_str();
  scatter_cmd->add_option("--output", sc_output, "Scatter CSV file")
      ->required();
  scatter_cmd->callback([&] {
    auto ckpt = dlgreward::load_checkpoint(sc_ckpt);
    auto data = dlgreward::load_scored(sc_scored);
    auto table = dlgreward::load_embeddings(sc_embeddings, sc_dim);
    Eigen::VectorXd preds =
        dlgreward::predict(data, table, ckpt, static_cast<std::size_t>(sc_batch));
    Eigen::VectorXd targets(static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
      targets[static_cast<Eigen::Index>(i)] =
          static_cast<double>(data[i].score);
    }
    std::ofstream out(sc_output, std::ios::binary);
    if (!out) dlgreward::throw_io("cannot open for writing: " + sc_output);
    dlgreward::write_scatter_csv(out, targets, preds, sc_sigma, sc_seed);
    out.flush();
    if (!out) dlgreward::throw_io("write failed: " + sc_output);
    Manifest m;
    m.subcommand = "export-scatter";
    m.config = ordered_json{{"dim", sc_dim},
                            {"batch_size", sc_batch},
                            {"sigma", sc_sigma},
                            {"seed", sc_seed}};
    m.inputs = {{sc_ckpt, ""}, {sc_scored, ""}, {sc_embeddings, ""}};
    m.outputs = {{sc_output, ""}};
    finish_manifest(m, sc_output);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion& e) {
    std::cout << e.what() << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    nlohmann::json err{{"error", "usage"}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const dlgreward::Error& e) {
    nlohmann::json err{{"error", e.kind_name()}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    nlohmann::json err{{"error", "internal"}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return 1;
  }
}
