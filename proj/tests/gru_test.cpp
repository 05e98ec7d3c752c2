#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#include "dlgreward/error.hpp"
#include "dlgreward/gru.hpp"

using namespace dlgreward;

namespace {

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

ModelConfig tiny_config(int input_dim, int hidden_dim, int layers,
                        bool batchnorm, double dropout = 0.0) {
  ModelConfig cfg;
  cfg.input_dim = input_dim;
  cfg.hidden_dim = hidden_dim;
  cfg.num_layers = layers;
  cfg.dropout_rate = dropout;
  cfg.batchnorm = batchnorm;
  return cfg;
}

ModelParams zero_params(const ModelConfig& cfg) { return zero_gradients(cfg); }

TimeMajorBatch random_batch(int steps, int batch, int dim, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  TimeMajorBatch x(static_cast<std::size_t>(steps));
  for (auto& xt : x) {
    xt.resize(batch, dim);
    for (Eigen::Index i = 0; i < xt.size(); ++i) {
      xt.data()[i] = uniform_real(rng, -1.0, 1.0);
    }
  }
  return x;
}

// Reference scalar GRU (all dims 1), plain double arithmetic.
struct ScalarGru {
  double wr, ur, br, wz, uz, bz, wc, uc, bc;

  double step(double x, double h) const {
    const double r = sigm(wr * x + ur * h + br);
    const double z = sigm(wz * x + uz * h + bz);
    const double c = std::tanh(wc * x + uc * (r * h) + bc);
    return (1.0 - z) * h + z * c;
  }
};

}  // namespace

TEST_CASE("count_params matches the closed form") {
  ModelConfig defaults;  // 100 -> 256 -> 256 -> 1, batchnorm off
  CHECK(count_params(defaults) == 668417);

  ModelConfig tiny = tiny_config(1, 1, 1, false);
  CHECK(count_params(tiny) == 11);  // 3*(1+1+1) + (1+1)

  ModelConfig tiny_bn = tiny_config(1, 1, 1, true);
  CHECK(count_params(tiny_bn) == 13);

  ModelConfig wide = tiny_config(3, 2, 2, false);
  // layer0: 3*(6+4+2)=36, layer1: 3*(4+4+2)=30, head 3
  CHECK(count_params(wide) == 69);

  ModelConfig defaults_bn = defaults;
  defaults_bn.batchnorm = true;
  CHECK(count_params(defaults_bn) == 668417 + 2 * 2 * 256);
}

TEST_CASE("init_params draws Glorot weights and zero biases") {
  ModelConfig cfg = tiny_config(8, 4, 2, false);
  ModelParams p = init_params(cfg, 123);
  const double bound0 = std::sqrt(6.0 / (8 + 4));
  const double bound_u = std::sqrt(6.0 / (4 + 4));
  CHECK(p.layers[0].w_reset.cwiseAbs().maxCoeff() < bound0);
  CHECK(p.layers[0].w_reset.cwiseAbs().maxCoeff() > 0.1 * bound0);
  CHECK(p.layers[0].u_cand.cwiseAbs().maxCoeff() < bound_u);
  CHECK(p.layers[0].b_reset.norm() == 0.0);
  CHECK(p.layers[1].b_cand.norm() == 0.0);
  CHECK(p.layers[0].bn_gamma.isOnes());
  CHECK(p.layers[0].bn_beta.isZero());
  CHECK(p.layers[0].bn_running_var.isOnes());
  CHECK(p.head.bias == 0.0);

  ModelParams q = init_params(cfg, 123);
  CHECK((p.layers[0].w_reset.array() == q.layers[0].w_reset.array()).all());
  CHECK((p.head.weight.array() == q.head.weight.array()).all());
  ModelParams other = init_params(cfg, 124);
  CHECK(p.layers[0].w_reset != other.layers[0].w_reset);
}

TEST_CASE("zero-weight cell halves the previous state") {
  ModelConfig cfg = tiny_config(2, 3, 1, false);
  ModelParams p = zero_params(cfg);
  Eigen::MatrixXd x = Eigen::MatrixXd::Constant(1, 2, 0.7);
  Eigen::MatrixXd h_prev(1, 3);
  h_prev << 0.2, -0.4, 1.0;
  CellTrace trace;
  Eigen::MatrixXd h =
      cell_forward(x, h_prev, p.layers[0], cfg, Mode::train, &trace);
  CHECK(trace.reset(0, 0) == doctest::Approx(0.5));
  CHECK(trace.update(0, 2) == doctest::Approx(0.5));
  CHECK(trace.cand.norm() == 0.0);
  CHECK(h(0, 0) == doctest::Approx(0.1));
  CHECK(h(0, 1) == doctest::Approx(-0.2));
  CHECK(h(0, 2) == doctest::Approx(0.5));

  Eigen::MatrixXd zero_state = Eigen::MatrixXd::Zero(1, 3);
  Eigen::MatrixXd still =
      cell_forward(x, zero_state, p.layers[0], cfg, Mode::train);
  CHECK(still.norm() == 0.0);
}

TEST_CASE("forward matches a scalar reference implementation") {
  ScalarGru ref{0.3, -0.2, 0.1, -0.4, 0.25, -0.05, 0.7, 0.6, 0.0};
  const double w_o = 1.3, b_o = -0.2;
  const std::vector<double> xs{0.5, -1.0, 0.25};

  ModelConfig cfg = tiny_config(1, 1, 1, false);
  ModelParams p = zero_params(cfg);
  p.layers[0].w_reset(0, 0) = ref.wr;
  p.layers[0].u_reset(0, 0) = ref.ur;
  p.layers[0].b_reset(0) = ref.br;
  p.layers[0].w_update(0, 0) = ref.wz;
  p.layers[0].u_update(0, 0) = ref.uz;
  p.layers[0].b_update(0) = ref.bz;
  p.layers[0].w_cand(0, 0) = ref.wc;
  p.layers[0].u_cand(0, 0) = ref.uc;
  p.layers[0].b_cand(0) = ref.bc;
  p.head.weight(0) = w_o;
  p.head.bias = b_o;

  double h = 0.0;
  TimeMajorBatch x;
  for (double xi : xs) {
    h = ref.step(xi, h);
    x.push_back(Eigen::MatrixXd::Constant(1, 1, xi));
  }
  ForwardResult out =
      forward(x, p, cfg, Mode::infer, nullptr, nullptr, true, true);
  CHECK(out.predictions(0) == doctest::Approx(w_o * h + b_o).epsilon(1e-12));
  CHECK(out.step_outputs(0, 2) == doctest::Approx(out.predictions(0)));

  // One-step base case against the same reference.
  ForwardResult one = forward({x[0]}, p, cfg, Mode::infer);
  CHECK(one.predictions(0) ==
        doctest::Approx(w_o * ref.step(xs[0], 0.0) + b_o).epsilon(1e-12));
}

TEST_CASE("batchnorm train mode normalizes with batch statistics") {
  ModelConfig cfg = tiny_config(1, 1, 1, true);
  ScalarGru ref{0.3, -0.2, 0.1, -0.4, 0.25, -0.05, 0.7, 0.6, 0.0};
  ModelParams p = zero_params(cfg);
  p.layers[0].w_reset(0, 0) = ref.wr;
  p.layers[0].u_reset(0, 0) = ref.ur;
  p.layers[0].b_reset(0) = ref.br;
  p.layers[0].w_update(0, 0) = ref.wz;
  p.layers[0].u_update(0, 0) = ref.uz;
  p.layers[0].b_update(0) = ref.bz;
  p.layers[0].w_cand(0, 0) = ref.wc;
  p.layers[0].u_cand(0, 0) = ref.uc;
  p.layers[0].b_cand(0) = ref.bc;
  p.layers[0].bn_gamma(0) = 1.5;
  p.layers[0].bn_beta(0) = -0.25;
  p.layers[0].bn_running_mean(0) = 0.0;
  p.layers[0].bn_running_var(0) = 1.0;

  Eigen::MatrixXd x(2, 1);
  x << 0.8, -0.3;
  Eigen::MatrixXd h_prev = Eigen::MatrixXd::Zero(2, 1);

  const double s1 = ref.step(0.8, 0.0);
  const double s2 = ref.step(-0.3, 0.0);
  const double mean = (s1 + s2) / 2.0;
  const double var = ((s1 - mean) * (s1 - mean) + (s2 - mean) * (s2 - mean)) / 2.0;
  const double istd = 1.0 / std::sqrt(var + cfg.epsilon);

  CellTrace trace;
  Eigen::MatrixXd h =
      cell_forward(x, h_prev, p.layers[0], cfg, Mode::train, &trace, true);
  CHECK(h(0, 0) == doctest::Approx(1.5 * (s1 - mean) * istd - 0.25).epsilon(1e-12));
  CHECK(h(1, 0) == doctest::Approx(1.5 * (s2 - mean) * istd - 0.25).epsilon(1e-12));
  CHECK(trace.state_pre(0, 0) == doctest::Approx(s1).epsilon(1e-12));

  // Running statistics folded in once with momentum 0.99.
  CHECK(p.layers[0].bn_running_mean(0) ==
        doctest::Approx(0.01 * mean).epsilon(1e-12));
  CHECK(p.layers[0].bn_running_var(0) ==
        doctest::Approx(0.99 + 0.01 * var).epsilon(1e-12));

  // Inference uses the (updated) running statistics as constants.
  const double rm = p.layers[0].bn_running_mean(0);
  const double rv = p.layers[0].bn_running_var(0);
  Eigen::MatrixXd hi =
      cell_forward(x, h_prev, p.layers[0], cfg, Mode::infer);
  CHECK(hi(0, 0) ==
        doctest::Approx(1.5 * (s1 - rm) / std::sqrt(rv + cfg.epsilon) - 0.25)
            .epsilon(1e-12));
}

TEST_CASE("batchnorm with a single row degenerates to beta") {
  ModelConfig cfg = tiny_config(2, 3, 1, true);
  ModelParams p = init_params(cfg, 5);
  p.layers[0].bn_beta.setConstant(0.4);
  Eigen::MatrixXd x = Eigen::MatrixXd::Constant(1, 2, 0.3);
  Eigen::MatrixXd h_prev = Eigen::MatrixXd::Zero(1, 3);
  Eigen::MatrixXd h =
      cell_forward(x, h_prev, p.layers[0], cfg, Mode::train, nullptr, false);
  for (int j = 0; j < 3; ++j) CHECK(h(0, j) == doctest::Approx(0.4));
}

TEST_CASE("gates stay in range and states stay bounded") {
  ModelConfig cfg = tiny_config(4, 5, 2, false);
  ModelParams p = init_params(cfg, 99);
  TimeMajorBatch x = random_batch(6, 3, 4, 17);
  ForwardTrace trace;
  forward(x, p, cfg, Mode::infer, nullptr, &trace);
  for (const LayerTrace& layer : trace.layers) {
    for (const CellTrace& cell : layer.steps) {
      CHECK(cell.reset.minCoeff() > 0.0);
      CHECK(cell.reset.maxCoeff() < 1.0);
      CHECK(cell.update.minCoeff() > 0.0);
      CHECK(cell.update.maxCoeff() < 1.0);
      CHECK(cell.cand.cwiseAbs().maxCoeff() <= 1.0);
    }
    for (const Eigen::MatrixXd& h : layer.hidden) {
      CHECK(h.cwiseAbs().maxCoeff() <= 1.0);
    }
  }
}

TEST_CASE("zero weights predict the head bias") {
  ModelConfig cfg = tiny_config(3, 4, 2, false);
  ModelParams p = zero_params(cfg);
  p.head.bias = 2.5;
  TimeMajorBatch x = random_batch(4, 5, 3, 3);
  ForwardResult out = forward(x, p, cfg, Mode::infer);
  for (int i = 0; i < 5; ++i) CHECK(out.predictions(i) == doctest::Approx(2.5));
}

TEST_CASE("inference is invariant to batch composition") {
  for (bool bn : {false, true}) {
    CAPTURE(bn);
    ModelConfig cfg = tiny_config(3, 6, 2, bn);
    ModelParams p = init_params(cfg, 31);
    if (bn) {
      // Give the running statistics non-trivial values first.
      TimeMajorBatch warm = random_batch(3, 4, 3, 555);
      forward(warm, p, cfg, Mode::train, nullptr, nullptr, true);
    }
    TimeMajorBatch full = random_batch(5, 4, 3, 556);
    ForwardResult batched = forward(full, p, cfg, Mode::infer);
    for (int i = 0; i < 4; ++i) {
      TimeMajorBatch solo;
      for (const Eigen::MatrixXd& xt : full) solo.push_back(xt.row(i));
      ForwardResult single = forward(solo, p, cfg, Mode::infer);
      CHECK(single.predictions(0) ==
            doctest::Approx(batched.predictions(i)).epsilon(1e-10));
    }
  }
}

TEST_CASE("dropout only acts in train mode and rescales by the keep rate") {
  ModelConfig cfg = tiny_config(4, 4, 2, false, 0.5);
  ModelParams p = init_params(cfg, 8);
  TimeMajorBatch x = random_batch(3, 2, 4, 21);

  ForwardResult infer1 = forward(x, p, cfg, Mode::infer);
  ForwardResult infer2 = forward(x, p, cfg, Mode::infer);
  CHECK(infer1.predictions(0) == infer2.predictions(0));

  Rng rng_a = make_rng(7);
  Rng rng_b = make_rng(7);
  ForwardTrace ta, tb;
  ForwardResult train_a = forward(x, p, cfg, Mode::train, &rng_a, &ta);
  ForwardResult train_b = forward(x, p, cfg, Mode::train, &rng_b, &tb);
  CHECK(train_a.predictions(0) == train_b.predictions(0));
  // Mask entries are 0 or 1/keep and the same mask applies at every timestep.
  for (const LayerTrace& layer : ta.layers) {
    REQUIRE(layer.dropout_mask.size() > 0);
    for (Eigen::Index i = 0; i < layer.dropout_mask.size(); ++i) {
      const double m = layer.dropout_mask.data()[i];
      CHECK((m == 0.0 || m == doctest::Approx(2.0)));
    }
  }
  const Eigen::MatrixXd& mask0 = ta.layers[0].dropout_mask;
  for (std::size_t t = 0; t < x.size(); ++t) {
    Eigen::MatrixXd expected = x[t].cwiseProduct(mask0);
    CHECK((ta.layers[0].steps[t].input - expected).norm() == 0.0);
  }
  Rng rng_c = make_rng(8);
  ForwardResult train_c = forward(x, p, cfg, Mode::train, &rng_c);
  CHECK(train_a.predictions(0) != train_c.predictions(0));

  CHECK_THROWS_AS(forward(x, p, cfg, Mode::train, nullptr), Error);
}

TEST_CASE("backward: zero upstream gradient yields zero parameter gradients") {
  ModelConfig cfg = tiny_config(3, 4, 2, true);
  ModelParams p = init_params(cfg, 12);
  TimeMajorBatch x = random_batch(4, 3, 3, 13);
  ForwardTrace trace;
  forward(x, p, cfg, Mode::train, nullptr, &trace, false);
  Gradients g = backward(trace, p, cfg, Eigen::VectorXd::Zero(3));
  for (const LayerParams& layer : g.layers) {
    CHECK(layer.w_reset.norm() == 0.0);
    CHECK(layer.u_cand.norm() == 0.0);
    CHECK(layer.b_update.norm() == 0.0);
    CHECK(layer.bn_gamma.norm() == 0.0);
  }
  CHECK(g.head.weight.norm() == 0.0);
  CHECK(g.head.bias == 0.0);
}

TEST_CASE("backward: head gradients have their closed form") {
  ModelConfig cfg = tiny_config(2, 3, 1, false);
  ModelParams p = init_params(cfg, 44);
  TimeMajorBatch x = random_batch(3, 4, 2, 45);
  ForwardTrace trace;
  forward(x, p, cfg, Mode::train, nullptr, &trace);
  Eigen::VectorXd dpred(4);
  dpred << 0.5, -1.0, 2.0, 0.25;
  Gradients g = backward(trace, p, cfg, dpred);
  CHECK(g.head.bias == doctest::Approx(dpred.sum()));
  const Eigen::MatrixXd& h_last = trace.layers.back().hidden.back();
  Eigen::VectorXd expected = h_last.transpose() * dpred;
  CHECK((g.head.weight - expected).norm() == doctest::Approx(0.0));
}

namespace {

// Finite-difference check of d(w . pred)/d(theta) for every learnable scalar.
// Dropout masks are pinned by reseeding the same stream for every evaluation.
double fd_max_rel_err(const ModelConfig& cfg, std::uint64_t seed, int steps,
                      int batch) {
  ModelParams p = init_params(cfg, seed);
  TimeMajorBatch x = random_batch(steps, batch, cfg.input_dim, seed + 1);
  Eigen::VectorXd w(batch);
  {
    Rng rng = make_rng(seed + 2);
    for (int i = 0; i < batch; ++i) w(i) = uniform_real(rng, -1.0, 1.0);
  }
  const std::uint64_t mask_seed = seed + 3;

  auto loss = [&](ModelParams& params) {
    Rng rng = make_rng(mask_seed);
    ForwardResult out = forward(x, params, cfg, Mode::train, &rng, nullptr,
                                /*update_running=*/false);
    return w.dot(out.predictions);
  };

  ForwardTrace trace;
  {
    Rng rng = make_rng(mask_seed);
    forward(x, p, cfg, Mode::train, &rng, &trace, false);
  }
  Gradients analytic = backward(trace, p, cfg, w);

  std::vector<double*> param_ptrs;
  std::vector<double*> grad_ptrs;
  visit_learnable(cfg, p, [&](double* data, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) param_ptrs.push_back(data + i);
  });
  visit_learnable(cfg, analytic, [&](double* data, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) grad_ptrs.push_back(data + i);
  });
  REQUIRE(param_ptrs.size() == grad_ptrs.size());

  const double h = 1e-6;
  double max_rel = 0.0;
  for (std::size_t k = 0; k < param_ptrs.size(); ++k) {
    const double orig = *param_ptrs[k];
    *param_ptrs[k] = orig + h;
    const double up = loss(p);
    *param_ptrs[k] = orig - h;
    const double down = loss(p);
    *param_ptrs[k] = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double analytic_v = *grad_ptrs[k];
    // The guard keeps central-difference roundoff (~1e-9 absolute on these
    // losses) from registering as relative error on near-zero gradients.
    const double denom = std::max(std::abs(numeric) + std::abs(analytic_v), 1e-5);
    max_rel = std::max(max_rel, std::abs(numeric - analytic_v) / denom);
  }
  return max_rel;
}

}  // namespace

TEST_CASE("analytic gradients agree with finite differences") {
  CHECK(fd_max_rel_err(tiny_config(2, 3, 1, false), 100, 3, 3) < 1e-4);
  CHECK(fd_max_rel_err(tiny_config(3, 2, 2, false), 101, 2, 4) < 1e-4);
  CHECK(fd_max_rel_err(tiny_config(2, 2, 2, true), 102, 3, 3) < 1e-4);
  CHECK(fd_max_rel_err(tiny_config(2, 3, 2, false, 0.4), 103, 2, 3) < 1e-4);
  CHECK(fd_max_rel_err(tiny_config(2, 2, 3, true, 0.3), 104, 2, 4) < 1e-4);
}

TEST_CASE("checkpoints round-trip byte for byte") {
  ModelConfig cfg = tiny_config(3, 4, 2, true, 0.15);
  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.history_length = 7;
  ckpt.window = Window::first;
  ckpt.params = init_params(cfg, 314);
  ckpt.params.head.bias = -0.75;
  ckpt.params.layers[0].bn_running_mean.setConstant(0.123);

  const std::string path_a = "gru_test_ckpt_a.bin";
  const std::string path_b = "gru_test_ckpt_b.bin";
  save_checkpoint(path_a, ckpt);
  Checkpoint loaded = load_checkpoint(path_a);
  CHECK(loaded.history_length == 7);
  CHECK(loaded.window == Window::first);
  CHECK(loaded.config.batchnorm);
  CHECK(loaded.config.dropout_rate == doctest::Approx(0.15));
  CHECK(loaded.params.head.bias == -0.75);
  CHECK((loaded.params.layers[0].w_cand.array() ==
         ckpt.params.layers[0].w_cand.array())
            .all());
  CHECK((loaded.params.layers[0].bn_running_mean.array() == 0.123).all());

  save_checkpoint(path_b, loaded);
  std::ifstream a(path_a, std::ios::binary), b(path_b, std::ios::binary);
  std::string bytes_a((std::istreambuf_iterator<char>(a)), {});
  std::string bytes_b((std::istreambuf_iterator<char>(b)), {});
  CHECK(bytes_a == bytes_b);
  CHECK(!bytes_a.empty());
  std::remove(path_a.c_str());
  std::remove(path_b.c_str());
}

TEST_CASE("checkpoint loading rejects corruption") {
  ModelConfig cfg = tiny_config(2, 2, 1, false);
  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.history_length = 3;
  ckpt.params = init_params(cfg, 1);
  const std::string path = "gru_test_ckpt_c.bin";
  save_checkpoint(path, ckpt);

  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  in.close();

  auto load_bytes = [&](const std::string& data) {
    std::ofstream out(path, std::ios::binary);
    out << data;
    out.close();
    return load_checkpoint(path);
  };
  auto kind_of = [&](const std::function<void()>& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::internal;
  };
  CHECK(kind_of([&] { load_bytes(bytes.substr(0, bytes.size() - 5)); }) ==
        ErrorKind::format);
  CHECK(kind_of([&] { load_bytes(bytes + "zz"); }) == ErrorKind::format);
  std::string wrong = bytes;
  wrong[3] = 'X';
  CHECK(kind_of([&] { load_bytes(wrong); }) == ErrorKind::format);
  CHECK(kind_of([] { (void)load_checkpoint("does_not_exist.bin"); }) ==
        ErrorKind::io);
  std::remove(path.c_str());
}

TEST_CASE("to_time_major transposes features and targets line up") {
  FeatureSequence a;
  a.vectors = Eigen::MatrixXd::Zero(2, 3);
  a.vectors << 1, 2, 3, 4, 5, 6;
  a.target = -1.0;
  FeatureSequence b;
  b.vectors = Eigen::MatrixXd::Zero(2, 3);
  b.vectors << 7, 8, 9, 10, 11, 12;
  b.target = 2.0;
  std::vector<FeatureSequence> feats{a, b};
  TimeMajorBatch x = to_time_major(feats);
  REQUIRE(x.size() == 2);
  CHECK(x[0](0, 0) == 1);
  CHECK(x[0](1, 0) == 7);
  CHECK(x[1](0, 2) == 6);
  CHECK(x[1](1, 2) == 12);
  Eigen::VectorXd y = targets_of(feats);
  CHECK(y(0) == -1.0);
  CHECK(y(1) == 2.0);

  FeatureSequence ragged;
  ragged.vectors = Eigen::MatrixXd::Zero(3, 3);
  std::vector<FeatureSequence> bad{a, ragged};
  CHECK_THROWS_AS(to_time_major(bad), Error);
}
