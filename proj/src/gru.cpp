#include "dlgreward/gru.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "dlgreward/error.hpp"

namespace dlgreward {

namespace {

constexpr char kCkptMagic[8] = {'D', 'R', 'W', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kCkptVersion = 1;
constexpr std::uint32_t kByteOrderMark = 0x01020304;

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& a) {
  return (1.0 / (1.0 + (-a.array()).exp())).matrix();
}

void glorot_fill(Eigen::MatrixXd& m, int fan_in, int fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  double* p = m.data();
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    p[i] = bound * (2.0 * uniform_real(rng) - 1.0);
  }
}

int layer_input_dim(const ModelConfig& cfg, int layer) {
  return layer == 0 ? cfg.input_dim : cfg.hidden_dim;
}

}  // namespace

void ModelConfig::validate() const {
  if (input_dim <= 0 || hidden_dim <= 0 || num_layers <= 0) {
    throw_usage("model dimensions must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw_usage("dropout_rate must be in [0, 1)");
  }
  if (!(epsilon > 0.0)) {
    throw_usage("epsilon must be positive");
  }
  if (!(bn_momentum >= 0.0 && bn_momentum < 1.0)) {
    throw_usage("bn_momentum must be in [0, 1)");
  }
}

std::int64_t count_params(const ModelConfig& cfg) {
  cfg.validate();
  const std::int64_t h = cfg.hidden_dim;
  std::int64_t total = 0;
  for (int layer = 0; layer < cfg.num_layers; ++layer) {
    const std::int64_t in = layer_input_dim(cfg, layer);
    total += 3 * (h * in + h * h + h);
    if (cfg.batchnorm) total += 2 * h;
  }
  total += h + 1;  // head
  return total;
}

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng = make_rng(seed);
  const int h = cfg.hidden_dim;
  ModelParams params;
  params.layers.resize(cfg.num_layers);
  for (int l = 0; l < cfg.num_layers; ++l) {
    const int in = layer_input_dim(cfg, l);
    LayerParams& layer = params.layers[l];
    layer.w_reset.resize(h, in);
    layer.u_reset.resize(h, h);
    layer.w_update.resize(h, in);
    layer.u_update.resize(h, h);
    layer.w_cand.resize(h, in);
    layer.u_cand.resize(h, h);
    glorot_fill(layer.w_reset, in, h, rng);
    glorot_fill(layer.u_reset, h, h, rng);
    glorot_fill(layer.w_update, in, h, rng);
    glorot_fill(layer.u_update, h, h, rng);
    glorot_fill(layer.w_cand, in, h, rng);
    glorot_fill(layer.u_cand, h, h, rng);
    layer.b_reset = Eigen::VectorXd::Zero(h);
    layer.b_update = Eigen::VectorXd::Zero(h);
    layer.b_cand = Eigen::VectorXd::Zero(h);
    layer.bn_gamma = Eigen::VectorXd::Ones(h);
    layer.bn_beta = Eigen::VectorXd::Zero(h);
    layer.bn_running_mean = Eigen::VectorXd::Zero(h);
    layer.bn_running_var = Eigen::VectorXd::Ones(h);
  }
  params.head.weight.resize(h);
  {
    Eigen::MatrixXd tmp(h, 1);
    glorot_fill(tmp, h, 1, rng);
    params.head.weight = tmp.col(0);
  }
  params.head.bias = 0.0;
  return params;
}

Gradients zero_gradients(const ModelConfig& cfg) {
  cfg.validate();
  const int h = cfg.hidden_dim;
  Gradients g;
  g.layers.resize(cfg.num_layers);
  for (int l = 0; l < cfg.num_layers; ++l) {
    const int in = layer_input_dim(cfg, l);
    LayerParams& layer = g.layers[l];
    layer.w_reset = Eigen::MatrixXd::Zero(h, in);
    layer.u_reset = Eigen::MatrixXd::Zero(h, h);
    layer.w_update = Eigen::MatrixXd::Zero(h, in);
    layer.u_update = Eigen::MatrixXd::Zero(h, h);
    layer.w_cand = Eigen::MatrixXd::Zero(h, in);
    layer.u_cand = Eigen::MatrixXd::Zero(h, h);
    layer.b_reset = Eigen::VectorXd::Zero(h);
    layer.b_update = Eigen::VectorXd::Zero(h);
    layer.b_cand = Eigen::VectorXd::Zero(h);
    layer.bn_gamma = Eigen::VectorXd::Zero(h);
    layer.bn_beta = Eigen::VectorXd::Zero(h);
    layer.bn_running_mean = Eigen::VectorXd::Zero(h);
    layer.bn_running_var = Eigen::VectorXd::Zero(h);
  }
  g.head.weight = Eigen::VectorXd::Zero(h);
  g.head.bias = 0.0;
  return g;
}

TimeMajorBatch to_time_major(std::span<const FeatureSequence> feats) {
  if (feats.empty()) {
    throw Error(ErrorKind::internal, "to_time_major: empty batch");
  }
  const Eigen::Index steps = feats[0].vectors.rows();
  const Eigen::Index dim = feats[0].vectors.cols();
  for (const FeatureSequence& f : feats) {
    if (f.vectors.rows() != steps || f.vectors.cols() != dim) {
      throw Error(ErrorKind::internal, "to_time_major: ragged batch");
    }
  }
  TimeMajorBatch x(static_cast<std::size_t>(steps));
  for (Eigen::Index t = 0; t < steps; ++t) {
    x[static_cast<std::size_t>(t)].resize(static_cast<Eigen::Index>(feats.size()), dim);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(feats.size()); ++i) {
      x[static_cast<std::size_t>(t)].row(i) = feats[static_cast<std::size_t>(i)].vectors.row(t);
    }
  }
  return x;
}

Eigen::VectorXd targets_of(std::span<const FeatureSequence> feats) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(feats.size()));
  for (std::size_t i = 0; i < feats.size(); ++i) {
    y[static_cast<Eigen::Index>(i)] = feats[i].target;
  }
  return y;
}

Eigen::MatrixXd cell_forward(const Eigen::MatrixXd& x,
                             const Eigen::MatrixXd& h_prev, LayerParams& layer,
                             const ModelConfig& cfg, Mode mode,
                             CellTrace* trace, bool update_running) {
  const Eigen::Index batch = x.rows();
  Eigen::MatrixXd a_r = x * layer.w_reset.transpose() + h_prev * layer.u_reset.transpose();
  a_r.rowwise() += layer.b_reset.transpose();
  Eigen::MatrixXd a_z = x * layer.w_update.transpose() + h_prev * layer.u_update.transpose();
  a_z.rowwise() += layer.b_update.transpose();
  Eigen::MatrixXd r = sigmoid(a_r);
  Eigen::MatrixXd z = sigmoid(a_z);

  Eigen::MatrixXd gated = r.cwiseProduct(h_prev);
  Eigen::MatrixXd a_c = x * layer.w_cand.transpose() + gated * layer.u_cand.transpose();
  a_c.rowwise() += layer.b_cand.transpose();
  Eigen::MatrixXd cand = a_c.array().tanh().matrix();

  Eigen::MatrixXd state =
      ((1.0 - z.array()) * h_prev.array() + z.array() * cand.array()).matrix();

  Eigen::MatrixXd out;
  Eigen::MatrixXd xhat;
  Eigen::RowVectorXd istd;
  if (cfg.batchnorm) {
    if (mode == Mode::train) {
      Eigen::RowVectorXd mean = state.colwise().mean();
      Eigen::MatrixXd centered = state.rowwise() - mean;
      Eigen::RowVectorXd var = centered.array().square().colwise().mean().matrix();
      istd = (var.array() + cfg.epsilon).rsqrt().matrix();
      xhat = (centered.array().rowwise() * istd.array()).matrix();
      if (update_running) {
        const double m = cfg.bn_momentum;
        layer.bn_running_mean = (m * layer.bn_running_mean.array() +
                                 (1.0 - m) * mean.transpose().array())
                                    .matrix();
        layer.bn_running_var = (m * layer.bn_running_var.array() +
                                (1.0 - m) * var.transpose().array())
                                   .matrix();
      }
    } else {
      istd = (layer.bn_running_var.transpose().array() + cfg.epsilon).rsqrt().matrix();
      xhat = ((state.rowwise() - layer.bn_running_mean.transpose()).array().rowwise() *
              istd.array())
                 .matrix();
    }
    out = (xhat.array().rowwise() * layer.bn_gamma.transpose().array()).matrix();
    out.rowwise() += layer.bn_beta.transpose();
  } else {
    out = state;
  }

  if (trace != nullptr) {
    trace->input = x;
    trace->reset = std::move(r);
    trace->update = std::move(z);
    trace->cand = std::move(cand);
    trace->state_pre = std::move(state);
    if (cfg.batchnorm) {
      trace->xhat = std::move(xhat);
      trace->batch_istd = std::move(istd);
    }
  }
  (void)batch;
  return out;
}

ForwardResult forward(const TimeMajorBatch& x, ModelParams& params,
                      const ModelConfig& cfg, Mode mode, Rng* dropout_rng,
                      ForwardTrace* trace, bool update_running,
                      bool want_step_outputs) {
  cfg.validate();
  if (x.empty()) {
    throw Error(ErrorKind::internal, "forward: empty sequence");
  }
  const Eigen::Index batch = x[0].rows();
  const int steps = static_cast<int>(x.size());
  if (batch <= 0) {
    throw Error(ErrorKind::internal, "forward: empty batch");
  }
  for (const Eigen::MatrixXd& xt : x) {
    if (xt.rows() != batch || xt.cols() != cfg.input_dim) {
      throw Error(ErrorKind::internal, "forward: inconsistent input shapes");
    }
  }
  if (static_cast<int>(params.layers.size()) != cfg.num_layers) {
    throw Error(ErrorKind::internal, "forward: params/config layer mismatch");
  }

  const bool dropout_active = mode == Mode::train && cfg.dropout_rate > 0.0;
  if (dropout_active && dropout_rng == nullptr) {
    throw Error(ErrorKind::internal, "forward: dropout requires an rng in train mode");
  }

  if (trace != nullptr) {
    trace->layers.assign(static_cast<std::size_t>(cfg.num_layers), LayerTrace{});
    trace->mode = mode;
    trace->batch = static_cast<int>(batch);
    trace->steps = steps;
  }

  // One mask per layer, shared across timesteps.
  std::vector<Eigen::MatrixXd> masks;
  if (dropout_active) {
    masks.resize(static_cast<std::size_t>(cfg.num_layers));
    const double keep = 1.0 - cfg.dropout_rate;
    for (int l = 0; l < cfg.num_layers; ++l) {
      Eigen::MatrixXd& m = masks[static_cast<std::size_t>(l)];
      m.resize(batch, layer_input_dim(cfg, l));
      double* p = m.data();
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        p[i] = uniform_real(*dropout_rng) < keep ? 1.0 / keep : 0.0;
      }
    }
  }

  ForwardResult result;
  if (want_step_outputs) {
    result.step_outputs.resize(batch, steps);
  }

  std::vector<Eigen::MatrixXd> seq(x.begin(), x.end());
  for (int l = 0; l < cfg.num_layers; ++l) {
    LayerParams& layer = params.layers[static_cast<std::size_t>(l)];
    LayerTrace* ltrace = trace != nullptr ? &trace->layers[static_cast<std::size_t>(l)] : nullptr;
    if (ltrace != nullptr) {
      ltrace->steps.resize(static_cast<std::size_t>(steps));
      ltrace->hidden.resize(static_cast<std::size_t>(steps) + 1);
      ltrace->hidden[0] = Eigen::MatrixXd::Zero(batch, cfg.hidden_dim);
      if (dropout_active) {
        ltrace->dropout_mask = masks[static_cast<std::size_t>(l)];
      }
    }
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(batch, cfg.hidden_dim);
    for (int t = 0; t < steps; ++t) {
      Eigen::MatrixXd input = std::move(seq[static_cast<std::size_t>(t)]);
      if (dropout_active) {
        input = input.cwiseProduct(masks[static_cast<std::size_t>(l)]);
      }
      CellTrace* ctrace = ltrace != nullptr ? &ltrace->steps[static_cast<std::size_t>(t)] : nullptr;
      h = cell_forward(input, h, layer, cfg, mode, ctrace, update_running);
      if (ltrace != nullptr) {
        ltrace->hidden[static_cast<std::size_t>(t) + 1] = h;
      }
      seq[static_cast<std::size_t>(t)] = h;
    }
  }

  const Eigen::MatrixXd& top_last = seq.back();
  result.predictions = top_last * params.head.weight;
  result.predictions.array() += params.head.bias;
  if (want_step_outputs) {
    for (int t = 0; t < steps; ++t) {
      result.step_outputs.col(t) =
          seq[static_cast<std::size_t>(t)] * params.head.weight;
      result.step_outputs.col(t).array() += params.head.bias;
    }
  }
  return result;
}

Gradients backward(const ForwardTrace& trace, const ModelParams& params,
                   const ModelConfig& cfg, const Eigen::VectorXd& dpred) {
  if (static_cast<int>(trace.layers.size()) != cfg.num_layers || trace.steps <= 0) {
    throw Error(ErrorKind::internal, "backward: trace/config mismatch");
  }
  if (dpred.size() != trace.batch) {
    throw Error(ErrorKind::internal, "backward: dpred/batch mismatch");
  }
  const Eigen::Index batch = trace.batch;
  const int steps = trace.steps;
  Gradients grads = zero_gradients(cfg);

  const Eigen::MatrixXd& top_last =
      trace.layers.back().hidden[static_cast<std::size_t>(steps)];
  grads.head.weight = top_last.transpose() * dpred;
  grads.head.bias = dpred.sum();

  // Gradient flowing into each layer's per-step outputs, top layer first.
  std::vector<Eigen::MatrixXd> dout(static_cast<std::size_t>(steps),
                                    Eigen::MatrixXd::Zero(batch, cfg.hidden_dim));
  dout.back() = dpred * params.head.weight.transpose();

  for (int l = cfg.num_layers - 1; l >= 0; --l) {
    const LayerTrace& ltrace = trace.layers[static_cast<std::size_t>(l)];
    const LayerParams& layer = params.layers[static_cast<std::size_t>(l)];
    LayerParams& glayer = grads.layers[static_cast<std::size_t>(l)];
    const int in_dim = layer_input_dim(cfg, l);
    std::vector<Eigen::MatrixXd> dinput(static_cast<std::size_t>(steps));

    Eigen::MatrixXd carry = Eigen::MatrixXd::Zero(batch, cfg.hidden_dim);
    for (int t = steps - 1; t >= 0; --t) {
      const CellTrace& cell = ltrace.steps[static_cast<std::size_t>(t)];
      const Eigen::MatrixXd& h_prev = ltrace.hidden[static_cast<std::size_t>(t)];
      Eigen::MatrixXd dh = dout[static_cast<std::size_t>(t)] + carry;

      Eigen::MatrixXd ds;
      if (cfg.batchnorm) {
        glayer.bn_gamma.array() +=
            (dh.array() * cell.xhat.array()).colwise().sum().transpose();
        glayer.bn_beta.array() += dh.colwise().sum().transpose().array();
        Eigen::ArrayXXd dxhat =
            dh.array().rowwise() * layer.bn_gamma.transpose().array();
        if (trace.mode == Mode::train) {
          const double b = static_cast<double>(batch);
          Eigen::Array<double, 1, Eigen::Dynamic> sum_dxhat = dxhat.colwise().sum();
          Eigen::Array<double, 1, Eigen::Dynamic> sum_dxhat_xhat =
              (dxhat * cell.xhat.array()).colwise().sum();
          Eigen::ArrayXXd term = b * dxhat;
          term.rowwise() -= sum_dxhat;
          term -= cell.xhat.array().rowwise() * sum_dxhat_xhat;
          ds = (term.rowwise() * (cell.batch_istd.array() / b)).matrix();
        } else {
          ds = (dxhat.rowwise() * cell.batch_istd.array()).matrix();
        }
      } else {
        ds = std::move(dh);
      }

      const Eigen::MatrixXd& z = cell.update;
      const Eigen::MatrixXd& r = cell.reset;
      const Eigen::MatrixXd& c = cell.cand;
      Eigen::MatrixXd dz = ds.cwiseProduct(c - h_prev);
      Eigen::MatrixXd dc = ds.cwiseProduct(z);
      Eigen::MatrixXd dh_prev =
          (ds.array() * (1.0 - z.array())).matrix();

      Eigen::MatrixXd da_c = (dc.array() * (1.0 - c.array().square())).matrix();
      Eigen::MatrixXd gated = r.cwiseProduct(h_prev);
      glayer.w_cand += da_c.transpose() * cell.input;
      glayer.u_cand += da_c.transpose() * gated;
      glayer.b_cand += da_c.colwise().sum().transpose();
      Eigen::MatrixXd dgated = da_c * layer.u_cand;
      Eigen::MatrixXd dx = da_c * layer.w_cand;
      Eigen::MatrixXd dr = dgated.cwiseProduct(h_prev);
      dh_prev += dgated.cwiseProduct(r);

      Eigen::MatrixXd da_r =
          (dr.array() * r.array() * (1.0 - r.array())).matrix();
      glayer.w_reset += da_r.transpose() * cell.input;
      glayer.u_reset += da_r.transpose() * h_prev;
      glayer.b_reset += da_r.colwise().sum().transpose();
      dx += da_r * layer.w_reset;
      dh_prev += da_r * layer.u_reset;

      Eigen::MatrixXd da_z =
          (dz.array() * z.array() * (1.0 - z.array())).matrix();
      glayer.w_update += da_z.transpose() * cell.input;
      glayer.u_update += da_z.transpose() * h_prev;
      glayer.b_update += da_z.colwise().sum().transpose();
      dx += da_z * layer.w_update;
      dh_prev += da_z * layer.u_update;

      carry = std::move(dh_prev);
      dinput[static_cast<std::size_t>(t)] = std::move(dx);
    }

    if (l > 0) {
      const bool masked = ltrace.dropout_mask.size() > 0;
      for (int t = 0; t < steps; ++t) {
        dout[static_cast<std::size_t>(t)] =
            masked ? dinput[static_cast<std::size_t>(t)].cwiseProduct(ltrace.dropout_mask)
                   : std::move(dinput[static_cast<std::size_t>(t)]);
      }
    }
    (void)in_dim;
  }
  return grads;
}

namespace {

void write_bytes(std::ostream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  write_bytes(out, &v, sizeof(T));
}

void write_tensor(std::ostream& out, const Eigen::MatrixXd& m) {
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  write_bytes(out, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
}

void write_tensor(std::ostream& out, const Eigen::VectorXd& v) {
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(v.size()));
  write_pod<std::uint64_t>(out, 1);
  write_bytes(out, v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
}

void read_bytes(std::istream& in, void* p, std::size_t n, const std::string& path) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw_format("truncated checkpoint: " + path);
  }
}

template <typename T>
T read_pod(std::istream& in, const std::string& path) {
  T v;
  read_bytes(in, &v, sizeof(T), path);
  return v;
}

Eigen::MatrixXd read_matrix(std::istream& in, Eigen::Index rows,
                            Eigen::Index cols, const std::string& path) {
  const auto r = read_pod<std::uint64_t>(in, path);
  const auto c = read_pod<std::uint64_t>(in, path);
  if (r != static_cast<std::uint64_t>(rows) || c != static_cast<std::uint64_t>(cols)) {
    throw_format("checkpoint tensor shape mismatch: " + path);
  }
  Eigen::MatrixXd m(rows, cols);
  read_bytes(in, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()), path);
  return m;
}

Eigen::VectorXd read_vector(std::istream& in, Eigen::Index size,
                            const std::string& path) {
  return read_matrix(in, size, 1, path).col(0);
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  ckpt.config.validate();
  if (static_cast<int>(ckpt.params.layers.size()) != ckpt.config.num_layers) {
    throw Error(ErrorKind::internal, "save_checkpoint: params/config mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw_io("cannot open for writing: " + path);
  }
  write_bytes(out, kCkptMagic, sizeof(kCkptMagic));
  write_pod(out, kCkptVersion);
  write_pod(out, kByteOrderMark);
  write_pod<std::int32_t>(out, ckpt.config.input_dim);
  write_pod<std::int32_t>(out, ckpt.config.hidden_dim);
  write_pod<std::int32_t>(out, ckpt.config.num_layers);
  write_pod<double>(out, ckpt.config.dropout_rate);
  write_pod<std::uint8_t>(out, ckpt.config.batchnorm ? 1 : 0);
  write_pod<double>(out, ckpt.config.epsilon);
  write_pod<double>(out, ckpt.config.bn_momentum);
  write_pod<std::int32_t>(out, ckpt.history_length);
  write_pod<std::uint8_t>(out, ckpt.window == Window::last ? 0 : 1);
  for (const LayerParams& layer : ckpt.params.layers) {
    write_tensor(out, layer.w_reset);
    write_tensor(out, layer.u_reset);
    write_tensor(out, layer.b_reset);
    write_tensor(out, layer.w_update);
    write_tensor(out, layer.u_update);
    write_tensor(out, layer.b_update);
    write_tensor(out, layer.w_cand);
    write_tensor(out, layer.u_cand);
    write_tensor(out, layer.b_cand);
    write_tensor(out, layer.bn_gamma);
    write_tensor(out, layer.bn_beta);
    write_tensor(out, layer.bn_running_mean);
    write_tensor(out, layer.bn_running_var);
  }
  write_tensor(out, ckpt.params.head.weight);
  write_pod<double>(out, ckpt.params.head.bias);
  out.flush();
  if (!out) {
    throw_io("write failed: " + path);
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw_io("cannot open: " + path);
  }
  char magic[8];
  read_bytes(in, magic, sizeof(magic), path);
  if (std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0) {
    throw_format("not a checkpoint file: " + path);
  }
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != kCkptVersion) {
    throw_format("unsupported checkpoint version: " + path);
  }
  const auto bom = read_pod<std::uint32_t>(in, path);
  if (bom != kByteOrderMark) {
    throw_format("checkpoint byte order mismatch: " + path);
  }
  Checkpoint ckpt;
  ckpt.config.input_dim = read_pod<std::int32_t>(in, path);
  ckpt.config.hidden_dim = read_pod<std::int32_t>(in, path);
  ckpt.config.num_layers = read_pod<std::int32_t>(in, path);
  ckpt.config.dropout_rate = read_pod<double>(in, path);
  ckpt.config.batchnorm = read_pod<std::uint8_t>(in, path) != 0;
  ckpt.config.epsilon = read_pod<double>(in, path);
  ckpt.config.bn_momentum = read_pod<double>(in, path);
  ckpt.history_length = read_pod<std::int32_t>(in, path);
  const auto window_code = read_pod<std::uint8_t>(in, path);
  if (window_code > 1) {
    throw_format("invalid window code in checkpoint: " + path);
  }
  ckpt.window = window_code == 0 ? Window::last : Window::first;
  try {
    ckpt.config.validate();
  } catch (const Error&) {
    throw_format("invalid model config in checkpoint: " + path);
  }
  if (ckpt.history_length <= 0) {
    throw_format("invalid history length in checkpoint: " + path);
  }
  const int h = ckpt.config.hidden_dim;
  ckpt.params.layers.resize(static_cast<std::size_t>(ckpt.config.num_layers));
  for (int l = 0; l < ckpt.config.num_layers; ++l) {
    const int in_dim = layer_input_dim(ckpt.config, l);
    LayerParams& layer = ckpt.params.layers[static_cast<std::size_t>(l)];
    layer.w_reset = read_matrix(in, h, in_dim, path);
    layer.u_reset = read_matrix(in, h, h, path);
    layer.b_reset = read_vector(in, h, path);
    layer.w_update = read_matrix(in, h, in_dim, path);
    layer.u_update = read_matrix(in, h, h, path);
    layer.b_update = read_vector(in, h, path);
    layer.w_cand = read_matrix(in, h, in_dim, path);
    layer.u_cand = read_matrix(in, h, h, path);
    layer.b_cand = read_vector(in, h, path);
    layer.bn_gamma = read_vector(in, h, path);
    layer.bn_beta = read_vector(in, h, path);
    layer.bn_running_mean = read_vector(in, h, path);
    layer.bn_running_var = read_vector(in, h, path);
  }
  ckpt.params.head.weight = read_vector(in, h, path);
  ckpt.params.head.bias = read_pod<double>(in, path);
  in.peek();
  if (!in.eof()) {
    throw_format("trailing bytes in checkpoint: " + path);
  }
  return ckpt;
}

}  // namespace dlgreward
