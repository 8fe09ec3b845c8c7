#pragma once

// Fully connected regressor with tanh hidden layers and a linear output
// layer, trained by full-batch Adam on the mean squared error in
// standardized units. Plain momentum descent stalls in the flat directions of
// correlated tanh units; per-parameter step scaling does not.

#include <cmath>
#include <random>
#include <span>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "drillforce/handforce/common.hpp"

namespace drillforce::handforce {

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

struct MLPHandModel {
  Standardizer input;
  Standardizer output;
  std::vector<DenseLayer> layers;  // tanh on all but the last

  Wrench predict(const Wrench& delta) const {
    Eigen::VectorXd a = input.apply(delta);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      Eigen::VectorXd z = layers[l].weight * a + layers[l].bias;
      a = (l + 1 < layers.size()) ? Eigen::VectorXd(z.array().tanh()) : z;
    }
    return output.invert(a);
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  void validate() const {
    if (layers.size() < 2) throw DataError("mlp model: needs at least one hidden layer");
    Eigen::Index width = 6;
    for (const auto& l : layers) {
      if (l.weight.cols() != width || l.bias.size() != l.weight.rows()) {
        throw DataError("mlp model: incompatible layer dimensions");
      }
      if (!l.weight.allFinite() || !l.bias.allFinite()) throw DataError("mlp model: non-finite weight");
      width = l.weight.rows();
    }
    if (width != 6) throw DataError("mlp model: output layer must have 6 units");
  }
};

/// Columns are samples.
struct Batch {
  Eigen::MatrixXd x;  // 6 x N, standardized inputs
  Eigen::MatrixXd y;  // 6 x N, standardized targets
};

inline Batch make_batch(std::span<const HandPair> pairs, const Standardizer& in, const Standardizer& out) {
  Batch b;
  b.x.resize(6, static_cast<Eigen::Index>(pairs.size()));
  b.y.resize(6, static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    b.x.col(static_cast<Eigen::Index>(i)) = in.apply(pairs[i].delta);
    b.y.col(static_cast<Eigen::Index>(i)) = out.apply(pairs[i].target);
  }
  return b;
}

/// Xavier-uniform weights, zero biases.
inline std::vector<DenseLayer> init_layers(const std::vector<int>& hidden, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  int in = 6;
  std::vector<int> widths = hidden;
  widths.push_back(6);
  for (int out : widths) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer l;
    l.weight.resize(out, in);
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = dist(rng);
    l.bias = Eigen::VectorXd::Zero(out);
    layers.push_back(std::move(l));
    in = out;
  }
  return layers;
}

namespace detail {
// tanh(x) = 1 - 2 / (exp(2x) + 1), routed through Eigen's vectorized exp;
// saturates correctly to +-1 and is several times faster than std::tanh.
inline void tanh_inplace(Eigen::MatrixXd& z) {
  z.array() = 1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0);
}
}  // namespace detail

/// Buffers reused across epochs so full-batch training does not reallocate.
struct MLPWorkspace {
  std::vector<Eigen::MatrixXd> acts;
  Eigen::MatrixXd delta;
  Eigen::MatrixXd back;
};

/// Mean squared error over all outputs and samples, and its gradient with
/// respect to every weight and bias (same shapes as `layers`).
inline double mlp_loss_gradient(const std::vector<DenseLayer>& layers, const Batch& batch,
                                std::vector<DenseLayer>* grad, MLPWorkspace& ws) {
  const Eigen::Index n = batch.x.cols();
  ws.acts.resize(layers.size());
  const Eigen::MatrixXd* input = &batch.x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::MatrixXd& z = ws.acts[l];
    z.noalias() = layers[l].weight * *input;
    z.colwise() += layers[l].bias;
    if (l + 1 < layers.size()) detail::tanh_inplace(z);
    input = &z;
  }
  Eigen::MatrixXd& out = ws.acts.back();
  out -= batch.y;  // now the error
  const double denom = static_cast<double>(n) * static_cast<double>(out.rows());
  const double loss = out.squaredNorm() / denom;
  if (grad == nullptr) return loss;

  grad->resize(layers.size());
  ws.delta = (2.0 / denom) * out;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Eigen::MatrixXd& a = l == 0 ? batch.x : ws.acts[l - 1];
    (*grad)[l].weight.noalias() = ws.delta * a.transpose();
    (*grad)[l].bias = ws.delta.rowwise().sum();
    if (l > 0) {
      ws.back.noalias() = layers[l].weight.transpose() * ws.delta;
      ws.delta.array() = ws.back.array() * (1.0 - a.array().square());
    }
  }
  return loss;
}

inline double mlp_loss_gradient(const std::vector<DenseLayer>& layers, const Batch& batch,
                                std::vector<DenseLayer>* grad) {
  MLPWorkspace ws;
  return mlp_loss_gradient(layers, batch, grad, ws);
}

struct MLPTrainResult {
  MLPHandModel model;
  double final_loss = 0.0;  // standardized units
};

namespace detail {
// Standardized loss of the all-zero predictor is ~1; anything this far above
// it means the iteration has blown up even if it is still finite.
inline constexpr double kDivergedLoss = 1e6;

inline void check_loss(double loss, int epoch, double lr) {
  if (std::isfinite(loss) && loss < kDivergedLoss) return;
  std::ostringstream os;
  os << "MLP training diverged at epoch " << epoch << " (loss " << loss << ", learning rate " << lr << ")";
  throw NumericalError(os.str());
}
}  // namespace detail

/// Trains on every pair given. Divergence (exploding or non-finite loss)
/// raises NumericalError. Target channels that are constant in the training
/// set are pinned: their output row stays zero, so prediction returns the
/// training constant exactly.
inline MLPTrainResult train_mlp(std::span<const HandPair> pairs, const TrainConfig& config) {
  config.validate();
  if (pairs.size() < 2) throw DataError("train_mlp: need at least 2 pairs");
  MLPHandModel model;
  model.input = fit_input_standardizer(pairs);
  model.output = fit_output_standardizer(pairs);
  model.layers = init_layers(config.mlp.hidden, config.seed);
  const Batch batch = make_batch(pairs, model.input, model.output);
  std::vector<Eigen::Index> pinned;
  for (Eigen::Index c = 0; c < 6; ++c)
    if (batch.y.row(c).isZero(0.0)) pinned.push_back(c);
  auto unpin = [&](DenseLayer& out) {
    for (Eigen::Index c : pinned) {
      out.weight.row(c).setZero();
      out.bias(c) = 0.0;
    }
  };
  unpin(model.layers.back());

  // first and second moment estimates
  std::vector<DenseLayer> m1(model.layers.size()), m2(model.layers.size());
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    m1[l].weight = Eigen::MatrixXd::Zero(model.layers[l].weight.rows(), model.layers[l].weight.cols());
    m1[l].bias = Eigen::VectorXd::Zero(model.layers[l].bias.size());
    m2[l] = m1[l];
  }
  std::vector<DenseLayer> grad;
  MLPWorkspace ws;
  const double lr = config.mlp.learning_rate;
  const double b1 = config.mlp.momentum;
  constexpr double b2 = 0.999, eps = 1e-8;
  double b1t = 1.0, b2t = 1.0;
  double loss = 0.0;
  auto step = [&](auto& param, auto& g, auto& m, auto& v, double s1, double s2) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseAbs2();
    param.array() -= lr * (m.array() * s1) / ((v.array() * s2).sqrt() + eps);
  };
  for (int epoch = 1; epoch <= config.mlp.epochs; ++epoch) {
    loss = mlp_loss_gradient(model.layers, batch, &grad, ws);
    detail::check_loss(loss, epoch, lr);
    unpin(grad.back());
    b1t *= b1;
    b2t *= b2;
    const double s1 = 1.0 / (1.0 - b1t), s2 = 1.0 / (1.0 - b2t);
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      step(model.layers[l].weight, grad[l].weight, m1[l].weight, m2[l].weight, s1, s2);
      step(model.layers[l].bias, grad[l].bias, m1[l].bias, m2[l].bias, s1, s2);
    }
  }
  loss = mlp_loss_gradient(model.layers, batch, nullptr, ws);
  detail::check_loss(loss, config.mlp.epochs, lr);
  return {std::move(model), loss};
}

}  // namespace drillforce::handforce
