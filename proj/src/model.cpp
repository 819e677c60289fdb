#include "ladg/model.hpp"

#include <cmath>

namespace ladg {

Mlp Mlp::init(const std::vector<int>& widths, Rng& rng) {
  if (widths.size() < 2) throw ConfigError("mlp: need at least input and output widths");
  Mlp net;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l], out = widths[l + 1];
    if (in < 1 || out < 1) throw ConfigError("mlp: widths must be positive");
    DenseLayer layer{Matrix(in, out), Matrix(1, out)};
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (std::size_t i = 0; i < layer.weight.size(); ++i) {
      layer.weight.data()[i] = rng.uniform(-bound, bound);
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

std::vector<Matrix*> Mlp::parameters() {
  std::vector<Matrix*> out;
  for (auto& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Matrix*> Mlp::parameters() const {
  std::vector<const Matrix*> out;
  for (const auto& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

MlpVars mlp_forward(ad::Tape& tape, const Mlp& net, ad::Var input) {
  using namespace ad;
  if (input.cols() != net.input_dim()) {
    throw ShapeError("mlp_forward: input width " + std::to_string(input.cols()) +
                     " does not match configured " + std::to_string(net.input_dim()));
  }
  MlpVars out;
  Var h = input;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Var w = tape.leaf(net.layers[l].weight);
    Var b = tape.leaf(net.layers[l].bias);
    out.params.push_back(w);
    out.params.push_back(b);
    h = add_row_broadcast(matmul(h, w), b);
    if (l + 1 < net.layers.size()) h = relu(h);
  }
  out.output = h;
  return out;
}

Matrix mlp_forward(const Mlp& net, const Matrix& input) {
  ad::Tape tape;
  return mlp_forward(tape, net, tape.leaf(input)).output.value();
}

LinearPredictor LinearPredictor::init(int inputs, int outputs, Rng& rng) {
  if (inputs < 1 || outputs < 1) throw ConfigError("predictor: dimensions must be positive");
  LinearPredictor p{Matrix(inputs, outputs), Matrix(1, outputs)};
  const double bound = 1.0 / std::sqrt(static_cast<double>(inputs));
  for (std::size_t i = 0; i < p.weight.size(); ++i) p.weight.data()[i] = rng.uniform(-bound, bound);
  return p;
}

std::vector<Matrix*> LinearPredictor::parameters() { return {&weight, &bias}; }

std::vector<const Matrix*> LinearPredictor::parameters() const { return {&weight, &bias}; }

PredictorVars predict(ad::Tape& tape, const LinearPredictor& w, ad::Var features) {
  using namespace ad;
  if (features.cols() != w.weight.rows()) {
    throw ShapeError("predict: feature width " + std::to_string(features.cols()) +
                     " does not match predictor input " + std::to_string(w.weight.rows()));
  }
  PredictorVars out;
  Var wv = tape.leaf(w.weight);
  Var bv = tape.leaf(w.bias);
  out.params = {wv, bv};
  out.output = add_row_broadcast(matmul(features, wv), bv);
  return out;
}

Matrix predict(const LinearPredictor& w, const Matrix& features) {
  ad::Tape tape;
  return predict(tape, w, tape.leaf(features)).output.value();
}

void sgd_step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads,
              const SgdConfig& config, SgdState* state) {
  if (params.size() != grads.size()) throw ShapeError("sgd_step: parameter/gradient count mismatch");
  if (state && state->velocity.empty()) {
    for (const Matrix* p : params) state->velocity.emplace_back(p->rows(), p->cols());
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    const Matrix& g = *grads[i];
    require_same_shape(p, g, "sgd_step");
    if (config.momentum != 0.0 && state) {
      Matrix& v = state->velocity[i];
      for (std::size_t k = 0; k < p.size(); ++k) {
        v.data()[k] = config.momentum * v.data()[k] + g.data()[k] + config.weight_decay * p.data()[k];
        p.data()[k] -= config.lr * v.data()[k];
      }
    } else {
      for (std::size_t k = 0; k < p.size(); ++k) {
        p.data()[k] -= config.lr * (g.data()[k] + config.weight_decay * p.data()[k]);
      }
    }
  }
}

void sgd_step(const std::vector<Matrix*>& params, const std::vector<ad::Var>& grad_vars,
              const SgdConfig& config, SgdState* state) {
  std::vector<const Matrix*> grads;
  grads.reserve(grad_vars.size());
  for (const ad::Var& v : grad_vars) grads.push_back(&v.grad());
  sgd_step(params, grads, config, state);
}

}  // namespace ladg
