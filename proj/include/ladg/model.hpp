#pragma once

#include <vector>

#include "ladg/autodiff.hpp"
#include "ladg/matrix.hpp"
#include "ladg/rng.hpp"

namespace ladg {

struct DenseLayer {
  Matrix weight;  // in x out
  Matrix bias;    // 1 x out
};

// Plain MLP: ReLU on hidden layers, linear output. Weights drawn uniformly
// in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
struct Mlp {
  std::vector<DenseLayer> layers;

  static Mlp init(const std::vector<int>& widths, Rng& rng);
  int input_dim() const { return layers.front().weight.rows(); }
  int output_dim() const { return layers.back().weight.cols(); }
  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;
};

// Parameter leaves and output of one forward pass on a tape. The order of
// `params` matches Mlp::parameters().
struct MlpVars {
  std::vector<ad::Var> params;
  ad::Var output;
};

MlpVars mlp_forward(ad::Tape& tape, const Mlp& net, ad::Var input);
Matrix mlp_forward(const Mlp& net, const Matrix& input);

// The featurizer and the discriminator projection share the MLP shape; task
// prediction is strictly affine.
using Featurizer = Mlp;
using Discriminator = Mlp;

struct LinearPredictor {
  Matrix weight;  // d x outputs
  Matrix bias;    // 1 x outputs

  static LinearPredictor init(int inputs, int outputs, Rng& rng);
  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;
};

struct PredictorVars {
  std::vector<ad::Var> params;
  ad::Var output;
};

PredictorVars predict(ad::Tape& tape, const LinearPredictor& w, ad::Var features);
Matrix predict(const LinearPredictor& w, const Matrix& features);

// Role-named wrappers.
inline MlpVars featurize(ad::Tape& tape, const Featurizer& f, ad::Var inputs) { return mlp_forward(tape, f, inputs); }
inline Matrix featurize(const Featurizer& f, const Matrix& inputs) { return mlp_forward(f, inputs); }
inline MlpVars project(ad::Tape& tape, const Discriminator& eta, ad::Var features) { return mlp_forward(tape, eta, features); }
inline Matrix project(const Discriminator& eta, const Matrix& features) { return mlp_forward(eta, features); }

// SGD with optional momentum:  v <- momentum v + (g + wd p);  p <- p - lr v.
struct SgdConfig {
  double lr = 0.01;
  double weight_decay = 0.0;
  double momentum = 0.0;
};

struct SgdState {
  std::vector<Matrix> velocity;  // sized on first use
};

void sgd_step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads,
              const SgdConfig& config, SgdState* state = nullptr);

// Convenience: apply gradients read from tape vars to a parameter list.
void sgd_step(const std::vector<Matrix*>& params, const std::vector<ad::Var>& grad_vars,
              const SgdConfig& config, SgdState* state = nullptr);

}  // namespace ladg
