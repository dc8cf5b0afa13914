#pragma once

// d -> h -> k perceptron with a leaky-rectifier hidden layer, softmax
// cross-entropy and Adam. Small enough to train two copies side by side on
// a single core.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace cnlcu {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr double kLeakySlope = 0.01;

struct OptimizerConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 32;
  // Linear decay to zero over epochs (decay_start, T_max]; 0 means
  // 0.4 * T_max.
  std::size_t decay_start = 0;

  void validate() const;
};

struct MlpState {
  Matrix w1; // h x d
  Vector b1; // h
  Matrix w2; // k x h
  Vector b2; // k

  // Adam moments, same shapes as the parameters.
  Matrix m_w1, v_w1, m_w2, v_w2;
  Vector m_b1, v_b1, m_b2, v_b2;
  std::uint64_t step = 0;

  std::size_t input_dim() const { return static_cast<std::size_t>(w1.cols()); }
  std::size_t hidden_dim() const { return static_cast<std::size_t>(w1.rows()); }
  int classes() const { return static_cast<int>(w2.rows()); }
  std::size_t parameter_count() const;
};

/// Glorot-uniform weights, zero biases, zero moments.
MlpState init_mlp(std::size_t d, std::size_t h, int k, std::uint64_t seed);

Matrix logits(const MlpState& net, const Matrix& x);

/// Per-row softmax cross-entropy; every entry is >= 0.
std::vector<double> cross_entropy(const Matrix& logits, std::span<const int> labels);

/// Per-example losses of `net` on the batch. Throws std::invalid_argument on
/// a feature-dimension or label-count mismatch.
std::vector<double> forward_losses(const MlpState& net, const Matrix& x,
                                   std::span<const int> labels);

/// Argmax of the logits, ties to the lowest class.
std::vector<int> predict(const MlpState& net, const Matrix& x);

/// Parameters in a fixed order: w1, b1, w2, b2 (row-major).
std::vector<double> flatten_parameters(const MlpState& net);
void assign_parameters(MlpState& net, std::span<const double> flat);

/// Gradient of the batch-mean loss, flattened like flatten_parameters.
std::vector<double> loss_gradient(const MlpState& net, const Matrix& x,
                                  std::span<const int> labels);

/// One Adam step on the batch-mean loss at opt.learning_rate. Throws
/// std::runtime_error if the gradient is not finite.
void backward_update(MlpState& net, const Matrix& x, std::span<const int> labels,
                     const OptimizerConfig& opt);

} // namespace cnlcu
