#include "cnlcu/mlp.hpp"

#include "cnlcu/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cnlcu {

namespace {

struct Gradients {
  Matrix w1, w2;
  Vector b1, b2;
};

void check_batch(const MlpState& net, const Matrix& x, std::span<const int> labels) {
  if (static_cast<std::size_t>(x.cols()) != net.input_dim()) {
    throw std::invalid_argument("feature dimension does not match the network input");
  }
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw std::invalid_argument("batch has mismatched feature and label counts");
  }
  for (int y : labels) {
    if (y < 0 || y >= net.classes()) throw std::invalid_argument("label out of range");
  }
}

Matrix hidden_pre(const MlpState& net, const Matrix& x) {
  Matrix z = x * net.w1.transpose();
  z.rowwise() += net.b1.transpose();
  return z;
}

Matrix leaky(const Matrix& z) {
  return z.unaryExpr([](double v) { return v > 0.0 ? v : kLeakySlope * v; });
}

Gradients gradients(const MlpState& net, const Matrix& x, std::span<const int> labels) {
  const Matrix z1 = hidden_pre(net, x);
  const Matrix a1 = leaky(z1);
  Matrix out = a1 * net.w2.transpose();
  out.rowwise() += net.b2.transpose();

  // d(mean loss)/d(logits) = (softmax - onehot) / batch
  const double inv_b = 1.0 / static_cast<double>(x.rows());
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    const double peak = row.maxCoeff();
    row = (row.array() - peak).exp();
    row /= row.sum();
    row(labels[static_cast<std::size_t>(i)]) -= 1.0;
    row *= inv_b;
  }

  Gradients g;
  g.w2 = out.transpose() * a1;
  g.b2 = out.colwise().sum().transpose();
  Matrix da = out * net.w2;
  da.array() *= z1.unaryExpr([](double v) { return v > 0.0 ? 1.0 : kLeakySlope; }).array();
  g.w1 = da.transpose() * x;
  g.b1 = da.colwise().sum().transpose();
  return g;
}

template <typename Param, typename Grad>
void adam_step(Param& p, Param& m, Param& v, const Grad& g, const OptimizerConfig& opt,
               double bias1, double bias2) {
  m = opt.beta1 * m + (1.0 - opt.beta1) * g;
  v = opt.beta2 * v + (1.0 - opt.beta2) * g.cwiseProduct(g);
  const double step = opt.learning_rate / bias1;
  p.array() -= step * m.array() / ((v.array() / bias2).sqrt() + opt.epsilon);
}

} // namespace

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  }
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
}

std::size_t MlpState::parameter_count() const {
  return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size());
}

MlpState init_mlp(std::size_t d, std::size_t h, int k, std::uint64_t seed) {
  if (d == 0 || h == 0 || k < 2) throw std::invalid_argument("init_mlp: bad architecture");
  Rng rng(seed);
  const auto di = static_cast<Eigen::Index>(d);
  const auto hi = static_cast<Eigen::Index>(h);
  const auto ki = static_cast<Eigen::Index>(k);
  auto glorot = [&rng](Eigen::Index rows, Eigen::Index cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> u(-limit, limit);
    Matrix w(rows, cols);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
    return w;
  };
  MlpState net;
  net.w1 = glorot(hi, di);
  net.b1 = Vector::Zero(hi);
  net.w2 = glorot(ki, hi);
  net.b2 = Vector::Zero(ki);
  net.m_w1 = net.v_w1 = Matrix::Zero(hi, di);
  net.m_w2 = net.v_w2 = Matrix::Zero(ki, hi);
  net.m_b1 = net.v_b1 = Vector::Zero(hi);
  net.m_b2 = net.v_b2 = Vector::Zero(ki);
  return net;
}

Matrix logits(const MlpState& net, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != net.input_dim()) {
    throw std::invalid_argument("feature dimension does not match the network input");
  }
  Matrix out = leaky(hidden_pre(net, x)) * net.w2.transpose();
  out.rowwise() += net.b2.transpose();
  return out;
}

std::vector<double> cross_entropy(const Matrix& z, std::span<const int> labels) {
  std::vector<double> loss(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const auto row = z.row(i);
    const double peak = row.maxCoeff();
    const double log_sum = std::log((row.array() - peak).exp().sum());
    // Both parts are non-negative, so the sum is too.
    loss[static_cast<std::size_t>(i)] = (peak - row(labels[static_cast<std::size_t>(i)])) + log_sum;
  }
  return loss;
}

std::vector<double> forward_losses(const MlpState& net, const Matrix& x,
                                   std::span<const int> labels) {
  check_batch(net, x, labels);
  return cross_entropy(logits(net, x), labels);
}

std::vector<int> predict(const MlpState& net, const Matrix& x) {
  const Matrix z = logits(net, x);
  std::vector<int> out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < z.cols(); ++c) {
      if (z(i, c) > z(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

std::vector<double> flatten_parameters(const MlpState& net) {
  std::vector<double> flat;
  flat.reserve(net.parameter_count());
  flat.insert(flat.end(), net.w1.data(), net.w1.data() + net.w1.size());
  flat.insert(flat.end(), net.b1.data(), net.b1.data() + net.b1.size());
  flat.insert(flat.end(), net.w2.data(), net.w2.data() + net.w2.size());
  flat.insert(flat.end(), net.b2.data(), net.b2.data() + net.b2.size());
  return flat;
}

void assign_parameters(MlpState& net, std::span<const double> flat) {
  if (flat.size() != net.parameter_count()) {
    throw std::invalid_argument("assign_parameters: wrong parameter count");
  }
  auto it = flat.begin();
  std::copy_n(it, net.w1.size(), net.w1.data());
  it += net.w1.size();
  std::copy_n(it, net.b1.size(), net.b1.data());
  it += net.b1.size();
  std::copy_n(it, net.w2.size(), net.w2.data());
  it += net.w2.size();
  std::copy_n(it, net.b2.size(), net.b2.data());
}

std::vector<double> loss_gradient(const MlpState& net, const Matrix& x,
                                  std::span<const int> labels) {
  check_batch(net, x, labels);
  if (x.rows() == 0) throw std::invalid_argument("loss_gradient: empty batch");
  const auto g = gradients(net, x, labels);
  std::vector<double> flat;
  flat.reserve(net.parameter_count());
  flat.insert(flat.end(), g.w1.data(), g.w1.data() + g.w1.size());
  flat.insert(flat.end(), g.b1.data(), g.b1.data() + g.b1.size());
  flat.insert(flat.end(), g.w2.data(), g.w2.data() + g.w2.size());
  flat.insert(flat.end(), g.b2.data(), g.b2.data() + g.b2.size());
  return flat;
}

void backward_update(MlpState& net, const Matrix& x, std::span<const int> labels,
                     const OptimizerConfig& opt) {
  check_batch(net, x, labels);
  if (x.rows() == 0) throw std::invalid_argument("backward_update: empty batch");
  const auto g = gradients(net, x, labels);
  if (!g.w1.allFinite() || !g.w2.allFinite() || !g.b1.allFinite() || !g.b2.allFinite()) {
    throw std::runtime_error("backward_update: NaN or infinite gradient");
  }
  ++net.step;
  const double bias1 = 1.0 - std::pow(opt.beta1, static_cast<double>(net.step));
  const double bias2 = 1.0 - std::pow(opt.beta2, static_cast<double>(net.step));
  adam_step(net.w1, net.m_w1, net.v_w1, g.w1, opt, bias1, bias2);
  adam_step(net.b1, net.m_b1, net.v_b1, g.b1, opt, bias1, bias2);
  adam_step(net.w2, net.m_w2, net.v_w2, g.w2, opt, bias1, bias2);
  adam_step(net.b2, net.m_b2, net.v_b2, g.b2, opt, bias1, bias2);
}

} // namespace cnlcu
