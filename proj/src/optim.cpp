#include "dcrnn/optim.hpp"

#include <cmath>
#include <random>

namespace dcrnn {

void adam_step(const std::vector<ParamTensor*>& params, const AdamConfig& cfg) {
  for (ParamTensor* p : params) {
    if (!p->grad.all_finite()) {
      throw Error("adam_step: non-finite gradient in parameter '" + p->name + "'");
    }
    p->step_count += 1;
    const double t = static_cast<double>(p->step_count);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    double* value = p->value.data();
    double* m = p->m.data();
    double* v = p->v.data();
    const double* g = p->grad.data();
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      value[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

double lr_schedule(std::uint64_t epoch, double base_lr, std::uint64_t start_epoch,
                   std::uint64_t period, double factor) {
  if (period < 1) throw Error("lr_schedule: period must be >= 1");
  if (!(factor > 0.0 && factor <= 1.0)) throw Error("lr_schedule: factor must be in (0, 1]");
  if (epoch < start_epoch) return base_lr;
  const std::uint64_t drops = (epoch - start_epoch) / period + 1;
  return base_lr * std::pow(factor, static_cast<double>(drops));
}

ParamTensor init_params(const std::string& name, std::size_t rows, std::size_t cols,
                        std::uint64_t seed, InitScheme scheme) {
  DenseMatrix value(rows, cols);
  if (scheme == InitScheme::fan_uniform) {
    const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-s, s);
    for (std::size_t i = 0; i < value.size(); ++i) value.data()[i] = uni(rng);
  }
  return ParamTensor(name, std::move(value));
}

void zero_grads(const std::vector<ParamTensor*>& params) {
  for (ParamTensor* p : params) p->zero_grad();
}

double global_grad_norm(const std::vector<ParamTensor*>& params) {
  double sq = 0.0;
  for (const ParamTensor* p : params) {
    for (std::size_t i = 0; i < p->grad.size(); ++i) {
      const double g = p->grad.data()[i];
      sq += g * g;
    }
  }
  return std::sqrt(sq);
}

void clip_grad_norm(const std::vector<ParamTensor*>& params, double max_norm) {
  if (!(max_norm > 0.0)) return;
  const double norm = global_grad_norm(params);
  if (norm <= max_norm) return;
  const double scale = max_norm / norm;
  for (ParamTensor* p : params) {
    for (std::size_t i = 0; i < p->grad.size(); ++i) p->grad.data()[i] *= scale;
  }
}

}  // namespace dcrnn
