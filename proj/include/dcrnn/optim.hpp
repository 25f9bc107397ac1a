#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcrnn/autodiff.hpp"

namespace dcrnn {

struct AdamConfig {
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Standard Adam update with bias correction. Increments each parameter's
/// step_count; gradients are left untouched (callers zero them).
/// Throws, naming the parameter, on a non-finite gradient entry.
void adam_step(const std::vector<ParamTensor*>& params, const AdamConfig& cfg);

/// Step-decay schedule: base_lr before start_epoch, then multiplied by
/// factor^(floor((epoch - start_epoch) / period) + 1).
double lr_schedule(std::uint64_t epoch, double base_lr, std::uint64_t start_epoch,
                   std::uint64_t period, double factor);

enum class InitScheme { fan_uniform, zeros };

/// fan_uniform draws from U[-s, s] with s = sqrt(6 / (rows + cols));
/// zeros is for biases. Deterministic per seed.
ParamTensor init_params(const std::string& name, std::size_t rows, std::size_t cols,
                        std::uint64_t seed, InitScheme scheme = InitScheme::fan_uniform);

void zero_grads(const std::vector<ParamTensor*>& params);

double global_grad_norm(const std::vector<ParamTensor*>& params);
/// Scales all gradients down so their global L2 norm is at most max_norm.
void clip_grad_norm(const std::vector<ParamTensor*>& params, double max_norm);

}  // namespace dcrnn
