#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "peps/errors.hpp"
#include "peps/tensor.hpp"

namespace peps {

/// Per-parameter Adam moments. step_count advances by one per update.
struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  long step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  explicit AdamState(std::size_t n, double b1 = 0.9, double b2 = 0.999,
                     double eps = 1e-8)
      : first_moment(n, 0.0),
        second_moment(n, 0.0),
        beta1(b1),
        beta2(b2),
        epsilon(eps) {}
};

/// Bias-corrected Adam update of one tensor from its accumulated gradient.
inline void adam_step(ParamTensor& param, AdamState& state, double lr) {
  if (state.first_moment.size() != param.size())
    throw config_error("adam_step: state/parameter shape mismatch");
  state.step_count += 1;
  const double b1 = state.beta1, b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
  double* m = state.first_moment.data();
  double* v = state.second_moment.data();
  double* w = param.value.data();
  const double* g = param.grad.data();
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    w[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
  }
}

/// One optimizer group: tensors sharing a learning rate.
struct AdamGroup {
  std::vector<ParamTensor*> params;
  std::vector<AdamState> states;
  double lr = 0.01;

  void init(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    states.clear();
    states.reserve(params.size());
    for (ParamTensor* p : params)
      states.emplace_back(p->size(), beta1, beta2, eps);
  }

  void step(double lr_now) {
    for (std::size_t i = 0; i < params.size(); ++i)
      adam_step(*params[i], states[i], lr_now);
  }

  void zero_grad() {
    for (ParamTensor* p : params) p->zero_grad();
  }
};

/// Half-cosine decay from base_lr at step 0 to min_lr at total_steps.
inline double cosine_lr(long step, long total_steps, double base_lr,
                        double min_lr) {
  if (total_steps < 1) throw config_error("cosine_lr: total_steps must be >= 1");
  if (step < 0 || step > total_steps)
    throw std::out_of_range("cosine_lr: step " + std::to_string(step) +
                            " outside [0, " + std::to_string(total_steps) + "]");
  const double phase = std::numbers::pi * static_cast<double>(step) /
                       static_cast<double>(total_steps);
  return min_lr + 0.5 * (base_lr - min_lr) * (1.0 + std::cos(phase));
}

}  // namespace peps
