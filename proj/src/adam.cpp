#include "dcs/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace dcs {

AdamState make_adam_state(const std::vector<Tensor>& params, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  s.m.reserve(params.size());
  s.v.reserve(params.size());
  for (const auto& p : params) {
    s.m.emplace_back(p.numel(), 0.0);
    s.v.emplace_back(p.numel(), 0.0);
  }
  return s;
}

void adam_step(std::vector<Tensor>& params, AdamState& state) {
  if (state.m.size() != params.size())
    throw std::invalid_argument("adam_step: state tracks " + std::to_string(state.m.size()) +
                                " tensors, got " + std::to_string(params.size()));
  state.step += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (size_t t = 0; t < params.size(); ++t) {
    Tensor& p = params[t];
    if (state.m[t].size() != p.values().size())
      throw std::invalid_argument("adam_step: moment shape mismatch at tensor " + std::to_string(t));
    const bool has_grad = p.has_grad();
    for (size_t i = 0; i < p.values().size(); ++i) {
      const double g = has_grad ? p.grad()[i] : 0.0;
      double& m = state.m[t][i];
      double& v = state.v[t][i];
      m = state.beta1 * m + (1.0 - state.beta1) * g;
      v = state.beta2 * v + (1.0 - state.beta2) * g * g;
      const double mhat = m / c1;
      const double vhat = v / c2;
      p.values()[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

}  // namespace dcs
