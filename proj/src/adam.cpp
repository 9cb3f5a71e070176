#include "lstn/adam.hpp"

#include <cmath>

namespace lstn {

template <typename T>
void adam_step(TensorT<T>& param, AdamStateT<T>& state, const AdamConfig& config) {
  if (!param.requires_grad())
    throw UsageError("adam_step: parameter does not track gradients");
  if (config.lr < 0 || config.beta1 < 0 || config.beta1 >= 1 || config.beta2 < 0 ||
      config.beta2 >= 1 || config.eps <= 0)
    throw ConfigError("adam_step: hyperparameters out of range");
  if (state.m.size() == 0) state.m = TensorT<T>::zeros(param.shape());
  if (state.v.size() == 0) state.v = TensorT<T>::zeros(param.shape());
  if (!state.m.same_shape(param) || !state.v.same_shape(param))
    throw DimensionError("adam_step: moment shape " + TensorT<T>::shape_string(state.m.shape()) +
                         " does not match parameter " + TensorT<T>::shape_string(param.shape()));

  state.step += 1;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  auto p = param.values();
  auto g = param.grad();
  auto m = state.m.values();
  auto v = state.v.values();
  for (size_t i = 0; i < p.size(); ++i) {
    const double gi = static_cast<double>(g[i]);
    const double mi = config.beta1 * static_cast<double>(m[i]) + (1.0 - config.beta1) * gi;
    const double vi = config.beta2 * static_cast<double>(v[i]) + (1.0 - config.beta2) * gi * gi;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double mhat = mi / c1;
    const double vhat = vi / c2;
    p[i] = static_cast<T>(static_cast<double>(p[i]) - config.lr * mhat / (std::sqrt(vhat) + config.eps));
  }
}

template void adam_step<float>(TensorT<float>&, AdamStateT<float>&, const AdamConfig&);
template void adam_step<double>(TensorT<double>&, AdamStateT<double>&, const AdamConfig&);

}  // namespace lstn
