#include "lstn/regressor.hpp"

#include <cmath>

#include "lstn/rng.hpp"

namespace lstn {

void RegressorConfig::validate() const {
  if (channels.empty()) throw ConfigError("regressor: empty channel list");
  for (int c : channels)
    if (c <= 0) throw ConfigError("regressor: non-positive channel width " + std::to_string(c));
  if (channels.back() != 1)
    throw ConfigError("regressor: final layer must emit 1 channel, got " + std::to_string(channels.back()));
  if (downsample != 1 && downsample != 2 && downsample != 4)
    throw ConfigError("regressor: downsample must be 1, 2 or 4, got " + std::to_string(downsample));
  if (kernel < 1 || kernel % 2 == 0)
    throw ConfigError("regressor: kernel must be odd and positive, got " + std::to_string(kernel));
  const int strided = downsample == 4 ? 2 : (downsample == 2 ? 1 : 0);
  if (layers() < strided + 1)
    throw ConfigError("regressor: " + std::to_string(layers()) + " layers cannot realize downsample " +
                      std::to_string(downsample));
}

int RegressorConfig::stride_of_layer(int i) const {
  // Reduction happens right after the first layer: layer 1 (and layer 2 for
  // a factor of 4) run with stride 2.
  if (downsample >= 2 && i == 1) return 2;
  if (downsample == 4 && i == 2) return 2;
  return 1;
}

template <typename T>
void ModelParamsT<T>::for_each_parameter(
    const std::function<void(const std::string&, TensorT<T>&, bool, int)>& fn) {
  for (size_t i = 0; i < reg_conv.size(); ++i) {
    const std::string base = "reg.conv" + std::to_string(i);
    fn(base + ".weight", reg_conv[i].weight, true, static_cast<int>(i));
    fn(base + ".bias", reg_conv[i].bias, true, static_cast<int>(i));
    if (config.batch_norm && i + 1 < reg_conv.size()) {
      const std::string bn = "reg.bn" + std::to_string(i);
      fn(bn + ".gamma", reg_bn[i].gamma, true, static_cast<int>(i));
      fn(bn + ".beta", reg_bn[i].beta, true, static_cast<int>(i));
      fn(bn + ".running_mean", reg_bn[i].running_mean, false, static_cast<int>(i));
      fn(bn + ".running_var", reg_bn[i].running_var, false, static_cast<int>(i));
    }
  }
  fn("loc.conv0.weight", loc_conv0.weight, true, -1);
  fn("loc.conv0.bias", loc_conv0.bias, true, -1);
  fn("loc.conv1.weight", loc_conv1.weight, true, -1);
  fn("loc.conv1.bias", loc_conv1.bias, true, -1);
  fn("loc.fc.weight", loc_fc_weight, true, -1);
  fn("loc.fc.bias", loc_fc_bias, true, -1);
}

template <typename T>
template <typename U>
ModelParamsT<U> ModelParamsT<T>::cast() {
  ModelParamsT<U> m;
  m.config = config;
  m.reg_conv.resize(reg_conv.size());
  m.reg_bn.resize(reg_bn.size());
  for (size_t i = 0; i < reg_conv.size(); ++i) {
    m.reg_conv[i].weight = reg_conv[i].weight.template cast<U>();
    m.reg_conv[i].bias = reg_conv[i].bias.template cast<U>();
  }
  for (size_t i = 0; i < reg_bn.size(); ++i) {
    m.reg_bn[i].gamma = reg_bn[i].gamma.template cast<U>();
    m.reg_bn[i].beta = reg_bn[i].beta.template cast<U>();
    m.reg_bn[i].running_mean = reg_bn[i].running_mean.template cast<U>();
    m.reg_bn[i].running_var = reg_bn[i].running_var.template cast<U>();
  }
  m.loc_conv0.weight = loc_conv0.weight.template cast<U>();
  m.loc_conv0.bias = loc_conv0.bias.template cast<U>();
  m.loc_conv1.weight = loc_conv1.weight.template cast<U>();
  m.loc_conv1.bias = loc_conv1.bias.template cast<U>();
  m.loc_fc_weight = loc_fc_weight.template cast<U>();
  m.loc_fc_bias = loc_fc_bias.template cast<U>();
  for (auto& [id, st] : adam) m.adam[id] = st.template cast<U>();
  return m;
}

template <typename T>
void ModelParamsT<T>::zero_grad() {
  for_each_parameter([](const std::string&, TensorT<T>& t, bool trainable, int) {
    if (trainable) t.zero_grad();
  });
}

namespace {

Tensor normal_tensor(const std::vector<int>& shape, double stddev, Rng& rng) {
  Tensor t = Tensor::zeros(shape);
  for (float& v : t.values()) v = static_cast<float>(rng.normal(0.0, stddev));
  return t;
}

}  // namespace

ModelParams init_model(const RegressorConfig& config, uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ModelParams m;
  m.config = config;
  const int k = config.kernel;
  int cin = 1;
  for (int i = 0; i < config.layers(); ++i) {
    const int cout = config.channels[static_cast<size_t>(i)];
    ConvParamsT<float> layer;
    const bool final_layer = i + 1 == config.layers();
    // He-style fan-in scaling; the final layer starts almost flat so the
    // initial density output stays near zero.
    const double stddev = final_layer ? 1e-6 : std::sqrt(2.0 / (static_cast<double>(cin) * k * k));
    layer.weight = normal_tensor({cout, cin, k, k}, stddev, rng);
    layer.bias = Tensor::zeros({cout});
    m.reg_conv.push_back(layer);
    if (config.batch_norm && !final_layer) {
      BatchNormParamsT<float> bn;
      bn.gamma = Tensor::full({cout}, 1.0f);
      bn.beta = Tensor::zeros({cout});
      bn.running_mean = Tensor::zeros({cout});
      bn.running_var = Tensor::full({cout}, 1.0f);
      m.reg_bn.push_back(bn);
    }
    cin = cout;
  }

  m.loc_conv0.weight = normal_tensor({kLocChannels, 1, 3, 3}, std::sqrt(2.0 / 9.0), rng);
  m.loc_conv0.bias = Tensor::zeros({kLocChannels});
  m.loc_conv1.weight =
      normal_tensor({kLocChannels, kLocChannels, 3, 3}, std::sqrt(2.0 / (9.0 * kLocChannels)), rng);
  m.loc_conv1.bias = Tensor::zeros({kLocChannels});
  // Zero weights plus identity bias: the predicted transform starts as the
  // exact identity no matter what the input block looks like.
  m.loc_fc_weight = Tensor::zeros({6, kLocChannels});
  m.loc_fc_bias = Tensor::from_values({6}, {1.0f, 0.0f, 0.0f, 0.0f, 1.0f, 0.0f});

  m.for_each_parameter([](const std::string&, Tensor& t, bool trainable, int) {
    if (trainable) t.set_requires_grad(true);
  });
  return m;
}

template <typename T>
DensityMapT<T> forward(ModelParamsT<T>& model, const TensorT<T>& frame, bool training) {
  model.config.validate();
  if (frame.ndim() != 3 || frame.dim(0) != 1)
    throw DimensionError("forward: frame must be [1,H,W], got " + TensorT<T>::shape_string(frame.shape()));
  const int H = frame.dim(1), W = frame.dim(2);
  const int D = model.config.downsample;
  if (H % D != 0 || W % D != 0)
    throw DimensionError("forward: frame " + std::to_string(H) + "x" + std::to_string(W) +
                         " not divisible by downsample " + std::to_string(D));

  const int pad = model.config.kernel / 2;
  TensorT<T> x = frame;
  for (int i = 0; i < model.config.layers(); ++i) {
    auto& layer = model.reg_conv[static_cast<size_t>(i)];
    x = conv2d(x, layer.weight, layer.bias, pad, model.config.stride_of_layer(i));
    if (model.config.batch_norm && i + 1 < model.config.layers()) {
      auto& bn = model.reg_bn[static_cast<size_t>(i)];
      TensorT<T> x4 = reshape(x, {1, x.dim(0), x.dim(1), x.dim(2)});
      x4 = batch_norm(x4, bn.gamma, bn.beta, kBnEps, training, bn.running_mean, bn.running_var,
                      kBnMomentum);
      x = reshape(x4, {x.dim(0), x.dim(1), x.dim(2)});
    }
    x = relu(x);
  }

  DensityMapT<T> map;
  map.downsample = D;
  map.grid = reshape(x, {H / D, W / D});
  return map;
}

template <typename T>
TensorT<T> regression_loss(const std::vector<DensityMapT<T>>& estimates,
                           const std::vector<DensityMapT<T>>& ground_truth) {
  if (estimates.empty()) throw UsageError("regression_loss: empty estimate list");
  if (estimates.size() != ground_truth.size())
    throw DimensionError("regression_loss: " + std::to_string(estimates.size()) + " estimates vs " +
                         std::to_string(ground_truth.size()) + " ground truths");
  TensorT<T> acc = TensorT<T>::scalar(T(0));
  for (size_t t = 0; t < estimates.size(); ++t) {
    if (!estimates[t].grid.same_shape(ground_truth[t].grid))
      throw DimensionError("regression_loss: frame " + std::to_string(t) + " estimate " +
                           TensorT<T>::shape_string(estimates[t].grid.shape()) + " vs truth " +
                           TensorT<T>::shape_string(ground_truth[t].grid.shape()));
    TensorT<T> d = sub(estimates[t].grid, ground_truth[t].grid);
    acc = add(acc, sum(mul(d, d)));
  }
  return scale(acc, 1.0 / (2.0 * static_cast<double>(estimates.size())));
}

#define LSTN_INSTANTIATE_REGRESSOR(T)                                                      \
  template struct ModelParamsT<T>;                                                        \
  template ModelParamsT<float> ModelParamsT<T>::cast<float>();                            \
  template ModelParamsT<double> ModelParamsT<T>::cast<double>();                          \
  template DensityMapT<T> forward<T>(ModelParamsT<T>&, const TensorT<T>&, bool);          \
  template TensorT<T> regression_loss<T>(const std::vector<DensityMapT<T>>&,              \
                                         const std::vector<DensityMapT<T>>&);

LSTN_INSTANTIATE_REGRESSOR(float)
LSTN_INSTANTIATE_REGRESSOR(double)

}  // namespace lstn
