#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "lstn/adam.hpp"
#include "lstn/density.hpp"
#include "lstn/ops.hpp"

namespace lstn {

// Architecture of the density regressor: a plain convolutional stack.
// `channels` lists the output width of every layer; the last entry must be 1
// (the density plane).  `downsample` is the total spatial reduction of the
// output map, realized with stride-2 layers starting at the second one.
struct RegressorConfig {
  std::vector<int> channels = {16, 16, 32, 1};
  int downsample = 2;  // 1, 2 or 4
  int kernel = 3;
  bool batch_norm = true;

  void validate() const;
  int layers() const { return static_cast<int>(channels.size()); }
  int stride_of_layer(int i) const;
};

template <typename T>
struct ConvParamsT {
  TensorT<T> weight;  // [Cout,Cin,k,k]
  TensorT<T> bias;    // [Cout]
};

template <typename T>
struct BatchNormParamsT {
  TensorT<T> gamma, beta;
  TensorT<T> running_mean, running_var;  // state, not trained
};

inline constexpr double kBnEps = 1e-5;
inline constexpr double kBnMomentum = 0.1;
inline constexpr int kLocChannels = 8;

// All learnable state: the regressor stack, the block localization network
// (two convs, spatial mean, linear head emitting the 6 affine coefficients),
// and per-parameter optimizer state keyed by parameter identifier.
template <typename T>
struct ModelParamsT {
  RegressorConfig config;
  std::vector<ConvParamsT<T>> reg_conv;
  std::vector<BatchNormParamsT<T>> reg_bn;  // one per non-final layer when enabled
  ConvParamsT<T> loc_conv0, loc_conv1;
  TensorT<T> loc_fc_weight;  // [6, kLocChannels]
  TensorT<T> loc_fc_bias;    // [6]
  std::map<std::string, AdamStateT<T>> adam;

  // Visits every tensor in a stable order.  `trainable` is false for the
  // batch-norm running buffers; `reg_layer` is the regressor layer index or
  // -1 for localization parameters.
  void for_each_parameter(
      const std::function<void(const std::string& id, TensorT<T>& tensor, bool trainable,
                               int reg_layer)>& fn);

  template <typename U>
  ModelParamsT<U> cast();

  void zero_grad();
};

using ModelParams = ModelParamsT<float>;

// Seeded parameter initialization.  Conv layers draw from a scaled normal;
// the final regressor layer starts near zero so the first density estimates
// are small and non-negative; the localization head starts as the exact
// identity transform.
ModelParams init_model(const RegressorConfig& config, uint64_t seed);

// Density estimate for one frame [1,H,W].  H and W must be divisible by the
// configured downsample factor; the result grid is [H/D, W/D].  In training
// mode batch-norm uses batch statistics and updates its running buffers.
template <typename T>
DensityMapT<T> forward(ModelParamsT<T>& model, const TensorT<T>& frame, bool training = false);

// Mean squared map error   1/(2T) sum_t ||estimate_t - truth_t||^2
// as a graph scalar (gradients flow into the estimates).
template <typename T>
TensorT<T> regression_loss(const std::vector<DensityMapT<T>>& estimates,
                           const std::vector<DensityMapT<T>>& ground_truth);

}  // namespace lstn
