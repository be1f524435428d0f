#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bfwi/denoiser.hpp"
#include "bfwi/tensor.hpp"

namespace bfwi {

/// Encoder-decoder estimator configuration.
///
/// widths[0] is the stem width; encoder stage i runs at widths[i] and
/// resolution / 2^i, the bottleneck at widths[depth]. Input height and width
/// must be divisible by 2^depth.
struct ConvNetConfig {
  std::vector<std::size_t> widths{16, 32, 64};
  std::size_t depth = 2;
  std::size_t time_dim = 32;
  std::size_t cond_channels = 5;
  std::size_t n_steps = 1000;
  std::size_t groups = 4;
  std::size_t mid_blocks = 2;
  std::uint64_t param_seed = 0;
  /// Add input channel 0 (the current state) to the head output, so that
  /// a zero head predicts c0 = c_t.
  bool state_skip = true;
};

void validate(const ConvNetConfig& config);

/// A named slice of the flat parameter vector.
struct ParamEntry {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

/// Sinusoidal embedding of tau = 1000 * node / n_steps.
std::vector<double> time_embedding(std::size_t node, std::size_t n_steps, std::size_t dim);

namespace detail {
struct ConvSpec {
  std::size_t cin = 0, cout = 0, w = 0, b = 0;
  bool bias = true;
};
struct BlockSpec {
  ConvSpec conv;
  std::size_t gn_gamma = 0, gn_beta = 0, t_w = 0, t_b = 0;
  bool residual = false;
};
}  // namespace detail

/// Per-sample activations retained by a forward pass for the backward pass.
template <class T>
struct ConvNetWorkspace {
  struct Conv {
    std::vector<T> cols;
    std::size_t height = 0, width = 0;
  };
  struct Block {
    Conv conv;
    std::vector<T> xhat;
    std::vector<T> inv_std;
    std::vector<T> pre;  ///< SiLU input
    std::vector<T> sig;  ///< sigmoid(pre)
  };
  std::size_t height = 0, width = 0;
  std::vector<T> emb;
  Conv stem, head;
  std::vector<Block> enc, mid, dec;
};

/// Small U-Net style c0-estimator with hand-written reverse-mode gradients.
///
/// Stages: [conv 3x3, group norm, + affine(time embedding), SiLU] blocks with
/// 2x average pooling on the way down and nearest upsampling plus skip
/// concatenation on the way up. The head is a 3x3 conv to one channel applied
/// to the decoder output plus the stem features.
template <class T>
class ConvNet {
 public:
  explicit ConvNet(ConvNetConfig config);

  const ConvNetConfig& config() const noexcept { return config_; }
  const std::vector<ParamEntry>& layout() const noexcept { return layout_; }
  std::size_t param_count() const noexcept { return params_.size(); }
  std::span<T> params() noexcept { return params_; }
  std::span<const T> params() const noexcept { return params_; }
  std::size_t input_channels() const noexcept { return 1 + config_.cond_channels; }
  const ParamEntry& entry(const std::string& name) const;

  /// input: (1 + cond_channels) x height x width, C order. Returns height x width.
  std::vector<T> forward(std::span<const T> input, std::size_t height, std::size_t width,
                         std::size_t node, ConvNetWorkspace<T>& ws) const;
  std::vector<T> forward(std::span<const T> input, std::size_t height, std::size_t width,
                         std::size_t node) const;

  /// Accumulate d(loss)/d(params) into grad given d(loss)/d(output) of the last forward.
  void backward(ConvNetWorkspace<T>& ws, std::span<const T> grad_output, std::span<T> grad) const;

 private:
  std::size_t add_entry(const std::string& name, std::size_t size);
  detail::ConvSpec add_conv(const std::string& name, std::size_t cin, std::size_t cout, bool bias);
  detail::BlockSpec add_block(const std::string& name, std::size_t cin, std::size_t cout);

  ConvNetConfig config_;
  std::vector<ParamEntry> layout_;
  std::vector<T> params_;
  detail::ConvSpec stem_;
  std::vector<detail::BlockSpec> enc_;
  std::vector<detail::BlockSpec> mid_;
  std::vector<detail::BlockSpec> dec_;  ///< dec_[i] produces widths[i]
  detail::ConvSpec head_;
};

extern template class ConvNet<float>;
extern template class ConvNet<double>;

/// One training example for the weighted regression loss.
template <class T>
struct TrainExample {
  std::vector<T> input;  ///< (1 + C) x H x W
  std::vector<T> target;  ///< H x W
  std::size_t node = 0;
  double weight = 1.0;
};

/// loss = mean over batch of weight * mean over pixels of (target - output)^2.
/// grad is resized and overwritten. Throws NumericalError(step) on a non-finite loss.
template <class T>
double loss_and_gradient(const ConvNet<T>& net, const std::vector<TrainExample<T>>& batch,
                         std::size_t height, std::size_t width, std::vector<T>& grad,
                         long long step = -1);

template <class T>
double batch_loss(const ConvNet<T>& net, const std::vector<TrainExample<T>>& batch,
                  std::size_t height, std::size_t width);

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <class T>
class Adam {
 public:
  Adam(AdamConfig config, std::size_t n) : config_(config), m_(n, 0.0), v_(n, 0.0) {}
  void step(std::span<T> params, std::span<const T> grad);
  std::size_t steps() const noexcept { return t_; }

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

/// Stack c_t with its conditioning (zeros when cond is empty) as network input.
template <class T>
std::vector<T> pack_input(const Field& c_t, const Field& cond, std::size_t cond_channels);

/// Denoiser adapter evaluating a single-precision network on double fields.
class ConvNetDenoiser final : public Denoiser {
 public:
  explicit ConvNetDenoiser(std::shared_ptr<const ConvNet<float>> net) : net_(std::move(net)) {}

  Field predict(const Field& c_t, std::size_t node, const Field& cond) const override;
  std::size_t cond_channels() const override { return net_->config().cond_channels; }
  const ConvNet<float>& net() const noexcept { return *net_; }

 private:
  std::shared_ptr<const ConvNet<float>> net_;
};

}  // namespace bfwi
