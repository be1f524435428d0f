#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bfwi/convnet.hpp"
#include "bfwi/csgm.hpp"
#include "bfwi/datagen.hpp"
#include "bfwi/dataset.hpp"
#include "bfwi/denoiser.hpp"
#include "bfwi/schedule.hpp"

namespace bfwi {

/// ci2sb: conditional bridge regression. guided_ci2sb: same with random
/// zero-masking of the seismogram and loss reweighting. csgm: VP-diffusion
/// baseline conditioned on [d_obs; c1]. supervised: c1 -> c0 at a constant node.
enum class TrainMode { ci2sb, guided_ci2sb, csgm, supervised };

std::string to_string(TrainMode mode);
TrainMode train_mode_from_string(const std::string& name);

struct TrainConfig {
  TrainMode mode = TrainMode::guided_ci2sb;
  double p_uncond = 0.5;
  double w_cond = 100.0;
  std::size_t batch_size = 16;
  std::size_t steps = 1000;
  AdamConfig adam{};
  std::uint64_t seed = 0;
  DistortionParams distortion{};
  std::size_t log_every = 1;
  /// Decay of the parameter moving average returned as the trained net; 0 returns the raw iterate.
  double ema_decay = 0.999;
};

void validate(const TrainConfig& config);

/// Conditioning channels the network needs for `mode` given S seismic channels.
std::size_t cond_channels_for(TrainMode mode, std::size_t seismic_channels);

/// One (c0, d_obs) training pair.
struct TrainingPair {
  const Field* c0 = nullptr;
  const Field* d_obs = nullptr;
};

/// Noise process used to form c_t.
struct TrainingProcess {
  const NoiseSchedule* bridge = nullptr;  ///< ci2sb, guided_ci2sb, supervised
  const CsgmState* csgm = nullptr;        ///< csgm
  std::size_t n_steps() const;
};

struct TrainBatch {
  std::vector<TrainExample<float>> examples;
  std::vector<bool> masked;
  std::size_t height = 0, width = 0;
  double masked_rate() const;
};

/// Draw the batch for `step`. Randomness comes only from (config.seed, step).
TrainBatch sample_batch(const std::vector<TrainingPair>& pairs, const TrainingProcess& process,
                        const TrainConfig& config, std::size_t step, std::size_t cond_channels);

struct TrainLogRow {
  std::size_t step = 0;
  double loss = 0.0;
  double masked_flag_rate = 0.0;
};

struct TrainResult {
  ConvNet<float> net;
  std::vector<TrainLogRow> log;
};

using TrainCallback = std::function<void(const TrainLogRow&)>;

/// Adam on the weighted regression loss. Throws NumericalError with the step
/// index if the loss becomes non-finite.
TrainResult train(const std::vector<TrainingPair>& pairs, const TrainingProcess& process,
                  const ConvNetConfig& net_config, const TrainConfig& config,
                  const TrainCallback& callback = {});

/// Convenience over the train split of a dataset.
TrainResult train_on_dataset(const Dataset& dataset, const TrainingProcess& process,
                             const ConvNetConfig& net_config, const TrainConfig& config,
                             const TrainCallback& callback = {});

void write_train_log(const std::filesystem::path& path, const std::vector<TrainLogRow>& log);

/// Scalar toy task: i.i.d. pixels with c0 ~ N(m, v), c1 = c0 + s * zeta,
/// c_t from the bridge marginal. No conditioning.
struct ToyTaskConfig {
  std::size_t size = 8;
  std::size_t batch_size = 64;
  std::size_t steps = 10000;
  AdamConfig adam{1e-3};
  std::uint64_t seed = 0;
};

TrainResult train_gaussian_toy(const GaussianToyJoint& joint, const NoiseSchedule& schedule,
                               const ConvNetConfig& net_config, const ToyTaskConfig& config,
                               const TrainCallback& callback = {});

/// Mean squared deviation of the network from the analytic conditional mean.
///
/// For each node and each grid value x, x is planted at the center pixel of a
/// field whose other pixels are drawn from the c_t marginal, and the network's
/// center output is compared with E[c0 | c_t = x].
double toy_oracle_deviation(const ConvNet<float>& net, const GaussianOracle& oracle,
                            const std::vector<std::size_t>& nodes, const std::vector<double>& grid,
                            std::size_t size, std::size_t repeats, std::uint64_t seed);

}  // namespace bfwi
