#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "bfwi/convnet.hpp"
#include "bfwi/csgm.hpp"
#include "bfwi/schedule.hpp"
#include "bfwi/training.hpp"

namespace bfwi {

/// A trained estimator together with the process it was trained for.
///
/// File layout: the bytes "BFWI1", a little-endian u32 header length, a UTF-8
/// JSON header, then for bridge modes the schedule block (u32 n_steps,
/// f64 horizon_T, f64 beta[n_steps]), then the parameters as little-endian f32
/// in layout order.
struct Checkpoint {
  ConvNetConfig network;
  TrainMode mode = TrainMode::guided_ci2sb;
  std::optional<NoiseSchedule> bridge;  ///< bridge modes
  std::optional<CsgmState> csgm;        ///< csgm mode
  std::size_t train_steps = 0;
  std::uint64_t train_seed = 0;
  double p_uncond = 0.0;
  double w_cond = 0.0;
  std::string extra_json = "{}";  ///< free-form provenance
  std::vector<float> params;

  std::shared_ptr<const ConvNet<float>> make_net() const;
};

Checkpoint make_checkpoint(const ConvNet<float>& net, const TrainConfig& config, const TrainingProcess& process);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace bfwi
