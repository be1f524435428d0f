#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bfwi/acoustics.hpp"
#include "bfwi/convnet.hpp"
#include "bfwi/csgm.hpp"
#include "bfwi/datagen.hpp"
#include "bfwi/evaluation.hpp"
#include "bfwi/schedule.hpp"
#include "bfwi/training.hpp"

namespace bfwi {

struct DatagenSection {
  std::string family = "curvevel";
  std::size_t count = 64;
  std::size_t height = 64;
  std::size_t width = 64;
  double dx = 10.0;
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;
  double train_fraction = 0.8;
  std::size_t resolution = kDefaultResolution;
};

struct AcquisitionSection {
  std::size_t sources = 5;
  double peak_frequency = 15.0;
  double dt = 1e-3;
  std::size_t n_t = 1000;
  std::size_t record_every = 1;
  std::size_t sponge_cells = 20;
};

struct ScheduleSection {
  std::size_t n_steps = 1000;
  double beta_min = 1e-4;
  double beta_max = 0.3;
  double horizon_T = 1.0;
  double cosine_s = 0.008;
};

struct EvaluationSection {
  std::string distortion = "in_distribution";
  std::vector<std::string> ood_presets{"ood_heavy", "ood_light"};
  std::uint64_t seed = 0;
  std::size_t max_records = 0;
  std::vector<std::size_t> nfe_list{1, 2, 5, 10, 20, 50};
  std::vector<double> eta_list{0.0, 0.2, 0.5, 0.8, 1.0};
  std::size_t guesses = 16;
  std::size_t diversity_records = 32;
};

struct OutputSection {
  std::string dir = "out";
  bool png = true;
  std::size_t max_panels = 4;
};

/// Everything an experiment needs; all seeds are explicit fields.
struct ExperimentConfig {
  DatagenSection datagen;
  AcquisitionSection acquisition;
  ScheduleSection schedule;
  ConvNetConfig network;  ///< cond_channels and n_steps are filled in from the other sections
  TrainConfig training;
  std::string training_distortion = "in_distribution";
  std::vector<SamplerSpec> sampling{SamplerSpec{"i2sb-det-nfe50", SamplerKind::i2sb, {}, 1}};
  EvaluationSection evaluation;
  OutputSection output;
};

/// Parse and validate; unknown keys anywhere are rejected with their JSON path.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string experiment_config_to_json(const ExperimentConfig& config);

/// Replace every seed in the config by one derived from `seed`.
void override_seeds(ExperimentConfig& config, std::uint64_t seed);

AcquisitionGeometry make_geometry(const ExperimentConfig& config);
NoiseSchedule make_bridge_schedule(const ExperimentConfig& config);
CsgmState make_csgm(const ExperimentConfig& config);
/// Network config with conditioning channels for the training mode.
ConvNetConfig make_network_config(const ExperimentConfig& config);

/// Velocity models of the datagen section; record i draws from
/// make_rng(datagen.seed, i, "velocity").
std::vector<VelocityField> generate_fields(const ExperimentConfig& config, std::vector<SourceMeta>* sources = nullptr);

/// generate_fields, then simulate and preprocess into a dataset.
Dataset generate_dataset(const ExperimentConfig& config, std::size_t threads);

}  // namespace bfwi
