#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "bfwi/acoustics.hpp"
#include "bfwi/tensor.hpp"

namespace bfwi {

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr std::size_t kDefaultResolution = 64;

/// Where a record came from.
struct SourceMeta {
  std::string kind;  ///< "generated" or "imported"
  std::string family;
  std::uint64_t seed = 0;
  std::string file;
  std::size_t index = 0;
};

/// One preprocessed (c0, d_obs) pair. Values are float-representable and lie in [-1, 1].
struct DatasetRecord {
  Field velocity;    ///< 1 x 64 x 64
  Field seismogram;  ///< S x 64 x 64
  std::pair<double, double> raw_velocity_range;  ///< (min, max) m/s used for normalization
  SourceMeta source;
};

/// Constants of the signed log transform y = sign(x) ln(1 + |x| / log_a), then y / norm.
struct SeismicScale {
  double log_a = 1.0;
  double norm = 1.0;
};

struct DatasetManifest {
  int version = kDatasetFormatVersion;
  std::size_t count = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  double vel_min = 0.0;
  double vel_max = 1.0;
  SeismicScale seismic;
  std::size_t seismic_channels = 0;
  std::size_t resolution = kDefaultResolution;
  std::uint64_t split_seed = 0;
  std::vector<SourceMeta> sources;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<DatasetRecord> records;
};

/// Bilinear resize of every channel (half-pixel centers, edge clamped).
Field bilinear_resize(const Field& field, std::size_t height, std::size_t width);

/// Resize to resolution x resolution (skipped when already that size), then map
/// [min, max] affinely onto [-1, 1] with clamping.
Field preprocess_velocity(const VelocityField& raw, std::pair<double, double> global_range,
                          std::size_t resolution = kDefaultResolution);

/// Inverse of the affine part of preprocess_velocity.
Field denormalize_velocity(const Field& normalized, std::pair<double, double> global_range);

double signed_log(double x, double a);

/// Dataset-wide constants: log_a = 1e-2 max|x| and norm = max |resized signed log|.
SeismicScale fit_seismic_scale(const std::vector<const Field*>& raw_gathers,
                               std::size_t resolution = kDefaultResolution);

/// Signed log, per-shot bilinear resize of T x R to resolution^2, divide by norm.
Field preprocess_seismogram(const Field& raw_gathers, const SeismicScale& scale,
                            std::size_t resolution = kDefaultResolution);

/// Deterministic train/validation split as a pure function of (count, seed).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> make_split(
    std::size_t count, std::uint64_t split_seed, double train_fraction = 0.8);

struct BuildOptions {
  std::uint64_t split_seed = 0;
  double train_fraction = 0.8;
  std::size_t resolution = kDefaultResolution;
  std::size_t threads = 1;
  std::vector<SourceMeta> sources;  ///< optional, one per field
};

/// Simulate every field, preprocess with dataset-global constants, split.
Dataset build_dataset_in_memory(const std::vector<VelocityField>& fields,
                                const AcquisitionGeometry& geometry, const BuildOptions& options);

/// As above, then write to `out_dir` (velocity.npy, seismogram.npy, manifest.json).
DatasetManifest build_dataset(const std::vector<VelocityField>& fields,
                              const AcquisitionGeometry& geometry,
                              const std::filesystem::path& out_dir, const BuildOptions& options);

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const std::string& text);

/// Expected array shapes of an OpenFWI shard.
struct OpenFwiShapes {
  std::size_t velocity_height = 70;
  std::size_t velocity_width = 70;
  std::size_t shots = 5;
  std::size_t samples = 1000;
  std::size_t receivers = 70;
};

/// Load an OpenFWI velocity/seismogram pair ([N,1,70,70] and [N,5,1000,70])
/// and run both preprocessors with constants fitted on the pair.
Dataset import_openfwi(const std::filesystem::path& velocity_npy,
                       const std::filesystem::path& seismogram_npy,
                       const OpenFwiShapes& shapes = {}, std::uint64_t split_seed = 0,
                       double train_fraction = 0.8);

}  // namespace bfwi
