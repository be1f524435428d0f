#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bfwi/bridge.hpp"
#include "bfwi/csgm.hpp"
#include "bfwi/datagen.hpp"
#include "bfwi/dataset.hpp"
#include "bfwi/denoiser.hpp"

namespace bfwi {

/// i2sb: bridge sampler (mode taken from SamplingConfig). csgm: DDIM from
/// noise. supervised: one call at node n_steps. identity: returns c1.
enum class SamplerKind { i2sb, csgm, supervised, identity };

std::string to_string(SamplerKind kind);
SamplerKind sampler_kind_from_string(const std::string& name);

struct SamplerSpec {
  std::string label;
  SamplerKind kind = SamplerKind::i2sb;
  SamplingConfig sampling{};
  std::size_t repeats = 1;  ///< seeds averaged per record (stochastic i2sb only)
};

/// What a sampler needs besides its spec. Unused members may stay null.
struct EvalModel {
  const Denoiser* denoiser = nullptr;
  const NoiseSchedule* bridge = nullptr;
  const CsgmState* csgm = nullptr;
};

struct EvalOptions {
  DistortionParams distortion{};
  std::string dataset_tag = "validation";
  std::uint64_t seed = 0;       ///< initial-guess draws: derive_seed(seed, record, "initial-guess")
  std::size_t max_records = 0;  ///< 0 = whole validation split
  std::size_t threads = 1;
};

struct RecordMetrics {
  std::size_t record = 0;
  double mae = 0.0;
  double mse = 0.0;
  double ssim = 0.0;
};

struct MetricSummary {
  double mean = 0.0;
  double se = 0.0;
};

struct MetricReport {
  SamplerSpec spec;
  std::string dataset_tag;
  std::vector<RecordMetrics> records;
  MetricSummary mae, mse, ssim;
  std::size_t count() const noexcept { return records.size(); }
};

MetricSummary summarize(const std::vector<double>& values);

/// Initial guess c1 for a record under the evaluation protocol.
Field initial_guess(const Field& c0, std::size_t record, const DistortionParams& distortion,
                    std::uint64_t seed);

/// One reconstruction of c0 from (c1, d_obs).
Field reconstruct(const EvalModel& model, const SamplerSpec& spec, const Field& c1, const Field& d_obs,
                  std::uint64_t seed);

/// Run every spec over the validation split and aggregate MAE, MSE and SSIM.
std::vector<MetricReport> evaluate(const EvalModel& model, const Dataset& dataset,
                                   const std::vector<SamplerSpec>& specs, const EvalOptions& options);

void write_reports_csv(const std::filesystem::path& path, const std::vector<MetricReport>& reports);
std::string format_report_table(const std::vector<MetricReport>& reports);

/// Spread of reconstructions across independent initial guesses.
struct DiversityResult {
  double eta = 0.0;
  std::vector<double> per_record;  ///< mean per-pixel variance across guesses
  MetricSummary summary;
};

/// For each of the first `records` validation records, draw `guesses` initial
/// guesses, reconstruct each with guidance `eta`, and average the per-pixel
/// sample variance.
DiversityResult guidance_diversity(const EvalModel& model, const Dataset& dataset, SamplingConfig sampling,
                                   double eta, std::size_t records, std::size_t guesses,
                                   const EvalOptions& options);

void write_diversity_csv(const std::filesystem::path& path, const std::vector<DiversityResult>& results);

}  // namespace bfwi
