#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

#include "bfwi/checkpoint.hpp"
#include "bfwi/dataset.hpp"
#include "bfwi/errors.hpp"
#include "bfwi/evaluation.hpp"
#include "bfwi/experiment.hpp"
#include "bfwi/npy.hpp"
#include "bfwi/parallel.hpp"
#include "bfwi/random.hpp"
#include "bfwi/training.hpp"
#include "png_panel.hpp"

namespace bfwi::cli {

namespace fs = std::filesystem;

namespace {

ExperimentConfig resolve_config(const CommonOptions& common) {
  ExperimentConfig cfg = common.config.empty() ? parse_experiment_config("{}") : load_experiment_config(common.config);
  if (common.seed_override) override_seeds(cfg, *common.seed_override);
  return cfg;
}

std::size_t thread_count(const CommonOptions& common) {
  return common.threads > 0 ? common.threads : default_thread_count();
}

fs::path output_dir(const CommonOptions& common, const ExperimentConfig& cfg) {
  const fs::path dir = common.out.empty() ? fs::path(cfg.output.dir) : fs::path(common.out);
  fs::create_directories(dir);
  std::ofstream(dir / "config.json") << experiment_config_to_json(cfg) << "\n";
  return dir;
}

SamplerKind kind_for(TrainMode mode) {
  switch (mode) {
    case TrainMode::csgm: return SamplerKind::csgm;
    case TrainMode::supervised: return SamplerKind::supervised;
    default: return SamplerKind::i2sb;
  }
}

/// A checkpoint loaded into an evaluable model.
struct LoadedModel {
  Checkpoint checkpoint;
  std::unique_ptr<ConvNetDenoiser> denoiser;

  explicit LoadedModel(const std::string& path) : checkpoint(load_checkpoint(path)) {
    denoiser = std::make_unique<ConvNetDenoiser>(checkpoint.make_net());
  }
  EvalModel model() const {
    return EvalModel{denoiser.get(), checkpoint.bridge ? &*checkpoint.bridge : nullptr,
                     checkpoint.csgm ? &*checkpoint.csgm : nullptr};
  }
  /// Point i2sb specs at the sampler matching the training mode.
  SamplerSpec adapt(SamplerSpec spec) const {
    if (spec.kind == SamplerKind::i2sb) spec.kind = kind_for(checkpoint.mode);
    return spec;
  }
};

EvalOptions eval_options(const ExperimentConfig& cfg, std::size_t threads, const std::string& distortion) {
  EvalOptions o;
  const std::string name = distortion.empty() ? cfg.evaluation.distortion : distortion;
  o.distortion = distortion_preset(name);
  o.dataset_tag = name;
  o.seed = cfg.evaluation.seed;
  o.max_records = cfg.evaluation.max_records;
  o.threads = threads;
  return o;
}

void write_field_stack(const fs::path& path, const std::vector<const Field*>& fields) {
  const Field& first = *fields.front();
  std::vector<float> data;
  data.reserve(fields.size() * first.size());
  for (const Field* f : fields) {
    for (double v : f->values()) data.push_back(static_cast<float>(v));
  }
  write_npy_f32(path, {fields.size(), first.channels(), first.height(), first.width()}, std::span<const float>(data));
}

}  // namespace

int gen_data(const CommonOptions& common) {
  const ExperimentConfig cfg = resolve_config(common);
  const fs::path dir = output_dir(common, cfg);
  std::fprintf(stderr, "generating %zu %s models and simulating %zu shots each\n", cfg.datagen.count,
               cfg.datagen.family.c_str(), cfg.acquisition.sources);
  const Dataset ds = generate_dataset(cfg, thread_count(common));
  save_dataset(ds, dir);
  std::printf("wrote %zu records (%zu train, %zu validation) to %s\n", ds.records.size(), ds.manifest.train.size(),
              ds.manifest.validation.size(), dir.c_str());
  return 0;
}

int train(const CommonOptions& common, const std::string& data) {
  const ExperimentConfig cfg = resolve_config(common);
  const fs::path dir = output_dir(common, cfg);
  const Dataset ds = load_dataset(data);
  if (ds.manifest.seismic_channels != cfg.acquisition.sources) {
    throw ParameterError("dataset has " + std::to_string(ds.manifest.seismic_channels) +
                         " seismic channels but the config declares " + std::to_string(cfg.acquisition.sources));
  }
  const NoiseSchedule bridge = make_bridge_schedule(cfg);
  const CsgmState csgm = make_csgm(cfg);
  TrainingProcess process;
  if (cfg.training.mode == TrainMode::csgm) {
    process.csgm = &csgm;
  } else {
    process.bridge = &bridge;
  }
  const std::size_t every = std::max<std::size_t>(1, cfg.training.steps / 20);
  const TrainResult res = train_on_dataset(ds, process, make_network_config(cfg), cfg.training, [&](const TrainLogRow& r) {
    if (r.step % every == 0 || r.step + 1 == cfg.training.steps) {
      std::fprintf(stderr, "step %zu loss %.6f masked %.3f\n", r.step, r.loss, r.masked_flag_rate);
    }
  });
  Checkpoint ckpt = make_checkpoint(res.net, cfg.training, process);
  save_checkpoint(ckpt, dir / "checkpoint.bfwi");
  write_train_log(dir / "train_log.csv", res.log);
  std::printf("wrote %s\n", (dir / "checkpoint.bfwi").c_str());
  return 0;
}

int sample(const CommonOptions& common, const ModelOptions& mo, std::size_t records) {
  const ExperimentConfig cfg = resolve_config(common);
  const fs::path dir = output_dir(common, cfg);
  const Dataset ds = load_dataset(mo.data);
  const LoadedModel lm(mo.checkpoint);
  const EvalModel model = lm.model();
  const std::size_t n = std::min(records > 0 ? records : cfg.output.max_panels, ds.manifest.validation.size());
  const DistortionParams distortion = distortion_preset(cfg.evaluation.distortion);
  for (const auto& raw : cfg.sampling) {
    const SamplerSpec spec = lm.adapt(raw);
    const fs::path sub = dir / spec.label;
    fs::create_directories(sub);
    std::vector<Field> outputs(n);
    parallel_for(n, thread_count(common), [&](std::size_t j) {
      const std::size_t idx = ds.manifest.validation[j];
      const auto& rec = ds.records[idx];
      const Field c1 = initial_guess(rec.velocity, idx, distortion, cfg.evaluation.seed);
      const std::uint64_t seed = derive_seed(spec.sampling.seed, idx, "sample");
      const std::string stem = "record_" + std::to_string(idx);
      if (spec.kind == SamplerKind::i2sb) {
        SamplingConfig sc = spec.sampling;
        sc.seed = seed;
        const Trajectory traj = bfwi::sample(*model.denoiser, c1, rec.seismogram, *model.bridge, sc);
        std::vector<const Field*> states;
        for (const auto& s : traj.states) states.push_back(&s.second);
        write_field_stack(sub / (stem + "_trajectory.npy"), states);
        outputs[j] = traj.final;
      } else {
        outputs[j] = reconstruct(model, spec, c1, rec.seismogram, seed);
        write_field_stack(sub / (stem + "_final.npy"), {&outputs[j]});
      }
      if (cfg.output.png) {
        write_panel_png(sub / (stem + ".png"), {&rec.velocity, &c1, &outputs[j]}, -1.0, 1.0);
      }
    });
    std::printf("%s: wrote %zu reconstructions to %s\n", spec.label.c_str(), n, sub.c_str());
  }
  return 0;
}

int eval(const CommonOptions& common, const ModelOptions& mo, bool identity, const std::string& distortion) {
  const ExperimentConfig cfg = resolve_config(common);
  const fs::path dir = output_dir(common, cfg);
  const Dataset ds = load_dataset(mo.data);
  const EvalOptions opts = eval_options(cfg, thread_count(common), distortion);
  std::vector<MetricReport> reports;
  if (identity) {
    reports = evaluate(EvalModel{}, ds, {SamplerSpec{"smoothed-input", SamplerKind::identity, {}, 1}}, opts);
  } else {
    if (mo.checkpoint.empty()) throw ParameterError("eval needs --checkpoint unless --identity is given");
    const LoadedModel lm(mo.checkpoint);
    std::vector<SamplerSpec> specs;
    for (const auto& s : cfg.sampling) specs.push_back(lm.adapt(s));
    reports = evaluate(lm.model(), ds, specs, opts);
  }
  write_reports_csv(dir / "metrics.csv", reports);
  std::printf("%s", format_report_table(reports).c_str());
  return 0;
}

int nfe_sweep(const CommonOptions& common, const ModelOptions& mo, std::vector<std::size_t> nfe_list,
              const std::string& mode, std::size_t repeats) {
  const ExperimentConfig cfg = resolve_config(common);
  const fs::path dir = output_dir(common, cfg);
  const Dataset ds = load_dataset(mo.data);
  const LoadedModel lm(mo.checkpoint);
  std::vector<SamplerSpec> specs;
  for (auto nfe : nfe_list) {
    SamplerSpec s;
    s.kind = SamplerKind::i2sb;
    s.sampling.nfe = nfe;
    s.sampling.mode = sampling_mode_from_string(mode);
    s.sampling.seed = derive_seed(cfg.evaluation.seed, 0, "nfe-sweep");
    s.repeats = repeats;
    s.label = "nfe=" + std::to_string(nfe);
    specs.push_back(lm.adapt(s));
  }
  const auto reports = evaluate(lm.model(), ds, specs, eval_options(cfg, thread_count(common), ""));
  write_reports_csv(dir / "nfe_sweep.csv", reports);
  std::printf("%s", format_report_table(reports).c_str());
  return 0;
}

int guidance_sweep(const CommonOptions& common, const ModelOptions& mo, std::vector<double> eta_list,
                   std::size_t guesses, std::size_t records) {
  const ExperimentConfig cfg = resolve_config(common);
  const fs::path dir = output_dir(common, cfg);
  const Dataset ds = load_dataset(mo.data);
  const LoadedModel lm(mo.checkpoint);
  if (lm.checkpoint.mode == TrainMode::csgm || lm.checkpoint.mode == TrainMode::supervised) {
    throw ParameterError("guidance sweeps need a bridge checkpoint");
  }
  const EvalOptions opts = eval_options(cfg, thread_count(common), "");
  SamplingConfig sc = cfg.sampling.empty() ? SamplingConfig{} : cfg.sampling.front().sampling;
  sc.seed = derive_seed(cfg.evaluation.seed, 0, "guidance-sweep");
  std::vector<DiversityResult> spread;
  std::vector<SamplerSpec> specs;
  for (double eta : eta_list) {
    spread.push_back(guidance_diversity(lm.model(), ds, sc, eta, records, guesses, opts));
    std::printf("eta=%.3f  mean per-pixel variance %.6g +- %.2g\n", eta, spread.back().summary.mean,
                spread.back().summary.se);
    SamplerSpec s{"eta=" + std::to_string(eta), SamplerKind::i2sb, sc, 1};
    s.sampling.guidance_eta = eta;
    specs.push_back(s);
  }
  write_diversity_csv(dir / "guidance_variance.csv", spread);
  const auto reports = evaluate(lm.model(), ds, specs, opts);
  write_reports_csv(dir / "guidance_metrics.csv", reports);
  std::printf("%s", format_report_table(reports).c_str());
  return 0;
}

}  // namespace bfwi::cli
