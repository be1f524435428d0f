#include "bfwi/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bfwi/errors.hpp"
#include "bfwi/random.hpp"

namespace bfwi {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ParameterError(path + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!ok) throw ParameterError("unknown config key '" + path + "." + key + "'");
  }
}

template <class T>
void read(const json& obj, const char* key, T& dst, const std::string& path) {
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParameterError("config key '" + path + "." + key + "' has the wrong type: " + e.what());
  }
}

SamplerSpec parse_sampler(const json& j, const std::string& path) {
  check_keys(j, path, {"label", "kind", "nfe", "mode", "eta", "seed", "repeats"});
  SamplerSpec s;
  std::string kind = "i2sb";
  std::string mode = "deterministic_mean";
  read(j, "kind", kind, path);
  read(j, "mode", mode, path);
  s.kind = sampler_kind_from_string(kind);
  s.sampling.mode = sampling_mode_from_string(mode);
  read(j, "nfe", s.sampling.nfe, path);
  read(j, "eta", s.sampling.guidance_eta, path);
  read(j, "seed", s.sampling.seed, path);
  read(j, "repeats", s.repeats, path);
  s.label = to_string(s.kind) + "-" + to_string(s.sampling.mode) + "-nfe" + std::to_string(s.sampling.nfe);
  read(j, "label", s.label, path);
  return s;
}

json sampler_to_json(const SamplerSpec& s) {
  return json{{"label", s.label},
              {"kind", to_string(s.kind)},
              {"nfe", s.sampling.nfe},
              {"mode", to_string(s.sampling.mode)},
              {"eta", s.sampling.guidance_eta},
              {"seed", s.sampling.seed},
              {"repeats", s.repeats}};
}

void validate(const ExperimentConfig& c) {
  family_preset(c.datagen.family);
  if (c.datagen.count == 0) throw ParameterError("datagen.count must be positive");
  if (c.datagen.height < 16 || c.datagen.width < 16) throw ParameterError("datagen grid must be at least 16x16");
  if (!(c.datagen.dx > 0.0)) throw ParameterError("datagen.dx must be positive");
  if (!(c.datagen.train_fraction >= 0.0 && c.datagen.train_fraction <= 1.0)) {
    throw ParameterError("datagen.train_fraction must lie in [0, 1]");
  }
  if (c.datagen.resolution == 0) throw ParameterError("datagen.resolution must be positive");
  if (c.acquisition.sources == 0) throw ParameterError("acquisition.sources must be positive");
  if (c.acquisition.n_t == 0 || c.acquisition.record_every == 0) {
    throw ParameterError("acquisition.n_t and record_every must be positive");
  }
  if (!(c.acquisition.dt > 0.0) || !(c.acquisition.peak_frequency > 0.0)) {
    throw ParameterError("acquisition.dt and peak_frequency must be positive");
  }
  validate(make_network_config(c));
  validate(c.training);
  distortion_preset(c.training_distortion);
  distortion_preset(c.evaluation.distortion);
  for (const auto& p : c.evaluation.ood_presets) distortion_preset(p);
  for (const auto& s : c.sampling) {
    if (s.sampling.nfe == 0 || s.sampling.nfe > c.schedule.n_steps) {
      throw ParameterError("sampling '" + s.label + "': nfe must lie in [1, n_steps]");
    }
    if (s.repeats == 0) throw ParameterError("sampling '" + s.label + "': repeats must be positive");
  }
  for (auto n : c.evaluation.nfe_list) {
    if (n == 0 || n > c.schedule.n_steps) throw ParameterError("evaluation.nfe_list entries must lie in [1, n_steps]");
  }
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ParameterError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, "config",
             {"datagen", "acquisition", "schedule", "network", "training", "sampling", "evaluation", "output"});
  ExperimentConfig c;

  if (root.contains("datagen")) {
    const auto& j = root["datagen"];
    const std::string p = "datagen";
    check_keys(j, p, {"family", "count", "height", "width", "dx", "seed", "split_seed", "train_fraction", "resolution"});
    read(j, "family", c.datagen.family, p);
    read(j, "count", c.datagen.count, p);
    read(j, "height", c.datagen.height, p);
    read(j, "width", c.datagen.width, p);
    read(j, "dx", c.datagen.dx, p);
    read(j, "seed", c.datagen.seed, p);
    read(j, "split_seed", c.datagen.split_seed, p);
    read(j, "train_fraction", c.datagen.train_fraction, p);
    read(j, "resolution", c.datagen.resolution, p);
  }
  if (root.contains("acquisition")) {
    const auto& j = root["acquisition"];
    const std::string p = "acquisition";
    check_keys(j, p, {"sources", "peak_frequency", "dt", "n_t", "record_every", "sponge_cells"});
    read(j, "sources", c.acquisition.sources, p);
    read(j, "peak_frequency", c.acquisition.peak_frequency, p);
    read(j, "dt", c.acquisition.dt, p);
    read(j, "n_t", c.acquisition.n_t, p);
    read(j, "record_every", c.acquisition.record_every, p);
    read(j, "sponge_cells", c.acquisition.sponge_cells, p);
  }
  if (root.contains("schedule")) {
    const auto& j = root["schedule"];
    const std::string p = "schedule";
    check_keys(j, p, {"n_steps", "beta_min", "beta_max", "horizon_T", "cosine_s"});
    read(j, "n_steps", c.schedule.n_steps, p);
    read(j, "beta_min", c.schedule.beta_min, p);
    read(j, "beta_max", c.schedule.beta_max, p);
    read(j, "horizon_T", c.schedule.horizon_T, p);
    read(j, "cosine_s", c.schedule.cosine_s, p);
  }
  if (root.contains("network")) {
    const auto& j = root["network"];
    const std::string p = "network";
    check_keys(j, p, {"widths", "depth", "time_dim", "groups", "mid_blocks", "param_seed", "state_skip"});
    read(j, "widths", c.network.widths, p);
    read(j, "depth", c.network.depth, p);
    read(j, "time_dim", c.network.time_dim, p);
    read(j, "groups", c.network.groups, p);
    read(j, "mid_blocks", c.network.mid_blocks, p);
    read(j, "param_seed", c.network.param_seed, p);
    read(j, "state_skip", c.network.state_skip, p);
  }
  if (root.contains("training")) {
    const auto& j = root["training"];
    const std::string p = "training";
    check_keys(j, p, {"mode", "p_uncond", "w_cond", "batch_size", "steps", "lr", "beta1", "beta2", "eps", "seed",
                      "distortion", "log_every", "ema_decay"});
    std::string mode = to_string(c.training.mode);
    read(j, "mode", mode, p);
    c.training.mode = train_mode_from_string(mode);
    read(j, "p_uncond", c.training.p_uncond, p);
    read(j, "w_cond", c.training.w_cond, p);
    read(j, "batch_size", c.training.batch_size, p);
    read(j, "steps", c.training.steps, p);
    read(j, "lr", c.training.adam.lr, p);
    read(j, "beta1", c.training.adam.beta1, p);
    read(j, "beta2", c.training.adam.beta2, p);
    read(j, "eps", c.training.adam.eps, p);
    read(j, "seed", c.training.seed, p);
    read(j, "distortion", c.training_distortion, p);
    read(j, "log_every", c.training.log_every, p);
    read(j, "ema_decay", c.training.ema_decay, p);
  }
  c.training.distortion = distortion_preset(c.training_distortion);
  if (root.contains("sampling")) {
    const auto& j = root["sampling"];
    if (!j.is_array()) throw ParameterError("sampling must be a list of sampler configs");
    c.sampling.clear();
    for (std::size_t k = 0; k < j.size(); ++k) {
      c.sampling.push_back(parse_sampler(j[k], "sampling[" + std::to_string(k) + "]"));
    }
  }
  if (root.contains("evaluation")) {
    const auto& j = root["evaluation"];
    const std::string p = "evaluation";
    check_keys(j, p, {"distortion", "ood_presets", "seed", "max_records", "nfe_list", "eta_list", "guesses",
                      "diversity_records"});
    read(j, "distortion", c.evaluation.distortion, p);
    read(j, "ood_presets", c.evaluation.ood_presets, p);
    read(j, "seed", c.evaluation.seed, p);
    read(j, "max_records", c.evaluation.max_records, p);
    read(j, "nfe_list", c.evaluation.nfe_list, p);
    read(j, "eta_list", c.evaluation.eta_list, p);
    read(j, "guesses", c.evaluation.guesses, p);
    read(j, "diversity_records", c.evaluation.diversity_records, p);
  }
  if (root.contains("output")) {
    const auto& j = root["output"];
    const std::string p = "output";
    check_keys(j, p, {"dir", "png", "max_panels"});
    read(j, "dir", c.output.dir, p);
    read(j, "png", c.output.png, p);
    read(j, "max_panels", c.output.max_panels, p);
  }
  validate(c);
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str());
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
  json j;
  j["datagen"] = {{"family", c.datagen.family},
                  {"count", c.datagen.count},
                  {"height", c.datagen.height},
                  {"width", c.datagen.width},
                  {"dx", c.datagen.dx},
                  {"seed", c.datagen.seed},
                  {"split_seed", c.datagen.split_seed},
                  {"train_fraction", c.datagen.train_fraction},
                  {"resolution", c.datagen.resolution}};
  j["acquisition"] = {{"sources", c.acquisition.sources},
                      {"peak_frequency", c.acquisition.peak_frequency},
                      {"dt", c.acquisition.dt},
                      {"n_t", c.acquisition.n_t},
                      {"record_every", c.acquisition.record_every},
                      {"sponge_cells", c.acquisition.sponge_cells}};
  j["schedule"] = {{"n_steps", c.schedule.n_steps},
                   {"beta_min", c.schedule.beta_min},
                   {"beta_max", c.schedule.beta_max},
                   {"horizon_T", c.schedule.horizon_T},
                   {"cosine_s", c.schedule.cosine_s}};
  j["network"] = {{"widths", c.network.widths},         {"depth", c.network.depth},
                  {"time_dim", c.network.time_dim},     {"groups", c.network.groups},
                  {"mid_blocks", c.network.mid_blocks}, {"param_seed", c.network.param_seed},
                  {"state_skip", c.network.state_skip}};
  j["training"] = {{"mode", to_string(c.training.mode)},
                   {"p_uncond", c.training.p_uncond},
                   {"w_cond", c.training.w_cond},
                   {"batch_size", c.training.batch_size},
                   {"steps", c.training.steps},
                   {"lr", c.training.adam.lr},
                   {"beta1", c.training.adam.beta1},
                   {"beta2", c.training.adam.beta2},
                   {"eps", c.training.adam.eps},
                   {"seed", c.training.seed},
                   {"distortion", c.training_distortion},
                   {"log_every", c.training.log_every},
                   {"ema_decay", c.training.ema_decay}};
  j["sampling"] = json::array();
  for (const auto& s : c.sampling) j["sampling"].push_back(sampler_to_json(s));
  j["evaluation"] = {{"distortion", c.evaluation.distortion},
                     {"ood_presets", c.evaluation.ood_presets},
                     {"seed", c.evaluation.seed},
                     {"max_records", c.evaluation.max_records},
                     {"nfe_list", c.evaluation.nfe_list},
                     {"eta_list", c.evaluation.eta_list},
                     {"guesses", c.evaluation.guesses},
                     {"diversity_records", c.evaluation.diversity_records}};
  j["output"] = {{"dir", c.output.dir}, {"png", c.output.png}, {"max_panels", c.output.max_panels}};
  return j.dump(2);
}

void override_seeds(ExperimentConfig& c, std::uint64_t seed) {
  c.datagen.seed = derive_seed(seed, 0, "datagen");
  c.datagen.split_seed = derive_seed(seed, 0, "split");
  c.network.param_seed = derive_seed(seed, 0, "params");
  c.training.seed = derive_seed(seed, 0, "training");
  c.evaluation.seed = derive_seed(seed, 0, "evaluation");
  for (std::size_t k = 0; k < c.sampling.size(); ++k) c.sampling[k].sampling.seed = derive_seed(seed, k, "sampling");
}

AcquisitionGeometry make_geometry(const ExperimentConfig& c) {
  AcquisitionGeometry g = make_surface_geometry(c.datagen.width, c.acquisition.sources, c.acquisition.peak_frequency,
                                                c.acquisition.dt, c.acquisition.n_t, c.acquisition.record_every);
  g.sponge_cells = c.acquisition.sponge_cells;
  return g;
}

NoiseSchedule make_bridge_schedule(const ExperimentConfig& c) {
  return make_symmetric_schedule(c.schedule.n_steps, c.schedule.beta_min, c.schedule.beta_max, c.schedule.horizon_T);
}

CsgmState make_csgm(const ExperimentConfig& c) {
  return make_csgm_state(c.acquisition.sources, c.schedule.n_steps, c.schedule.cosine_s);
}

ConvNetConfig make_network_config(const ExperimentConfig& c) {
  ConvNetConfig n = c.network;
  n.cond_channels = cond_channels_for(c.training.mode, c.acquisition.sources);
  n.n_steps = c.schedule.n_steps;
  return n;
}

std::vector<VelocityField> generate_fields(const ExperimentConfig& c, std::vector<SourceMeta>* sources) {
  const ModelFamily family = family_preset(c.datagen.family);
  std::vector<VelocityField> fields;
  fields.reserve(c.datagen.count);
  if (sources != nullptr) sources->clear();
  for (std::size_t i = 0; i < c.datagen.count; ++i) {
    Rng rng = make_rng(c.datagen.seed, i, "velocity");
    fields.push_back(generate_velocity(family, c.datagen.height, c.datagen.width, rng, c.datagen.dx));
    if (sources != nullptr) sources->push_back(SourceMeta{"generated", c.datagen.family, c.datagen.seed, "", i});
  }
  return fields;
}

Dataset generate_dataset(const ExperimentConfig& c, std::size_t threads) {
  BuildOptions opts;
  opts.split_seed = c.datagen.split_seed;
  opts.train_fraction = c.datagen.train_fraction;
  opts.resolution = c.datagen.resolution;
  opts.threads = threads;
  const auto fields = generate_fields(c, &opts.sources);
  return build_dataset_in_memory(fields, make_geometry(c), opts);
}

}  // namespace bfwi
