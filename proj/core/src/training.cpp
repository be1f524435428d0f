#include "bfwi/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "bfwi/bridge.hpp"
#include "bfwi/errors.hpp"
#include "bfwi/random.hpp"

namespace bfwi {

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::ci2sb: return "ci2sb";
    case TrainMode::guided_ci2sb: return "guided_ci2sb";
    case TrainMode::csgm: return "csgm";
    case TrainMode::supervised: return "supervised";
  }
  return "?";
}

TrainMode train_mode_from_string(const std::string& name) {
  for (auto m : {TrainMode::ci2sb, TrainMode::guided_ci2sb, TrainMode::csgm, TrainMode::supervised}) {
    if (to_string(m) == name) return m;
  }
  throw ParameterError("unknown training mode '" + name + "'");
}

void validate(const TrainConfig& c) {
  if (!(c.p_uncond >= 0.0 && c.p_uncond <= 1.0)) throw ParameterError("p_uncond must lie in [0, 1]");
  if (!(c.w_cond >= 0.0) || !std::isfinite(c.w_cond)) throw ParameterError("w_cond must be non-negative");
  if (c.batch_size == 0) throw ParameterError("batch size must be positive");
  if (c.steps == 0) throw ParameterError("step count must be positive");
  if (!(c.adam.lr > 0.0)) throw ParameterError("learning rate must be positive");
  if (!(c.adam.beta1 >= 0.0 && c.adam.beta1 < 1.0 && c.adam.beta2 >= 0.0 && c.adam.beta2 < 1.0)) {
    throw ParameterError("moment decays must lie in [0, 1)");
  }
  if (!(c.adam.eps > 0.0)) throw ParameterError("adam epsilon must be positive");
  if (c.log_every == 0) throw ParameterError("log_every must be positive");
  if (!(c.ema_decay >= 0.0 && c.ema_decay < 1.0)) throw ParameterError("ema_decay must lie in [0, 1)");
  validate(c.distortion);
}

std::size_t cond_channels_for(TrainMode mode, std::size_t seismic_channels) {
  return mode == TrainMode::csgm ? seismic_channels + 1 : seismic_channels;
}

std::size_t TrainingProcess::n_steps() const {
  if (bridge != nullptr) return bridge->n_steps;
  if (csgm != nullptr) return csgm->n_steps();
  throw ParameterError("training process has no schedule");
}

double TrainBatch::masked_rate() const {
  if (masked.empty()) return 0.0;
  std::size_t n = 0;
  for (bool m : masked) n += m ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(masked.size());
}

namespace {

std::vector<float> to_float(const Field& f) {
  std::vector<float> v(f.size());
  std::transform(f.values().begin(), f.values().end(), v.begin(), [](double x) { return static_cast<float>(x); });
  return v;
}

}  // namespace

TrainBatch sample_batch(const std::vector<TrainingPair>& pairs, const TrainingProcess& process,
                        const TrainConfig& config, std::size_t step, std::size_t cond_channels) {
  if (pairs.empty()) throw ParameterError("training split is empty");
  const bool uses_csgm = config.mode == TrainMode::csgm;
  if (uses_csgm ? process.csgm == nullptr : process.bridge == nullptr) {
    throw ParameterError("training mode " + to_string(config.mode) + " needs its schedule");
  }
  const std::size_t n = process.n_steps();
  Rng rng = make_rng(config.seed, step, "batch");
  TrainBatch batch;
  batch.height = pairs.front().c0->height();
  batch.width = pairs.front().c0->width();
  batch.examples.reserve(config.batch_size);
  for (std::size_t b = 0; b < config.batch_size; ++b) {
    const auto idx = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<long long>(pairs.size()) - 1));
    const Field& c0 = *pairs[idx].c0;
    const Field& d_obs = *pairs[idx].d_obs;
    const Field c1 = distort(c0, config.distortion, rng).c1;

    TrainExample<float> ex;
    Field c_t;
    Field cond = d_obs;
    switch (config.mode) {
      case TrainMode::ci2sb:
      case TrainMode::guided_ci2sb:
        ex.node = static_cast<std::size_t>(uniform_int(rng, 1, static_cast<long long>(n)));
        c_t = sample_bridge_point(c0, c1, ex.node, *process.bridge, rng);
        break;
      case TrainMode::csgm:
        ex.node = static_cast<std::size_t>(uniform_int(rng, 1, static_cast<long long>(n)));
        c_t = vp_forward_sample(c0, ex.node, *process.csgm, rng);
        cond = csgm_condition(d_obs, c1, *process.csgm);
        break;
      case TrainMode::supervised:
        ex.node = n;
        c_t = c1;
        break;
    }
    bool masked = false;
    if (config.mode == TrainMode::guided_ci2sb) {
      masked = uniform01(rng) < config.p_uncond;
      ex.weight = masked ? 1.0 : 1.0 + config.w_cond;
    }
    ex.input = pack_input<float>(c_t, masked ? Field{} : cond, cond_channels);
    ex.target = to_float(c0);
    batch.examples.push_back(std::move(ex));
    batch.masked.push_back(masked);
  }
  return batch;
}

TrainResult train(const std::vector<TrainingPair>& pairs, const TrainingProcess& process,
                  const ConvNetConfig& net_config, const TrainConfig& config, const TrainCallback& callback) {
  validate(config);
  if (pairs.empty()) throw ParameterError("training split is empty");
  const std::size_t S = pairs.front().d_obs->channels();
  const std::size_t want = cond_channels_for(config.mode, S);
  if (net_config.cond_channels != want) {
    throw ParameterError("network has " + std::to_string(net_config.cond_channels) +
                         " conditioning channels, mode " + to_string(config.mode) + " needs " +
                         std::to_string(want));
  }
  if (net_config.n_steps != process.n_steps()) {
    throw ParameterError("network n_steps does not match the training schedule");
  }
  TrainResult result{ConvNet<float>(net_config), {}};
  auto& net = result.net;
  Adam<float> adam(config.adam, net.param_count());
  std::vector<float> grad;
  std::vector<double> ema(net.params().begin(), net.params().end());
  for (std::size_t step = 0; step < config.steps; ++step) {
    const TrainBatch batch = sample_batch(pairs, process, config, step, want);
    const double loss =
        loss_and_gradient(net, batch.examples, batch.height, batch.width, grad, static_cast<long long>(step));
    adam.step(net.params(), grad);
    // Warm-up keeps early iterates from dominating short runs.
    const double d = std::min(config.ema_decay, (1.0 + static_cast<double>(step)) / (10.0 + static_cast<double>(step)));
    const auto p = net.params();
    for (std::size_t k = 0; k < ema.size(); ++k) ema[k] = d * ema[k] + (1.0 - d) * p[k];
    if (step % config.log_every == 0 || step + 1 == config.steps) {
      TrainLogRow row{step, loss, batch.masked_rate()};
      result.log.push_back(row);
      if (callback) callback(row);
    }
  }
  if (config.ema_decay > 0.0) {
    std::transform(ema.begin(), ema.end(), net.params().begin(), [](double v) { return static_cast<float>(v); });
  }
  return result;
}

TrainResult train_on_dataset(const Dataset& dataset, const TrainingProcess& process,
                             const ConvNetConfig& net_config, const TrainConfig& config,
                             const TrainCallback& callback) {
  std::vector<TrainingPair> pairs;
  for (auto i : dataset.manifest.train) {
    pairs.push_back({&dataset.records.at(i).velocity, &dataset.records.at(i).seismogram});
  }
  return train(pairs, process, net_config, config, callback);
}

void write_train_log(const std::filesystem::path& path, const std::vector<TrainLogRow>& log) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(9);
  out << "step,loss,masked_flag_rate\n";
  for (const auto& r : log) out << r.step << ',' << r.loss << ',' << r.masked_flag_rate << '\n';
}

TrainResult train_gaussian_toy(const GaussianToyJoint& joint, const NoiseSchedule& schedule,
                               const ConvNetConfig& net_config, const ToyTaskConfig& config,
                               const TrainCallback& callback) {
  if (net_config.cond_channels != 0) throw ParameterError("toy task network takes no conditioning");
  if (config.steps == 0 || config.batch_size == 0) throw ParameterError("toy task needs steps and batch");
  TrainResult result{ConvNet<float>(net_config), {}};
  auto& net = result.net;
  Adam<float> adam(config.adam, net.param_count());
  const Shape shape{1, config.size, config.size};
  const double sd = std::sqrt(joint.prior_var);
  std::vector<float> grad;
  std::vector<TrainExample<float>> batch(config.batch_size);
  for (std::size_t step = 0; step < config.steps; ++step) {
    Rng rng = make_rng(config.seed, step, "toy");
    for (auto& ex : batch) {
      Field c0 = normal_field(shape, rng);
      for (auto& v : c0.values()) v = joint.prior_mean + sd * v;
      Field c1 = lincomb(1.0, c0, joint.noise_scale, normal_field(shape, rng));
      ex.node = static_cast<std::size_t>(uniform_int(rng, 1, static_cast<long long>(schedule.n_steps)));
      const Field c_t = sample_bridge_point(c0, c1, ex.node, schedule, rng);
      ex.input = to_float(c_t);
      ex.target = to_float(c0);
      ex.weight = 1.0;
    }
    const double loss =
        loss_and_gradient(net, batch, config.size, config.size, grad, static_cast<long long>(step));
    adam.step(net.params(), grad);
    TrainLogRow row{step, loss, 0.0};
    result.log.push_back(row);
    if (callback) callback(row);
  }
  return result;
}

double toy_oracle_deviation(const ConvNet<float>& net, const GaussianOracle& oracle,
                            const std::vector<std::size_t>& nodes, const std::vector<double>& grid,
                            std::size_t size, std::size_t repeats, std::uint64_t seed) {
  const auto& joint = oracle.joint();
  const std::size_t center = (size / 2) * size + size / 2;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const std::size_t node = nodes[k];
    const NodeVariances nv = variances_at(oracle.schedule(), node);
    const double w1 = posterior_weights(nv.fwd, nv.bwd).second;
    const double post_var = (nv.fwd + nv.bwd) > 0.0 ? nv.fwd * nv.bwd / (nv.fwd + nv.bwd) : 0.0;
    const double marginal_sd =
        std::sqrt(joint.prior_var + w1 * w1 * joint.noise_scale * joint.noise_scale + post_var);
    Rng rng = make_rng(seed, k, "toy-eval");
    for (double x : grid) {
      for (std::size_t r = 0; r < repeats; ++r) {
        std::vector<float> in(size * size);
        for (auto& v : in) v = static_cast<float>(joint.prior_mean + marginal_sd * standard_normal(rng));
        in[center] = static_cast<float>(x);
        const auto out = net.forward(in, size, size, node);
        const double d = out[center] - oracle.conditional_mean(x, node);
        sum += d * d;
        ++count;
      }
    }
  }
  return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

}  // namespace bfwi
