#include "bfwi/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "bfwi/errors.hpp"

namespace bfwi {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

using nlohmann::json;

namespace {

constexpr char kMagic[5] = {'B', 'F', 'W', 'I', '1'};

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in, const std::string& what) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw FormatError("checkpoint truncated in " + what);
  return v;
}

json network_to_json(const ConvNetConfig& c) {
  return json{{"widths", c.widths},         {"depth", c.depth},   {"time_dim", c.time_dim},
              {"cond_channels", c.cond_channels}, {"n_steps", c.n_steps}, {"groups", c.groups},
              {"mid_blocks", c.mid_blocks}, {"param_seed", c.param_seed},
              {"state_skip", c.state_skip}};
}

ConvNetConfig network_from_json(const json& j) {
  ConvNetConfig c;
  c.widths = j.at("widths").get<std::vector<std::size_t>>();
  c.depth = j.at("depth").get<std::size_t>();
  c.time_dim = j.at("time_dim").get<std::size_t>();
  c.cond_channels = j.at("cond_channels").get<std::size_t>();
  c.n_steps = j.at("n_steps").get<std::size_t>();
  c.groups = j.at("groups").get<std::size_t>();
  c.mid_blocks = j.at("mid_blocks").get<std::size_t>();
  c.param_seed = j.at("param_seed").get<std::uint64_t>();
  c.state_skip = j.value("state_skip", false);
  return c;
}

}  // namespace

std::shared_ptr<const ConvNet<float>> Checkpoint::make_net() const {
  auto net = std::make_shared<ConvNet<float>>(network);
  if (net->param_count() != params.size()) {
    throw FormatError("checkpoint holds " + std::to_string(params.size()) + " parameters, network needs " +
                      std::to_string(net->param_count()));
  }
  std::copy(params.begin(), params.end(), net->params().begin());
  return net;
}

Checkpoint make_checkpoint(const ConvNet<float>& net, const TrainConfig& config, const TrainingProcess& process) {
  Checkpoint c;
  c.network = net.config();
  c.mode = config.mode;
  if (process.bridge != nullptr) c.bridge = *process.bridge;
  if (process.csgm != nullptr) c.csgm = *process.csgm;
  c.train_steps = config.steps;
  c.train_seed = config.seed;
  c.p_uncond = config.p_uncond;
  c.w_cond = config.w_cond;
  c.params.assign(net.params().begin(), net.params().end());
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  json h;
  h["format"] = 1;
  h["network"] = network_to_json(c.network);
  h["mode"] = to_string(c.mode);
  h["train_steps"] = c.train_steps;
  h["seeds"] = {{"train", c.train_seed}, {"param", c.network.param_seed}};
  h["p_uncond"] = c.p_uncond;
  h["w_cond"] = c.w_cond;
  h["param_count"] = c.params.size();
  if (c.bridge) {
    h["schedule"] = {{"kind", "bridge"}, {"n_steps", c.bridge->n_steps}, {"horizon_T", c.bridge->horizon_T}};
  } else if (c.csgm) {
    h["schedule"] = {{"kind", "cosine"},
                     {"n_steps", c.csgm->n_steps()},
                     {"s_offset", c.csgm->alpha_bar.s_offset},
                     {"seismic_channels", c.csgm->cond_layout.seismic_channels}};
  } else {
    throw ParameterError("checkpoint needs a schedule");
  }
  try {
    h["extra"] = json::parse(c.extra_json);
  } catch (const json::exception&) {
    throw ParameterError("checkpoint extra metadata is not valid JSON");
  }
  const std::string header = h.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put(out, static_cast<std::uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  if (c.bridge) {
    put(out, static_cast<std::uint32_t>(c.bridge->n_steps));
    put(out, c.bridge->horizon_T);
    for (double b : c.bridge->beta) put(out, b);
  }
  out.write(reinterpret_cast<const char*>(c.params.data()),
            static_cast<std::streamsize>(c.params.size() * sizeof(float)));
  if (!out) throw IoError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[5];
  if (!in.read(magic, 5) || std::memcmp(magic, kMagic, 5) != 0) {
    throw FormatError(path.string() + " is not a checkpoint (bad magic)");
  }
  const auto len = get<std::uint32_t>(in, "header length");
  std::string header(len, '\0');
  if (!in.read(header.data(), len)) throw FormatError("checkpoint truncated in header");
  Checkpoint c;
  std::size_t count = 0;
  std::string kind;
  try {
    const json h = json::parse(header);
    if (h.at("format").get<int>() != 1) throw FormatError("unsupported checkpoint format");
    c.network = network_from_json(h.at("network"));
    c.mode = train_mode_from_string(h.at("mode").get<std::string>());
    c.train_steps = h.at("train_steps").get<std::size_t>();
    c.train_seed = h.at("seeds").at("train").get<std::uint64_t>();
    c.p_uncond = h.value("p_uncond", 0.0);
    c.w_cond = h.value("w_cond", 0.0);
    count = h.at("param_count").get<std::size_t>();
    c.extra_json = h.contains("extra") ? h["extra"].dump() : "{}";
    const auto& s = h.at("schedule");
    kind = s.at("kind").get<std::string>();
    if (kind == "cosine") {
      c.csgm = make_csgm_state(s.at("seismic_channels").get<std::size_t>(), s.at("n_steps").get<std::size_t>(),
                               s.at("s_offset").get<double>());
    } else if (kind != "bridge") {
      throw FormatError("unknown schedule kind '" + kind + "'");
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": bad checkpoint header: " + e.what());
  }
  if (kind == "bridge") {
    const auto n = get<std::uint32_t>(in, "schedule");
    const auto T = get<double>(in, "schedule");
    std::vector<double> beta(n);
    for (auto& b : beta) b = get<double>(in, "schedule");
    c.bridge = schedule_from_beta(std::move(beta), T);
  }
  c.params.resize(count);
  if (!in.read(reinterpret_cast<char*>(c.params.data()), static_cast<std::streamsize>(count * sizeof(float)))) {
    throw FormatError("checkpoint truncated in parameters");
  }
  return c;
}

}  // namespace bfwi
