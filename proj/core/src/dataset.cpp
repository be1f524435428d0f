#include "bfwi/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "bfwi/errors.hpp"
#include "bfwi/npy.hpp"
#include "bfwi/parallel.hpp"

namespace bfwi {

using nlohmann::json;

Field bilinear_resize(const Field& field, std::size_t height, std::size_t width) {
  if (height == field.height() && width == field.width()) return field;
  if (height == 0 || width == 0 || field.empty()) throw ShapeError("bilinear_resize: empty shape");
  Field out(field.channels(), height, width);
  const double sy = static_cast<double>(field.height()) / static_cast<double>(height);
  const double sx = static_cast<double>(field.width()) / static_cast<double>(width);
  const auto H = static_cast<long>(field.height());
  const auto W = static_cast<long>(field.width());
  for (std::size_t i = 0; i < height; ++i) {
    const double y = std::max(0.0, (static_cast<double>(i) + 0.5) * sy - 0.5);
    const long y0 = std::min(static_cast<long>(y), H - 1);
    const long y1 = std::min(y0 + 1, H - 1);
    const double fy = y - static_cast<double>(y0);
    for (std::size_t j = 0; j < width; ++j) {
      const double x = std::max(0.0, (static_cast<double>(j) + 0.5) * sx - 0.5);
      const long x0 = std::min(static_cast<long>(x), W - 1);
      const long x1 = std::min(x0 + 1, W - 1);
      const double fx = x - static_cast<double>(x0);
      for (std::size_t c = 0; c < field.channels(); ++c) {
        auto at = [&](long a, long b) {
          return field(c, static_cast<std::size_t>(a), static_cast<std::size_t>(b));
        };
        const double top = (1.0 - fx) * at(y0, x0) + fx * at(y0, x1);
        const double bot = (1.0 - fx) * at(y1, x0) + fx * at(y1, x1);
        out(c, i, j) = (1.0 - fy) * top + fy * bot;
      }
    }
  }
  return out;
}

Field preprocess_velocity(const VelocityField& raw, std::pair<double, double> global_range,
                          std::size_t resolution) {
  const auto [lo, hi] = global_range;
  if (!(hi > lo)) throw ParameterError("velocity normalization range is degenerate");
  Field out = bilinear_resize(raw.values, resolution, resolution);
  const double span = hi - lo;
  for (auto& v : out.values()) v = std::clamp((2.0 * v - lo - hi) / span, -1.0, 1.0);
  round_to_float(out);
  return out;
}

Field denormalize_velocity(const Field& normalized, std::pair<double, double> global_range) {
  const auto [lo, hi] = global_range;
  Field out = normalized;
  for (auto& v : out.values()) v = lo + (v + 1.0) * 0.5 * (hi - lo);
  return out;
}

double signed_log(double x, double a) {
  const double y = std::log1p(std::abs(x) / a);
  return x < 0.0 ? -y : y;
}

namespace {

Field log_resized(const Field& raw, double a, std::size_t resolution) {
  Field logged = raw;
  for (auto& v : logged.values()) v = signed_log(v, a);
  return bilinear_resize(logged, resolution, resolution);
}

}  // namespace

SeismicScale fit_seismic_scale(const std::vector<const Field*>& raw_gathers,
                               std::size_t resolution) {
  double peak = 0.0;
  for (const Field* f : raw_gathers) {
    for (double v : f->values()) {
      if (!std::isfinite(v)) throw NumericalError("non-finite seismogram sample", -1);
      peak = std::max(peak, std::abs(v));
    }
  }
  if (!(peak > 0.0)) throw ParameterError("cannot normalize an all-zero seismic dataset");
  SeismicScale s;
  s.log_a = 1e-2 * peak;
  double norm = 0.0;
  for (const Field* f : raw_gathers) {
    const Field y = log_resized(*f, s.log_a, resolution);
    for (double v : y.values()) norm = std::max(norm, std::abs(v));
  }
  if (!(norm > 0.0)) throw ParameterError("seismic dataset normalizes to zero");
  s.norm = norm;
  return s;
}

Field preprocess_seismogram(const Field& raw_gathers, const SeismicScale& scale,
                            std::size_t resolution) {
  for (double v : raw_gathers.values()) {
    if (!std::isfinite(v)) throw NumericalError("non-finite seismogram sample", -1);
  }
  Field out = log_resized(raw_gathers, scale.log_a, resolution);
  for (auto& v : out.values()) v = std::clamp(v / scale.norm, -1.0, 1.0);
  round_to_float(out);
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> make_split(
    std::size_t count, std::uint64_t split_seed, double train_fraction) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
    throw ParameterError("train fraction must lie in [0, 1]");
  }
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(split_seed);
  // Fisher-Yates with an explicit draw so the permutation does not depend on
  // the standard library's shuffle implementation.
  for (std::size_t i = count; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(count) + 1e-9));
  std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> val(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  return {train, val};
}

Dataset build_dataset_in_memory(const std::vector<VelocityField>& fields,
                                const AcquisitionGeometry& geometry, const BuildOptions& options) {
  if (fields.empty()) throw ParameterError("build_dataset: no velocity fields");
  if (!options.sources.empty() && options.sources.size() != fields.size()) {
    throw ParameterError("build_dataset: one source description per field required");
  }
  std::vector<Seismogram> surveys(fields.size());
  parallel_for(fields.size(), options.threads, [&](std::size_t i) {
    try {
      surveys[i] = simulate_survey(fields[i], geometry);
    } catch (const Error& e) {
      throw Error("record " + std::to_string(i) + ": " + e.what());
    }
  });

  double vmin = fields.front().values.min();
  double vmax = fields.front().values.max();
  for (const auto& f : fields) {
    vmin = std::min(vmin, f.values.min());
    vmax = std::max(vmax, f.values.max());
  }
  if (!(vmax > vmin)) vmax = vmin + 1.0;

  std::vector<const Field*> gathers;
  for (const auto& s : surveys) gathers.push_back(&s.data);
  const SeismicScale scale = fit_seismic_scale(gathers, options.resolution);

  Dataset ds;
  ds.records.resize(fields.size());
  parallel_for(fields.size(), options.threads, [&](std::size_t i) {
    auto& r = ds.records[i];
    r.velocity = preprocess_velocity(fields[i], {vmin, vmax}, options.resolution);
    r.seismogram = preprocess_seismogram(surveys[i].data, scale, options.resolution);
    r.raw_velocity_range = {vmin, vmax};
    if (!options.sources.empty()) r.source = options.sources[i];
  });

  auto& m = ds.manifest;
  m.count = fields.size();
  std::tie(m.train, m.validation) = make_split(m.count, options.split_seed, options.train_fraction);
  m.vel_min = vmin;
  m.vel_max = vmax;
  m.seismic = scale;
  m.seismic_channels = geometry.sources.size();
  m.resolution = options.resolution;
  m.split_seed = options.split_seed;
  for (const auto& r : ds.records) m.sources.push_back(r.source);
  return ds;
}

DatasetManifest build_dataset(const std::vector<VelocityField>& fields,
                              const AcquisitionGeometry& geometry,
                              const std::filesystem::path& out_dir, const BuildOptions& options) {
  Dataset ds = build_dataset_in_memory(fields, geometry, options);
  save_dataset(ds, out_dir);
  return ds.manifest;
}

namespace {

json source_to_json(const SourceMeta& s) {
  return json{{"kind", s.kind}, {"family", s.family}, {"seed", s.seed}, {"file", s.file}, {"index", s.index}};
}

SourceMeta source_from_json(const json& j) {
  SourceMeta s;
  s.kind = j.value("kind", "");
  s.family = j.value("family", "");
  s.seed = j.value("seed", std::uint64_t{0});
  s.file = j.value("file", "");
  s.index = j.value("index", std::size_t{0});
  return s;
}

}  // namespace

std::string manifest_to_json(const DatasetManifest& m) {
  json j;
  j["version"] = m.version;
  j["count"] = m.count;
  j["splits"] = {{"train", m.train}, {"validation", m.validation}};
  j["vel_min"] = m.vel_min;
  j["vel_max"] = m.vel_max;
  j["log_a"] = m.seismic.log_a;
  j["seis_norm"] = m.seismic.norm;
  j["seismic_channels"] = m.seismic_channels;
  j["resolution"] = m.resolution;
  j["split_seed"] = m.split_seed;
  j["sources"] = json::array();
  for (const auto& s : m.sources) j["sources"].push_back(source_to_json(s));
  return j.dump(2);
}

DatasetManifest manifest_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest.json: ") + e.what());
  }
  DatasetManifest m;
  try {
    m.version = j.at("version").get<int>();
    if (m.version != kDatasetFormatVersion) {
      throw FormatError("manifest.json: unsupported format version " + std::to_string(m.version));
    }
    m.count = j.at("count").get<std::size_t>();
    m.train = j.at("splits").at("train").get<std::vector<std::size_t>>();
    m.validation = j.at("splits").at("validation").get<std::vector<std::size_t>>();
    m.vel_min = j.at("vel_min").get<double>();
    m.vel_max = j.at("vel_max").get<double>();
    m.seismic.log_a = j.at("log_a").get<double>();
    m.seismic.norm = j.at("seis_norm").get<double>();
    m.seismic_channels = j.value("seismic_channels", std::size_t{0});
    m.resolution = j.value("resolution", kDefaultResolution);
    m.split_seed = j.value("split_seed", std::uint64_t{0});
    if (j.contains("sources")) {
      for (const auto& s : j["sources"]) m.sources.push_back(source_from_json(s));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest.json: ") + e.what());
  }
  for (double v : {m.vel_min, m.vel_max, m.seismic.log_a, m.seismic.norm}) {
    if (!std::isfinite(v)) throw FormatError("manifest.json: non-finite normalization constant");
  }
  std::vector<bool> seen(m.count, false);
  for (const auto* split : {&m.train, &m.validation}) {
    for (auto i : *split) {
      if (i >= m.count || seen[i]) throw FormatError("manifest.json: splits must be disjoint indices < count");
      seen[i] = true;
    }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw FormatError("manifest.json: splits do not cover every record");
  }
  return m;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& m = ds.manifest;
  const std::size_t N = ds.records.size();
  const std::size_t R = m.resolution;
  const std::size_t S = m.seismic_channels;
  std::vector<float> vel;
  std::vector<float> seis;
  vel.reserve(N * R * R);
  seis.reserve(N * S * R * R);
  for (const auto& r : ds.records) {
    if (r.velocity.shape() != Shape{1, R, R} || r.seismogram.shape() != Shape{S, R, R}) {
      throw ShapeError("save_dataset: record shape disagrees with manifest");
    }
    vel.insert(vel.end(), r.velocity.values().begin(), r.velocity.values().end());
    seis.insert(seis.end(), r.seismogram.values().begin(), r.seismogram.values().end());
  }
  write_npy_f32(dir / "velocity.npy", {N, 1, R, R}, std::span<const float>(vel));
  write_npy_f32(dir / "seismogram.npy", {N, S, R, R}, std::span<const float>(seis));
  DatasetManifest copy = m;
  copy.count = N;
  copy.sources.clear();
  for (const auto& r : ds.records) copy.sources.push_back(r.source);
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << manifest_to_json(copy) << "\n";
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("cannot open " + (dir / "manifest.json").string());
  std::stringstream buf;
  buf << in.rdbuf();
  Dataset ds;
  ds.manifest = manifest_from_json(buf.str());
  const auto& m = ds.manifest;
  const NpyArray vel = read_npy(dir / "velocity.npy");
  const NpyArray seis = read_npy(dir / "seismogram.npy");
  const std::size_t R = m.resolution;
  const std::vector<std::size_t> vel_shape{m.count, 1, R, R};
  const std::vector<std::size_t> seis_shape{m.count, m.seismic_channels, R, R};
  if (vel.shape != vel_shape) {
    throw FormatError("velocity.npy: expected shape " + shape_string(vel_shape) + ", got " +
                      shape_string(vel.shape));
  }
  if (seis.shape != seis_shape) {
    throw FormatError("seismogram.npy: expected shape " + shape_string(seis_shape) + ", got " +
                      shape_string(seis.shape));
  }
  const std::size_t vs = R * R;
  const std::size_t ss = m.seismic_channels * R * R;
  ds.records.resize(m.count);
  for (std::size_t i = 0; i < m.count; ++i) {
    auto& r = ds.records[i];
    r.velocity = Field(Shape{1, R, R}, std::vector<double>(vel.data.begin() + static_cast<std::ptrdiff_t>(i * vs),
                                                           vel.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * vs)));
    r.seismogram = Field(Shape{m.seismic_channels, R, R},
                         std::vector<double>(seis.data.begin() + static_cast<std::ptrdiff_t>(i * ss),
                                             seis.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * ss)));
    r.raw_velocity_range = {m.vel_min, m.vel_max};
    if (i < m.sources.size()) r.source = m.sources[i];
  }
  return ds;
}

Dataset import_openfwi(const std::filesystem::path& velocity_npy,
                       const std::filesystem::path& seismogram_npy, const OpenFwiShapes& shapes,
                       std::uint64_t split_seed, double train_fraction) {
  NpyArray vel = read_npy(velocity_npy);
  NpyArray seis = read_npy(seismogram_npy);
  if (vel.shape.size() == 3) vel.shape.insert(vel.shape.begin() + 1, 1);
  const std::size_t N = vel.shape.empty() ? 0 : vel.shape[0];
  const std::vector<std::size_t> vel_expect{N, 1, shapes.velocity_height, shapes.velocity_width};
  const std::vector<std::size_t> seis_expect{N, shapes.shots, shapes.samples, shapes.receivers};
  if (N == 0 || vel.shape != vel_expect) {
    throw FormatError("OpenFWI velocity array " + velocity_npy.string() + " has shape " +
                      shape_string(vel.shape) + ", expected " + shape_string(vel_expect));
  }
  if (seis.shape != seis_expect) {
    throw FormatError("OpenFWI seismogram array " + seismogram_npy.string() + " has shape " +
                      shape_string(seis.shape) + ", expected " + shape_string(seis_expect));
  }

  const std::size_t vs = shapes.velocity_height * shapes.velocity_width;
  const std::size_t ss = shapes.shots * shapes.samples * shapes.receivers;
  const auto [lo_it, hi_it] = std::minmax_element(vel.data.begin(), vel.data.end());
  double vmin = *lo_it;
  double vmax = *hi_it;
  if (!(vmax > vmin)) vmax = vmin + 1.0;

  std::vector<Field> gathers(N);
  std::vector<const Field*> ptrs;
  for (std::size_t i = 0; i < N; ++i) {
    gathers[i] = Field(Shape{shapes.shots, shapes.samples, shapes.receivers},
                       std::vector<double>(seis.data.begin() + static_cast<std::ptrdiff_t>(i * ss),
                                           seis.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * ss)));
    ptrs.push_back(&gathers[i]);
  }
  const SeismicScale scale = fit_seismic_scale(ptrs);

  Dataset ds;
  ds.records.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    VelocityField raw{Field(Shape{1, shapes.velocity_height, shapes.velocity_width},
                            std::vector<double>(vel.data.begin() + static_cast<std::ptrdiff_t>(i * vs),
                                                vel.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * vs))),
                      10.0, 0.0, 0.0};
    auto& r = ds.records[i];
    r.velocity = preprocess_velocity(raw, {vmin, vmax});
    r.seismogram = preprocess_seismogram(gathers[i], scale);
    r.raw_velocity_range = {vmin, vmax};
    r.source = SourceMeta{"imported", "", 0, velocity_npy.filename().string(), i};
  }
  auto& m = ds.manifest;
  m.count = N;
  std::tie(m.train, m.validation) = make_split(N, split_seed, train_fraction);
  m.vel_min = vmin;
  m.vel_max = vmax;
  m.seismic = scale;
  m.seismic_channels = shapes.shots;
  m.resolution = kDefaultResolution;
  m.split_seed = split_seed;
  for (const auto& r : ds.records) m.sources.push_back(r.source);
  return ds;
}

}  // namespace bfwi
