#include "bfwi/evaluation.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "bfwi/errors.hpp"
#include "bfwi/metrics.hpp"
#include "bfwi/parallel.hpp"
#include "bfwi/random.hpp"

namespace bfwi {

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::i2sb: return "i2sb";
    case SamplerKind::csgm: return "csgm";
    case SamplerKind::supervised: return "supervised";
    case SamplerKind::identity: return "identity";
  }
  return "?";
}

SamplerKind sampler_kind_from_string(const std::string& name) {
  for (auto k : {SamplerKind::i2sb, SamplerKind::csgm, SamplerKind::supervised, SamplerKind::identity}) {
    if (to_string(k) == name) return k;
  }
  throw ParameterError("unknown sampler kind '" + name + "'");
}

MetricSummary summarize(const std::vector<double>& v) {
  MetricSummary s;
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return s;
}

Field initial_guess(const Field& c0, std::size_t record, const DistortionParams& distortion, std::uint64_t seed) {
  Rng rng = make_rng(seed, record, "initial-guess");
  return distort(c0, distortion, rng).c1;
}

Field reconstruct(const EvalModel& model, const SamplerSpec& spec, const Field& c1, const Field& d_obs,
                  std::uint64_t seed) {
  SamplingConfig cfg = spec.sampling;
  cfg.seed = seed;
  switch (spec.kind) {
    case SamplerKind::identity:
      return c1;
    case SamplerKind::i2sb:
      if (model.denoiser == nullptr || model.bridge == nullptr) {
        throw ParameterError("bridge sampler needs a denoiser and a bridge schedule");
      }
      return sample(*model.denoiser, c1, d_obs, *model.bridge, cfg).final;
    case SamplerKind::csgm:
      if (model.denoiser == nullptr || model.csgm == nullptr) {
        throw ParameterError("cSGM sampler needs a denoiser and a cosine schedule");
      }
      return csgm_sample(*model.denoiser, d_obs, c1, *model.csgm, cfg);
    case SamplerKind::supervised: {
      if (model.denoiser == nullptr) throw ParameterError("supervised sampler needs a denoiser");
      const std::size_t n = model.bridge != nullptr ? model.bridge->n_steps : 0;
      if (n == 0) throw ParameterError("supervised sampler needs the node count of its schedule");
      return model.denoiser->predict(c1, n, d_obs);
    }
  }
  throw ParameterError("unknown sampler");
}

namespace {

std::vector<std::size_t> eval_indices(const Dataset& ds, std::size_t max_records) {
  std::vector<std::size_t> idx = ds.manifest.validation;
  if (idx.empty()) throw ParameterError("validation split is empty");
  if (max_records > 0 && idx.size() > max_records) idx.resize(max_records);
  return idx;
}

}  // namespace

std::vector<MetricReport> evaluate(const EvalModel& model, const Dataset& dataset,
                                   const std::vector<SamplerSpec>& specs, const EvalOptions& options) {
  validate(options.distortion);
  const auto idx = eval_indices(dataset, options.max_records);
  std::vector<Field> guesses(idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    guesses[j] = initial_guess(dataset.records.at(idx[j]).velocity, idx[j], options.distortion, options.seed);
  }
  std::vector<MetricReport> reports;
  for (const auto& spec : specs) {
    const bool stochastic = spec.kind == SamplerKind::i2sb && spec.sampling.mode == SamplingMode::stochastic;
    const std::size_t repeats = stochastic ? std::max<std::size_t>(1, spec.repeats) : 1;
    MetricReport rep;
    rep.spec = spec;
    rep.spec.repeats = repeats;
    rep.dataset_tag = options.dataset_tag;
    rep.records.resize(idx.size());
    parallel_for(idx.size(), options.threads, [&](std::size_t j) {
      const auto& rec = dataset.records.at(idx[j]);
      RecordMetrics m;
      m.record = idx[j];
      const std::uint64_t base = derive_seed(spec.sampling.seed, idx[j], "sample");
      for (std::size_t r = 0; r < repeats; ++r) {
        const Field out = reconstruct(model, spec, guesses[j], rec.seismogram, derive_seed(base, r, "repeat"));
        m.mae += mae(out, rec.velocity);
        m.mse += mse(out, rec.velocity);
        m.ssim += ssim(out, rec.velocity);
      }
      const double inv = 1.0 / static_cast<double>(repeats);
      m.mae *= inv;
      m.mse *= inv;
      m.ssim *= inv;
      rep.records[j] = m;
    });
    std::vector<double> a, b, c;
    for (const auto& m : rep.records) {
      a.push_back(m.mae);
      b.push_back(m.mse);
      c.push_back(m.ssim);
    }
    rep.mae = summarize(a);
    rep.mse = summarize(b);
    rep.ssim = summarize(c);
    reports.push_back(std::move(rep));
  }
  return reports;
}

void write_reports_csv(const std::filesystem::path& path, const std::vector<MetricReport>& reports) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(9);
  out << "dataset,label,sampler,mode,nfe,eta,repeats,count,mae,mae_se,mse,mse_se,ssim,ssim_se\n";
  for (const auto& r : reports) {
    out << r.dataset_tag << ',' << r.spec.label << ',' << to_string(r.spec.kind) << ','
        << to_string(r.spec.sampling.mode) << ',' << r.spec.sampling.nfe << ',' << r.spec.sampling.guidance_eta
        << ',' << r.spec.repeats << ',' << r.count() << ',' << r.mae.mean << ',' << r.mae.se << ','
        << r.mse.mean << ',' << r.mse.se << ',' << r.ssim.mean << ',' << r.ssim.se << '\n';
  }
}

std::string format_report_table(const std::vector<MetricReport>& reports) {
  std::ostringstream os;
  os << std::left << std::setw(28) << "method" << std::setw(16) << "dataset" << std::right << std::setw(18)
     << "MAE" << std::setw(18) << "MSE" << std::setw(18) << "SSIM" << '\n';
  auto cell = [](const MetricSummary& s) {
    std::ostringstream c;
    c << std::fixed << std::setprecision(4) << s.mean << " +- " << s.se;
    return c.str();
  };
  for (const auto& r : reports) {
    os << std::left << std::setw(28) << r.spec.label << std::setw(16) << r.dataset_tag << std::right
       << std::setw(18) << cell(r.mae) << std::setw(18) << cell(r.mse) << std::setw(18) << cell(r.ssim) << '\n';
  }
  return os.str();
}

DiversityResult guidance_diversity(const EvalModel& model, const Dataset& dataset, SamplingConfig sampling,
                                   double eta, std::size_t records, std::size_t guesses,
                                   const EvalOptions& options) {
  if (guesses < 2) throw ParameterError("diversity needs at least two guesses per record");
  const auto idx = eval_indices(dataset, records);
  sampling.guidance_eta = eta;
  const SamplerSpec spec{"diversity", SamplerKind::i2sb, sampling, 1};
  DiversityResult res;
  res.eta = eta;
  res.per_record.resize(idx.size());
  parallel_for(idx.size(), options.threads, [&](std::size_t j) {
    const auto& rec = dataset.records.at(idx[j]);
    std::vector<Field> outs;
    for (std::size_t g = 0; g < guesses; ++g) {
      const Field c1 = initial_guess(rec.velocity, idx[j], options.distortion, derive_seed(options.seed, g, "guess"));
      outs.push_back(reconstruct(model, spec, c1, rec.seismogram,
                                 derive_seed(derive_seed(sampling.seed, idx[j], "sample"), g, "guess")));
    }
    const std::size_t n = outs.front().size();
    double total = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
      double mean = 0.0;
      for (const auto& o : outs) mean += o[q];
      mean /= static_cast<double>(guesses);
      double ss = 0.0;
      for (const auto& o : outs) ss += (o[q] - mean) * (o[q] - mean);
      total += ss / static_cast<double>(guesses - 1);
    }
    res.per_record[j] = total / static_cast<double>(n);
  });
  res.summary = summarize(res.per_record);
  return res;
}

void write_diversity_csv(const std::filesystem::path& path, const std::vector<DiversityResult>& results) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(9) << "eta,records,mean_pixel_variance,se\n";
  for (const auto& r : results) {
    out << r.eta << ',' << r.per_record.size() << ',' << r.summary.mean << ',' << r.summary.se << '\n';
  }
}

}  // namespace bfwi
