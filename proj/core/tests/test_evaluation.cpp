#include "doctest.h"

#include <cmath>
#include <fstream>

#include "bfwi/denoiser.hpp"
#include "bfwi/errors.hpp"
#include "bfwi/evaluation.hpp"
#include "bfwi/metrics.hpp"
#include "test_util.hpp"

using namespace bfwi;

namespace {

/// Validation-only dataset of smooth random models; seismograms are noise.
Dataset toy_dataset(std::size_t n) {
  Dataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    DatasetRecord r;
    r.velocity = testing::random_field({1, 16, 16}, i);
    for (auto& v : r.velocity.values()) v = 0.5 * std::tanh(v);
    r.seismogram = testing::random_field({2, 16, 16}, 100 + i);
    ds.records.push_back(std::move(r));
    ds.manifest.validation.push_back(i);
  }
  return ds;
}

}  // namespace

TEST_CASE("summary statistics") {
  const MetricSummary s = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(s.mean == 2.5);
  CHECK(s.se == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(summarize({7.0}).se == 0.0);
  CHECK(summarize({}).mean == 0.0);
}

TEST_CASE("identity sampler reports the distortion of the initial guess") {
  const Dataset ds = toy_dataset(6);
  EvalOptions opts;
  opts.distortion = distortion_preset("in_distribution");
  const auto reps = evaluate(EvalModel{}, ds, {SamplerSpec{"id", SamplerKind::identity, {}, 1}}, opts);
  REQUIRE(reps.size() == 1);
  CHECK(reps[0].count() == 6);
  for (const auto& m : reps[0].records) {
    const auto& v = ds.records[m.record].velocity;
    const Field c1 = initial_guess(v, m.record, opts.distortion, opts.seed);
    CHECK(m.mae == doctest::Approx(mae(c1, v)));
    CHECK(m.ssim == doctest::Approx(ssim(c1, v)));
    CHECK(m.mse > 0.0);
  }
  opts.max_records = 2;
  CHECK(evaluate(EvalModel{}, ds, {SamplerSpec{"id", SamplerKind::identity, {}, 1}}, opts)[0].count() == 2);
}

TEST_CASE("evaluation is independent of thread count and seeded") {
  const Dataset ds = toy_dataset(5);
  const NoiseSchedule sched = make_symmetric_schedule(50);
  const GaussianOracle oracle({0.0, 0.25, 0.3}, sched);
  const EvalModel model{&oracle, &sched, nullptr};
  SamplerSpec spec{"stoch", SamplerKind::i2sb, {}, 3};
  spec.sampling.mode = SamplingMode::stochastic;
  spec.sampling.nfe = 10;
  EvalOptions opts;
  opts.threads = 1;
  const auto a = evaluate(model, ds, {spec}, opts);
  opts.threads = 3;
  const auto b = evaluate(model, ds, {spec}, opts);
  for (std::size_t j = 0; j < 5; ++j) CHECK(a[0].records[j].mse == b[0].records[j].mse);
  CHECK(a[0].spec.repeats == 3);
  spec.sampling.seed = 1;
  CHECK(evaluate(model, ds, {spec}, opts)[0].mse.mean != a[0].mse.mean);
  spec.sampling.mode = SamplingMode::deterministic_mean;
  CHECK(evaluate(model, ds, {spec}, opts)[0].spec.repeats == 1);
}

TEST_CASE("reconstruct dispatches and checks its model") {
  const Field c1 = testing::random_field({1, 8, 8}, 1);
  const Field d = testing::random_field({2, 8, 8}, 2);
  CHECK(reconstruct(EvalModel{}, SamplerSpec{"id", SamplerKind::identity, {}, 1}, c1, d, 0) == c1);
  CHECK_THROWS_AS(reconstruct(EvalModel{}, SamplerSpec{"b", SamplerKind::i2sb, {}, 1}, c1, d, 0), ParameterError);
  CHECK_THROWS_AS(reconstruct(EvalModel{}, SamplerSpec{"c", SamplerKind::csgm, {}, 1}, c1, d, 0), ParameterError);
  const NoiseSchedule sched = make_symmetric_schedule(20);
  const GaussianOracle oracle({0.0, 1.0, 1.0}, sched);
  const EvalModel model{&oracle, &sched, nullptr};
  const Field sup = reconstruct(model, SamplerSpec{"s", SamplerKind::supervised, {}, 1}, c1, d, 0);
  CHECK(sup == oracle.predict(c1, 20, Field{}));
  CHECK(sampler_kind_from_string("csgm") == SamplerKind::csgm);
  CHECK_THROWS_AS(sampler_kind_from_string("vae"), ParameterError);
}

TEST_CASE("diversity grows with the spread of initial guesses") {
  const Dataset ds = toy_dataset(3);
  const NoiseSchedule sched = make_symmetric_schedule(50);
  const GaussianOracle oracle({0.0, 0.25, 0.3}, sched);
  const EvalModel model{&oracle, &sched, nullptr};
  EvalOptions opts;
  SamplingConfig sc;
  sc.nfe = 10;
  const auto r = guidance_diversity(model, ds, sc, 1.0, 3, 8, opts);
  CHECK(r.per_record.size() == 3);
  CHECK(r.summary.mean > 0.0);
  CHECK_THROWS_AS(guidance_diversity(model, ds, sc, 1.0, 3, 1, opts), ParameterError);
}

TEST_CASE("report writers") {
  const Dataset ds = toy_dataset(2);
  EvalOptions opts;
  opts.dataset_tag = "ood_heavy";
  const auto reps = evaluate(EvalModel{}, ds, {SamplerSpec{"smoothed-input", SamplerKind::identity, {}, 1}}, opts);
  const auto path = testing::scratch_dir("eval") / "m.csv";
  write_reports_csv(path, reps);
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header.rfind("dataset,label,sampler", 0) == 0);
  CHECK(row.rfind("ood_heavy,smoothed-input,identity", 0) == 0);
  const std::string table = format_report_table(reps);
  CHECK(table.find("smoothed-input") != std::string::npos);
  CHECK(table.find("+-") != std::string::npos);
  CHECK_THROWS_AS(evaluate(EvalModel{}, Dataset{}, {}, opts), ParameterError);
}
