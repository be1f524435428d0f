#include "doctest.h"

#include <cmath>

#include "bfwi/convnet.hpp"
#include "bfwi/errors.hpp"
#include "test_util.hpp"

using namespace bfwi;

namespace {

ConvNetConfig tiny_config(std::size_t cond = 2) {
  ConvNetConfig c;
  c.widths = {4, 8, 8};
  c.depth = 2;
  c.time_dim = 8;
  c.cond_channels = cond;
  c.n_steps = 100;
  c.groups = 4;
  c.mid_blocks = 2;
  c.param_seed = 3;
  return c;
}

/// Randomize every parameter so that no gradient path is trivially zero.
template <class T>
void scramble(ConvNet<T>& net, std::uint64_t seed, double scale = 0.3) {
  Rng rng(seed);
  for (auto& p : net.params()) p = static_cast<T>(p + scale * standard_normal(rng));
}

template <class T>
std::vector<TrainExample<T>> random_batch(const ConvNet<T>& net, std::size_t H, std::size_t W,
                                          std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TrainExample<T>> batch(n);
  for (std::size_t b = 0; b < n; ++b) {
    batch[b].input.resize(net.input_channels() * H * W);
    for (auto& v : batch[b].input) v = static_cast<T>(standard_normal(rng));
    batch[b].target.resize(H * W);
    for (auto& v : batch[b].target) v = static_cast<T>(standard_normal(rng));
    batch[b].node = static_cast<std::size_t>(uniform_int(rng, 1, 100));
    batch[b].weight = 1.0 + b;
  }
  return batch;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("every layer gradient matches central finite differences") {
  ConvNet<double> net(tiny_config());
  scramble(net, 11);
  const std::size_t H = 8, W = 8;
  const auto batch = random_batch(net, H, W, 2, 5);
  std::vector<double> grad;
  loss_and_gradient(net, batch, H, W, grad);
  const double h = 1e-5;
  for (const auto& e : net.layout()) {
    std::vector<double> g(e.size), fd(e.size);
    for (std::size_t q = 0; q < e.size; ++q) {
      double& p = net.params()[e.offset + q];
      const double saved = p;
      p = saved + h;
      const double up = batch_loss(net, batch, H, W);
      p = saved - h;
      const double down = batch_loss(net, batch, H, W);
      p = saved;
      fd[q] = (up - down) / (2.0 * h);
      g[q] = grad[e.offset + q];
    }
    std::vector<double> diff(e.size), sum(e.size);
    for (std::size_t q = 0; q < e.size; ++q) {
      diff[q] = g[q] - fd[q];
      sum[q] = g[q] + fd[q];
    }
    const double rel = norm(diff) / std::max(norm(sum), 1e-300);
    INFO(e.name << " relative error " << rel << " |g| " << norm(g));
    CHECK(norm(g) > 0.0);
    CHECK(rel < 1e-4);
  }
}

TEST_CASE("input gradient path through the skip and residual connections") {
  // Depth 1 and a single mid block exercise the other branch of the layout.
  ConvNetConfig c = tiny_config(0);
  c.widths = {4, 4};
  c.depth = 1;
  c.mid_blocks = 1;
  ConvNet<double> net(c);
  scramble(net, 2);
  const auto batch = random_batch(net, 4, 6, 1, 1);
  std::vector<double> grad;
  loss_and_gradient(net, batch, 4, 6, grad);
  const auto& e = net.entry("stem.weight");
  for (std::size_t q = 0; q < e.size; q += 5) {
    double& p = net.params()[e.offset + q];
    const double saved = p;
    p = saved + 1e-6;
    const double up = batch_loss(net, batch, 4, 6);
    p = saved - 1e-6;
    const double down = batch_loss(net, batch, 4, 6);
    p = saved;
    CHECK(grad[e.offset + q] == doctest::Approx((up - down) / 2e-6).epsilon(1e-5));
  }
}

TEST_CASE("zero head returns the state, or zero without the state skip") {
  for (bool skip : {true, false}) {
    ConvNetConfig c = tiny_config();
    c.state_skip = skip;
    ConvNet<float> net(c);
    for (const char* name : {"head.weight", "head.bias"}) {
      const auto& e = net.entry(name);
      std::fill_n(net.params().begin() + static_cast<std::ptrdiff_t>(e.offset), e.size, 0.0f);
    }
    std::vector<float> in(3 * 8 * 8, 0.5f);
    for (std::size_t q = 0; q < 64; ++q) in[q] = 0.01f * static_cast<float>(q);
    const auto out = net.forward(in, 8, 8, 10);
    for (std::size_t q = 0; q < 64; ++q) CHECK(out[q] == (skip ? in[q] : 0.0f));
  }
}

TEST_CASE("forward is deterministic and workspace reuse is transparent") {
  ConvNet<float> net(tiny_config());
  scramble(net, 1);
  const Field x = testing::random_field({3, 16, 16}, 4);
  std::vector<float> in(x.values().begin(), x.values().end());
  ConvNetWorkspace<float> ws;
  const auto a = net.forward(in, 16, 16, 42, ws);
  const auto b = net.forward(in, 16, 16, 42);
  const auto c = net.forward(in, 16, 16, 42, ws);
  CHECK(a == b);
  CHECK(a == c);
  CHECK(net.forward(in, 16, 16, 43) != a);
}

TEST_CASE("zero-weight batch gives zero gradient; exact fit gives zero loss") {
  ConvNet<double> net(tiny_config());
  scramble(net, 2);
  auto batch = random_batch(net, 8, 8, 3, 9);
  for (auto& ex : batch) ex.weight = 0.0;
  std::vector<double> grad;
  CHECK(loss_and_gradient(net, batch, 8, 8, grad) == 0.0);
  for (double g : grad) CHECK(g == 0.0);

  for (auto& ex : batch) {
    ex.weight = 2.0;
    ex.target = net.forward(ex.input, 8, 8, ex.node);
  }
  CHECK(loss_and_gradient(net, batch, 8, 8, grad) == 0.0);
  for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("loss is the weighted mean of per-example losses") {
  ConvNet<double> net(tiny_config());
  auto batch = random_batch(net, 8, 8, 3, 10);
  double sum = 0.0;
  for (const auto& ex : batch) {
    const auto out = net.forward(ex.input, 8, 8, ex.node);
    double sq = 0.0;
    for (std::size_t q = 0; q < out.size(); ++q) sq += (out[q] - ex.target[q]) * (out[q] - ex.target[q]);
    sum += ex.weight * sq / 64.0;
  }
  std::vector<double> grad;
  CHECK(loss_and_gradient(net, batch, 8, 8, grad) == doctest::Approx(sum / 3.0).epsilon(1e-12));
  CHECK(batch_loss(net, batch, 8, 8) == doctest::Approx(sum / 3.0).epsilon(1e-12));
}

TEST_CASE("non-finite loss reports the step") {
  ConvNet<double> net(tiny_config());
  auto batch = random_batch(net, 8, 8, 1, 1);
  batch[0].target[0] = std::numeric_limits<double>::infinity();
  std::vector<double> grad;
  try {
    loss_and_gradient(net, batch, 8, 8, grad, 17);
    FAIL("expected divergence");
  } catch (const NumericalError& e) {
    CHECK(e.step() == 17);
  }
}

TEST_CASE("shape checks") {
  ConvNet<float> net(tiny_config());
  CHECK_THROWS_AS(net.forward(std::vector<float>(3 * 6 * 8), 6, 8, 1), ShapeError);
  CHECK_THROWS_AS(net.forward(std::vector<float>(2 * 8 * 8), 8, 8, 1), ShapeError);
  CHECK_THROWS_AS(net.entry("nope"), IndexError);
  CHECK_THROWS_AS(pack_input<float>(Field(2, 4, 4), Field{}, 2), ShapeError);
  CHECK_THROWS_AS(pack_input<float>(Field(1, 4, 4), Field(1, 4, 4), 2), ShapeError);
  ConvNetConfig bad = tiny_config();
  bad.widths = {4, 8};
  CHECK_THROWS_AS(validate(bad), ParameterError);
  bad = tiny_config();
  bad.widths = {4, 6, 8};
  CHECK_THROWS_AS(validate(bad), ParameterError);
  bad = tiny_config();
  bad.time_dim = 7;
  CHECK_THROWS_AS(validate(bad), ParameterError);
}

TEST_CASE("masked conditioning ignores the condition contents") {
  auto net = std::make_shared<ConvNet<float>>(tiny_config());
  scramble(*net, 3);
  ConvNetDenoiser d(net);
  const Field c_t = testing::random_field({1, 8, 8}, 1);
  const Field zeros(2, 8, 8, 0.0);
  CHECK(d.predict(c_t, 5, zeros) == d.predict(c_t, 5, Field{}));
  CHECK(!(d.predict(c_t, 5, testing::random_field({2, 8, 8}, 2)) == d.predict(c_t, 5, zeros)));
  CHECK(d.cond_channels() == 2);
}

TEST_CASE("default network size") {
  ConvNetConfig c;
  c.cond_channels = 3;
  ConvNet<float> net(c);
  CHECK(net.param_count() > 80000);
  CHECK(net.param_count() < 150000);
  std::size_t total = 0;
  for (const auto& e : net.layout()) {
    CHECK(e.offset == total);
    total += e.size;
  }
  CHECK(total == net.param_count());
  ConvNet<float> same(c);
  CHECK(std::equal(net.params().begin(), net.params().end(), same.params().begin()));
  c.param_seed = 1;
  ConvNet<float> other(c);
  CHECK(!std::equal(net.params().begin(), net.params().end(), other.params().begin()));
}

TEST_CASE("time embedding") {
  const auto e0 = time_embedding(0, 1000, 8);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(e0[k] == 0.0);
    CHECK(e0[4 + k] == 1.0);
  }
  const auto e = time_embedding(5, 10, 8);
  CHECK(e[0] == doctest::Approx(std::sin(500.0)));
  CHECK(e[5] == doctest::Approx(std::cos(500.0 * std::exp(-std::log(10000.0) / 4.0))));
  CHECK(time_embedding(50, 100, 8) == time_embedding(500, 1000, 8));
}

TEST_CASE("first adam step moves each parameter by the learning rate") {
  AdamConfig cfg;
  cfg.lr = 0.01;
  Adam<double> adam(cfg, 3);
  std::vector<double> p{1.0, 2.0, 3.0};
  const std::vector<double> g{0.5, -2.0, 0.0};
  adam.step(p, g);
  CHECK(p[0] == doctest::Approx(0.99).epsilon(1e-9));
  CHECK(p[1] == doctest::Approx(2.01).epsilon(1e-9));
  CHECK(p[2] == 3.0);
  CHECK(adam.steps() == 1);
  CHECK_THROWS_AS(adam.step(p, std::vector<double>(2)), ShapeError);
}

TEST_CASE("optimizer fits a single example") {
  ConvNet<float> net(tiny_config(0));
  auto batch = random_batch(net, 8, 8, 1, 3);
  for (auto& t : batch[0].target) t = std::tanh(t);
  Adam<float> adam(AdamConfig{1e-2}, net.param_count());
  std::vector<float> grad;
  const double first = loss_and_gradient(net, batch, 8, 8, grad);
  double last = first;
  for (int s = 0; s < 300; ++s) {
    last = loss_and_gradient(net, batch, 8, 8, grad);
    adam.step(net.params(), grad);
  }
  CHECK(last < 0.05 * first);
}
