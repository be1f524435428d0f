#include "bfwi/convnet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Core>

#include "bfwi/errors.hpp"
#include "bfwi/random.hpp"

namespace bfwi {

void validate(const ConvNetConfig& c) {
  if (c.depth < 1) throw ParameterError("convnet depth must be at least 1");
  if (c.widths.size() != c.depth + 1) {
    throw ParameterError("convnet needs depth + 1 widths, got " + std::to_string(c.widths.size()));
  }
  if (c.groups == 0) throw ParameterError("convnet group count must be positive");
  for (auto w : c.widths) {
    if (w == 0) throw ParameterError("convnet widths must be positive");
    if (w % c.groups != 0) {
      throw ParameterError("convnet width " + std::to_string(w) + " is not divisible by " +
                           std::to_string(c.groups) + " groups");
    }
  }
  if (c.time_dim == 0 || c.time_dim % 2 != 0) throw ParameterError("time_dim must be even and positive");
  if (c.n_steps == 0) throw ParameterError("n_steps must be positive");
}

std::vector<double> time_embedding(std::size_t node, std::size_t n_steps, std::size_t dim) {
  const double tau = 1000.0 * static_cast<double>(node) / static_cast<double>(n_steps);
  const std::size_t half = dim / 2;
  std::vector<double> e(dim);
  for (std::size_t k = 0; k < half; ++k) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(k) / static_cast<double>(half));
    e[k] = std::sin(tau * freq);
    e[half + k] = std::cos(tau * freq);
  }
  return e;
}

namespace {

using detail::BlockSpec;
using detail::ConvSpec;

template <class T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Allocator that leaves new elements uninitialized; scratch buffers here are
/// always fully overwritten.
template <class T>
struct NoInit : std::allocator<T> {
  template <class U>
  struct rebind {
    using other = NoInit<U>;
  };
  using std::allocator<T>::allocator;
  template <class U>
  void construct(U* p) noexcept {
    ::new (static_cast<void*>(p)) U;
  }
  template <class U, class... A>
  void construct(U* p, A&&... a) {
    ::new (static_cast<void*>(p)) U(std::forward<A>(a)...);
  }
};

template <class T>
using Buf = std::vector<T, NoInit<T>>;

template <class T>
void im2col(const T* x, std::size_t cin, std::size_t H, std::size_t W, T* cols) {
  const std::size_t hw = H * W;
  for (std::size_t ci = 0; ci < cin; ++ci) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        T* dst = cols + (ci * 9 + static_cast<std::size_t>(ky * 3 + kx)) * hw;
        for (std::size_t i = 0; i < H; ++i) {
          const long ii = static_cast<long>(i) + ky - 1;
          T* row = dst + i * W;
          if (ii < 0 || ii >= static_cast<long>(H)) {
            std::fill(row, row + W, T(0));
            continue;
          }
          const T* src = x + (ci * H + static_cast<std::size_t>(ii)) * W;
          if (kx == 0) {
            row[0] = T(0);
            std::copy(src, src + W - 1, row + 1);
          } else if (kx == 1) {
            std::copy(src, src + W, row);
          } else {
            std::copy(src + 1, src + W, row);
            row[W - 1] = T(0);
          }
        }
      }
    }
  }
}

template <class T>
Buf<T> conv_forward(const ConvSpec& s, const T* p, const Buf<T>& x, std::size_t H,
                            std::size_t W, typename ConvNetWorkspace<T>::Conv& cache) {
  const std::size_t hw = H * W;
  const std::size_t k = s.cin * 9;
  cache.height = H;
  cache.width = W;
  cache.cols.resize(k * hw);
  im2col(x.data(), s.cin, H, W, cache.cols.data());
  Buf<T> out(s.cout * hw);
  Eigen::Map<const MatR<T>> w(p + s.w, static_cast<Eigen::Index>(s.cout), static_cast<Eigen::Index>(k));
  Eigen::Map<const MatR<T>> c(cache.cols.data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(hw));
  Eigen::Map<MatR<T>> o(out.data(), static_cast<Eigen::Index>(s.cout), static_cast<Eigen::Index>(hw));
  o.noalias() = w * c;
  if (s.bias) {
    for (std::size_t co = 0; co < s.cout; ++co) {
      const T b = p[s.b + co];
      T* row = out.data() + co * hw;
      for (std::size_t q = 0; q < hw; ++q) row[q] += b;
    }
  }
  return out;
}

/// Returns d(input) unless want_input is false.
template <class T>
Buf<T> conv_backward(const ConvSpec& s, const T* p, const typename ConvNetWorkspace<T>::Conv& cache,
                             const Buf<T>& dout, T* grad, bool want_input) {
  const std::size_t hw = cache.height * cache.width;
  const std::size_t k = s.cin * 9;
  const auto co = static_cast<Eigen::Index>(s.cout);
  const auto kk = static_cast<Eigen::Index>(k);
  const auto n = static_cast<Eigen::Index>(hw);
  Eigen::Map<const MatR<T>> d(dout.data(), co, n);
  Eigen::Map<const MatR<T>> c(cache.cols.data(), kk, n);
  Eigen::Map<MatR<T>> dw(grad + s.w, co, kk);
  dw.noalias() += d * c.transpose();
  if (s.bias) {
    for (std::size_t o = 0; o < s.cout; ++o) {
      const T* row = dout.data() + o * hw;
      T acc = 0;
      for (std::size_t q = 0; q < hw; ++q) acc += row[q];
      grad[s.b + o] += acc;
    }
  }
  if (!want_input) return {};
  // d(input) is the convolution of d(output) with the spatially flipped,
  // channel-transposed kernel.
  const std::size_t k2 = s.cout * 9;
  MatR<T> wf(static_cast<Eigen::Index>(s.cin), static_cast<Eigen::Index>(k2));
  for (std::size_t o = 0; o < s.cout; ++o) {
    for (std::size_t ci = 0; ci < s.cin; ++ci) {
      for (std::size_t t = 0; t < 9; ++t) {
        wf(static_cast<Eigen::Index>(ci), static_cast<Eigen::Index>(o * 9 + 8 - t)) = p[s.w + (o * s.cin + ci) * 9 + t];
      }
    }
  }
  Buf<T> dcols(k2 * hw);
  im2col(dout.data(), s.cout, cache.height, cache.width, dcols.data());
  Buf<T> dx(s.cin * hw);
  Eigen::Map<const MatR<T>> dc(dcols.data(), static_cast<Eigen::Index>(k2), n);
  Eigen::Map<MatR<T>> dxm(dx.data(), static_cast<Eigen::Index>(s.cin), n);
  dxm.noalias() = wf * dc;
  return dx;
}

constexpr double kGnEps = 1e-5;

template <class T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

template <class T>
Buf<T> block_forward(const BlockSpec& s, std::size_t groups, const T* p, const Buf<T>& x,
                             std::size_t H, std::size_t W, const std::vector<T>& emb, std::size_t time_dim,
                             typename ConvNetWorkspace<T>::Block& cache) {
  const std::size_t hw = H * W;
  const std::size_t C = s.conv.cout;
  Buf<T> u = conv_forward(s.conv, p, x, H, W, cache.conv);

  const std::size_t cpg = C / groups;
  const std::size_t n = cpg * hw;
  cache.xhat.resize(C * hw);
  cache.inv_std.resize(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    const T* src = u.data() + g * n;
    double mean = 0.0;
    for (std::size_t q = 0; q < n; ++q) mean += src[q];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
      const double dlt = src[q] - mean;
      var += dlt * dlt;
    }
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + kGnEps);
    cache.inv_std[g] = static_cast<T>(inv);
    T* xh = cache.xhat.data() + g * n;
    for (std::size_t q = 0; q < n; ++q) xh[q] = static_cast<T>((src[q] - mean) * inv);
  }

  cache.pre.resize(C * hw);
  cache.sig.resize(C * hw);
  Buf<T> out(C * hw);
  for (std::size_t c = 0; c < C; ++c) {
    T shift = p[s.t_b + c];
    const T* a = p + s.t_w + c * time_dim;
    for (std::size_t e = 0; e < time_dim; ++e) shift += a[e] * emb[e];
    const T gamma = p[s.gn_gamma + c];
    const T beta = p[s.gn_beta + c] + shift;
    const T* xh = cache.xhat.data() + c * hw;
    T* pre = cache.pre.data() + c * hw;
    T* sig = cache.sig.data() + c * hw;
    T* o = out.data() + c * hw;
    for (std::size_t q = 0; q < hw; ++q) {
      const T v = gamma * xh[q] + beta;
      pre[q] = v;
      sig[q] = sigmoid(v);
      o[q] = v * sig[q];
    }
  }
  if (s.residual) {
    for (std::size_t q = 0; q < out.size(); ++q) out[q] += x[q];
  }
  return out;
}

template <class T>
Buf<T> block_backward(const BlockSpec& s, std::size_t groups, const T* p,
                              const typename ConvNetWorkspace<T>::Block& cache, const Buf<T>& dout,
                              const std::vector<T>& emb, std::size_t time_dim, T* grad) {
  const std::size_t hw = cache.conv.height * cache.conv.width;
  const std::size_t C = s.conv.cout;
  Buf<T> dxhat(C * hw);
  for (std::size_t c = 0; c < C; ++c) {
    const T gamma = p[s.gn_gamma + c];
    const T* pre = cache.pre.data() + c * hw;
    const T* sig = cache.sig.data() + c * hw;
    const T* xh = cache.xhat.data() + c * hw;
    const T* d = dout.data() + c * hw;
    T* dx = dxhat.data() + c * hw;
    T dshift = 0;
    T dgamma = 0;
    for (std::size_t q = 0; q < hw; ++q) {
      const T sg = sig[q];
      const T dv = d[q] * sg * (T(1) + pre[q] * (T(1) - sg));
      dshift += dv;
      dgamma += dv * xh[q];
      dx[q] = dv * gamma;
    }
    grad[s.gn_gamma + c] += dgamma;
    grad[s.gn_beta + c] += dshift;
    grad[s.t_b + c] += dshift;
    T* ga = grad + s.t_w + c * time_dim;
    for (std::size_t e = 0; e < time_dim; ++e) ga[e] += dshift * emb[e];
  }

  const std::size_t cpg = C / groups;
  const std::size_t n = cpg * hw;
  Buf<T> du(C * hw);
  for (std::size_t g = 0; g < groups; ++g) {
    const T* dx = dxhat.data() + g * n;
    const T* xh = cache.xhat.data() + g * n;
    double m1 = 0.0;
    double m2 = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
      m1 += dx[q];
      m2 += static_cast<double>(dx[q]) * xh[q];
    }
    m1 /= static_cast<double>(n);
    m2 /= static_cast<double>(n);
    const double inv = cache.inv_std[g];
    T* o = du.data() + g * n;
    for (std::size_t q = 0; q < n; ++q) o[q] = static_cast<T>(inv * (dx[q] - m1 - xh[q] * m2));
  }

  Buf<T> dx = conv_backward(s.conv, p, cache.conv, du, grad, true);
  if (s.residual) {
    for (std::size_t q = 0; q < dx.size(); ++q) dx[q] += dout[q];
  }
  return dx;
}

template <class T>
Buf<T> avgpool2(const Buf<T>& x, std::size_t C, std::size_t H, std::size_t W) {
  const std::size_t h = H / 2, w = W / 2;
  Buf<T> out(C * h * w);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < h; ++i) {
      const T* r0 = x.data() + (c * H + 2 * i) * W;
      const T* r1 = r0 + W;
      T* o = out.data() + (c * h + i) * w;
      for (std::size_t j = 0; j < w; ++j) {
        o[j] = T(0.25) * (r0[2 * j] + r0[2 * j + 1] + r1[2 * j] + r1[2 * j + 1]);
      }
    }
  }
  return out;
}

template <class T>
Buf<T> avgpool2_backward(const Buf<T>& d, std::size_t C, std::size_t H, std::size_t W) {
  const std::size_t h = H / 2, w = W / 2;
  Buf<T> dx(C * H * W);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < h; ++i) {
      const T* src = d.data() + (c * h + i) * w;
      T* r0 = dx.data() + (c * H + 2 * i) * W;
      T* r1 = r0 + W;
      for (std::size_t j = 0; j < w; ++j) {
        const T v = T(0.25) * src[j];
        r0[2 * j] = v;
        r0[2 * j + 1] = v;
        r1[2 * j] = v;
        r1[2 * j + 1] = v;
      }
    }
  }
  return dx;
}

/// Nearest 2x upsampling of `x` (C x h x w), followed by `skip` channels.
template <class T>
Buf<T> upsample_concat(const Buf<T>& x, std::size_t C, std::size_t h, std::size_t w,
                               const Buf<T>& skip) {
  const std::size_t H = 2 * h, W = 2 * w;
  Buf<T> out(C * H * W + skip.size());
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < H; ++i) {
      const T* src = x.data() + (c * h + i / 2) * w;
      T* o = out.data() + (c * H + i) * W;
      for (std::size_t j = 0; j < W; ++j) o[j] = src[j / 2];
    }
  }
  std::copy(skip.begin(), skip.end(), out.begin() + static_cast<std::ptrdiff_t>(C * H * W));
  return out;
}

template <class T>
Buf<T> upsample_backward(const T* d, std::size_t C, std::size_t h, std::size_t w) {
  const std::size_t H = 2 * h, W = 2 * w;
  Buf<T> dx(C * h * w, T(0));
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < H; ++i) {
      const T* src = d + (c * H + i) * W;
      T* o = dx.data() + (c * h + i / 2) * w;
      for (std::size_t j = 0; j < W; ++j) o[j / 2] += src[j];
    }
  }
  return dx;
}

}  // namespace

template <class T>
ConvNet<T>::ConvNet(ConvNetConfig config) : config_(std::move(config)) {
  validate(config_);
  const auto& w = config_.widths;
  stem_ = add_conv("stem", 1 + config_.cond_channels, w[0], true);
  for (std::size_t i = 0; i < config_.depth; ++i) {
    enc_.push_back(add_block("enc" + std::to_string(i), i == 0 ? w[0] : w[i - 1], w[i]));
  }
  for (std::size_t m = 0; m < config_.mid_blocks; ++m) {
    mid_.push_back(add_block("mid" + std::to_string(m), m == 0 ? w[config_.depth - 1] : w[config_.depth],
                             w[config_.depth]));
  }
  dec_.resize(config_.depth);
  for (std::size_t r = config_.depth; r-- > 0;) {
    const std::size_t below = (r + 1 == config_.depth && config_.mid_blocks == 0) ? w[r] : w[r + 1];
    dec_[r] = add_block("dec" + std::to_string(r), below + w[r], w[r]);
  }
  head_ = add_conv("head", w[0], 1, true);

  params_.assign(params_.size(), T(0));
  Rng rng(config_.param_seed);
  auto fill_uniform = [&](std::size_t off, std::size_t n, double bound) {
    for (std::size_t q = 0; q < n; ++q) params_[off + q] = static_cast<T>(uniform_real(rng, -bound, bound));
  };
  for (const auto& e : layout_) {
    if (e.name.ends_with(".gn_gamma")) {
      std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(e.offset), e.size, T(1));
    }
  }
  auto init_conv = [&](const ConvSpec& s) { fill_uniform(s.w, s.cout * s.cin * 9, 1.0 / std::sqrt(9.0 * s.cin)); };
  auto init_block = [&](const BlockSpec& b) {
    init_conv(b.conv);
    fill_uniform(b.t_w, b.conv.cout * config_.time_dim, 1.0 / std::sqrt(static_cast<double>(config_.time_dim)));
  };
  init_conv(stem_);
  for (const auto& b : enc_) init_block(b);
  for (const auto& b : mid_) init_block(b);
  for (std::size_t r = config_.depth; r-- > 0;) init_block(dec_[r]);
  // With the state skip a zero head starts the net at c0_hat = c_t.
  if (!config_.state_skip) init_conv(head_);
}

template <class T>
std::size_t ConvNet<T>::add_entry(const std::string& name, std::size_t size) {
  const std::size_t off = params_.size();
  layout_.push_back({name, off, size});
  params_.resize(off + size);
  return off;
}

template <class T>
detail::ConvSpec ConvNet<T>::add_conv(const std::string& name, std::size_t cin, std::size_t cout, bool bias) {
  ConvSpec s;
  s.cin = cin;
  s.cout = cout;
  s.bias = bias;
  s.w = add_entry(name + ".weight", cout * cin * 9);
  if (bias) s.b = add_entry(name + ".bias", cout);
  return s;
}

template <class T>
detail::BlockSpec ConvNet<T>::add_block(const std::string& name, std::size_t cin, std::size_t cout) {
  BlockSpec b;
  // Group norm follows the conv, so a conv bias would be redundant.
  b.conv = add_conv(name + ".conv", cin, cout, false);
  b.gn_gamma = add_entry(name + ".gn_gamma", cout);
  b.gn_beta = add_entry(name + ".gn_beta", cout);
  b.t_w = add_entry(name + ".time_weight", cout * config_.time_dim);
  b.t_b = add_entry(name + ".time_bias", cout);
  b.residual = cin == cout;
  return b;
}

template <class T>
const ParamEntry& ConvNet<T>::entry(const std::string& name) const {
  for (const auto& e : layout_) {
    if (e.name == name) return e;
  }
  throw IndexError("no parameter named " + name);
}

template <class T>
std::vector<T> ConvNet<T>::forward(std::span<const T> input, std::size_t H, std::size_t W, std::size_t node,
                                   ConvNetWorkspace<T>& ws) const {
  const std::size_t factor = std::size_t{1} << config_.depth;
  if (H == 0 || W == 0 || H % factor != 0 || W % factor != 0) {
    throw ShapeError("convnet input " + std::to_string(H) + "x" + std::to_string(W) +
                     " is not divisible by " + std::to_string(factor));
  }
  if (input.size() != input_channels() * H * W) {
    throw ShapeError("convnet expects " + std::to_string(input_channels()) + " input channels");
  }
  const T* p = params_.data();
  const auto& w = config_.widths;
  const std::size_t G = config_.groups;
  const std::size_t E = config_.time_dim;
  ws.height = H;
  ws.width = W;
  const auto emb = time_embedding(node, config_.n_steps, E);
  ws.emb.assign(emb.begin(), emb.end());
  ws.enc.resize(enc_.size());
  ws.mid.resize(mid_.size());
  ws.dec.resize(dec_.size());

  const Buf<T> x(input.begin(), input.end());
  const Buf<T> stem_out = conv_forward(stem_, p, x, H, W, ws.stem);
  Buf<T> h = stem_out;
  std::vector<Buf<T>> skips(config_.depth);
  std::size_t hh = H, ww = W, ch = w[0];
  for (std::size_t i = 0; i < config_.depth; ++i) {
    h = block_forward(enc_[i], G, p, h, hh, ww, ws.emb, E, ws.enc[i]);
    ch = w[i];
    skips[i] = h;
    h = avgpool2(h, ch, hh, ww);
    hh /= 2;
    ww /= 2;
  }
  for (std::size_t m = 0; m < mid_.size(); ++m) {
    h = block_forward(mid_[m], G, p, h, hh, ww, ws.emb, E, ws.mid[m]);
    ch = mid_[m].conv.cout;
  }
  for (std::size_t r = config_.depth; r-- > 0;) {
    h = upsample_concat(h, ch, hh, ww, skips[r]);
    hh *= 2;
    ww *= 2;
    h = block_forward(dec_[r], G, p, h, hh, ww, ws.emb, E, ws.dec[r]);
    ch = w[r];
  }
  for (std::size_t q = 0; q < h.size(); ++q) h[q] += stem_out[q];
  const Buf<T> out = conv_forward(head_, p, h, H, W, ws.head);
  std::vector<T> result(out.begin(), out.end());
  if (config_.state_skip) {
    for (std::size_t q = 0; q < result.size(); ++q) result[q] += input[q];
  }
  return result;
}

template <class T>
std::vector<T> ConvNet<T>::forward(std::span<const T> input, std::size_t H, std::size_t W,
                                   std::size_t node) const {
  ConvNetWorkspace<T> ws;
  return forward(input, H, W, node, ws);
}

template <class T>
void ConvNet<T>::backward(ConvNetWorkspace<T>& ws, std::span<const T> grad_output, std::span<T> grad) const {
  if (grad.size() != params_.size()) throw ShapeError("gradient buffer size mismatch");
  if (grad_output.size() != ws.height * ws.width) throw ShapeError("output gradient size mismatch");
  const T* p = params_.data();
  T* g = grad.data();
  const auto& w = config_.widths;
  const std::size_t G = config_.groups;
  const std::size_t E = config_.time_dim;

  const Buf<T> dout(grad_output.begin(), grad_output.end());
  Buf<T> dz = conv_backward(head_, p, ws.head, dout, g, true);
  Buf<T> dstem = dz;
  Buf<T> dh = std::move(dz);
  std::vector<Buf<T>> dskips(config_.depth);
  std::size_t hh = ws.height, ww = ws.width;
  for (std::size_t r = 0; r < config_.depth; ++r) {
    Buf<T> dcat = block_backward(dec_[r], G, p, ws.dec[r], dh, ws.emb, E, g);
    const std::size_t below = dec_[r].conv.cin - w[r];
    const std::size_t plane = hh * ww;
    dskips[r].assign(dcat.begin() + static_cast<std::ptrdiff_t>(below * plane), dcat.end());
    dh = upsample_backward(dcat.data(), below, hh / 2, ww / 2);
    hh /= 2;
    ww /= 2;
  }
  for (std::size_t m = mid_.size(); m-- > 0;) {
    dh = block_backward(mid_[m], G, p, ws.mid[m], dh, ws.emb, E, g);
  }
  for (std::size_t i = config_.depth; i-- > 0;) {
    dh = avgpool2_backward(dh, w[i], hh * 2, ww * 2);
    hh *= 2;
    ww *= 2;
    for (std::size_t q = 0; q < dh.size(); ++q) dh[q] += dskips[i][q];
    dh = block_backward(enc_[i], G, p, ws.enc[i], dh, ws.emb, E, g);
  }
  for (std::size_t q = 0; q < dh.size(); ++q) dstem[q] += dh[q];
  conv_backward(stem_, p, ws.stem, dstem, g, false);
}

template class ConvNet<float>;
template class ConvNet<double>;

template <class T>
double loss_and_gradient(const ConvNet<T>& net, const std::vector<TrainExample<T>>& batch, std::size_t H,
                         std::size_t W, std::vector<T>& grad, long long step) {
  if (batch.empty()) throw ParameterError("empty training batch");
  grad.assign(net.param_count(), T(0));
  const double hw = static_cast<double>(H * W);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  ConvNetWorkspace<T> ws;
  std::vector<T> dout(H * W);
  for (const auto& ex : batch) {
    if (ex.target.size() != H * W) throw ShapeError("training target has wrong size");
    const std::vector<T> out = net.forward(ex.input, H, W, ex.node, ws);
    double sq = 0.0;
    const double scale = 2.0 * ex.weight * inv_b / hw;
    for (std::size_t q = 0; q < out.size(); ++q) {
      const double r = static_cast<double>(out[q]) - static_cast<double>(ex.target[q]);
      sq += r * r;
      dout[q] = static_cast<T>(scale * r);
    }
    loss += ex.weight * sq / hw * inv_b;
    if (ex.weight != 0.0) net.backward(ws, dout, grad);
  }
  if (!std::isfinite(loss)) throw NumericalError("training loss is not finite", step);
  return loss;
}

template <class T>
double batch_loss(const ConvNet<T>& net, const std::vector<TrainExample<T>>& batch, std::size_t H,
                  std::size_t W) {
  double loss = 0.0;
  for (const auto& ex : batch) {
    const std::vector<T> out = net.forward(ex.input, H, W, ex.node);
    double sq = 0.0;
    for (std::size_t q = 0; q < out.size(); ++q) {
      const double r = static_cast<double>(out[q]) - static_cast<double>(ex.target[q]);
      sq += r * r;
    }
    loss += ex.weight * sq / static_cast<double>(H * W);
  }
  return loss / static_cast<double>(batch.size());
}

template double loss_and_gradient(const ConvNet<float>&, const std::vector<TrainExample<float>>&,
                                  std::size_t, std::size_t, std::vector<float>&, long long);
template double loss_and_gradient(const ConvNet<double>&, const std::vector<TrainExample<double>>&,
                                  std::size_t, std::size_t, std::vector<double>&, long long);
template double batch_loss(const ConvNet<float>&, const std::vector<TrainExample<float>>&, std::size_t,
                           std::size_t);
template double batch_loss(const ConvNet<double>&, const std::vector<TrainExample<double>>&, std::size_t,
                           std::size_t);

template <class T>
void Adam<T>::step(std::span<T> params, std::span<const T> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw ShapeError("adam size mismatch");
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double lr = config_.lr;
  for (std::size_t q = 0; q < m_.size(); ++q) {
    const double gq = grad[q];
    m_[q] = b1 * m_[q] + (1.0 - b1) * gq;
    v_[q] = b2 * v_[q] + (1.0 - b2) * gq * gq;
    const double mh = m_[q] / c1;
    const double vh = v_[q] / c2;
    params[q] = static_cast<T>(params[q] - lr * mh / (std::sqrt(vh) + config_.eps));
  }
}

template class Adam<float>;
template class Adam<double>;

template <class T>
std::vector<T> pack_input(const Field& c_t, const Field& cond, std::size_t cond_channels) {
  if (c_t.channels() != 1) throw ShapeError("c_t must have one channel, got " + c_t.shape().str());
  const std::size_t hw = c_t.height() * c_t.width();
  std::vector<T> in((1 + cond_channels) * hw, T(0));
  std::transform(c_t.values().begin(), c_t.values().end(), in.begin(), [](double v) { return static_cast<T>(v); });
  if (!cond.empty()) {
    if (cond.channels() != cond_channels || cond.height() != c_t.height() || cond.width() != c_t.width()) {
      throw ShapeError("conditioning shape " + cond.shape().str() + " does not match " +
                       std::to_string(cond_channels) + " channels of " + c_t.shape().str());
    }
    std::transform(cond.values().begin(), cond.values().end(), in.begin() + static_cast<std::ptrdiff_t>(hw),
                   [](double v) { return static_cast<T>(v); });
  }
  return in;
}

template std::vector<float> pack_input(const Field&, const Field&, std::size_t);
template std::vector<double> pack_input(const Field&, const Field&, std::size_t);

Field ConvNetDenoiser::predict(const Field& c_t, std::size_t node, const Field& cond) const {
  const auto in = pack_input<float>(c_t, cond, cond_channels());
  const auto out = net_->forward(in, c_t.height(), c_t.width(), node);
  Field f(Shape{1, c_t.height(), c_t.width()});
  std::copy(out.begin(), out.end(), f.values().begin());
  return f;
}

}  // namespace bfwi
