#include "presort/net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "presort/error.hpp"

namespace presort {

namespace {

constexpr double kBnEpsilon = 1e-5;
constexpr double kBnMomentum = 0.1;

std::string block_prefix(int b) { return "block" + std::to_string(b); }

template <typename T>
void fill_uniform(std::vector<T>& v, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& x : v) x = static_cast<T>(dist(rng));
}

}  // namespace

// ---------------------------------------------------------------------------
// NetConfig

std::vector<NetConfig::Shape> NetConfig::block_shapes() const {
  std::vector<Shape> shapes;
  int h = input_height, w = input_width;
  for (int c : channels) {
    const int ch = (h + 2 * pad - kernel) / stride + 1;
    const int cw = (w + 2 * pad - kernel) / stride + 1;
    h = ch / pool;
    w = cw / pool;
    shapes.push_back({c, h, w});
  }
  return shapes;
}

int NetConfig::flatten_size() const {
  const auto shapes = block_shapes();
  if (shapes.empty()) return input_height * input_width;
  const auto& s = shapes.back();
  return s.channels * s.height * s.width;
}

void NetConfig::validate() const {
  if (input_height <= 0 || input_width <= 0) throw ConfigError("network input must be non-empty");
  if (channels.empty()) throw ConfigError("network needs at least one hidden block");
  for (int c : channels) {
    if (c <= 0) throw ConfigError("channel counts must be positive");
  }
  if (kernel <= 0 || pad < 0 || pool <= 0) throw ConfigError("kernel/pad/pool must be positive");
  if (stride != 1) throw ConfigError("only stride 1 convolutions are supported");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (head == HeadKind::softmax && num_classes < 2) throw ConfigError("softmax head needs >= 2 classes");
  for (const auto& s : block_shapes()) {
    if (s.height <= 0 || s.width <= 0) {
      throw ConfigError("input " + std::to_string(input_height) + "x" + std::to_string(input_width) +
                        " is too small for " + std::to_string(channels.size()) + " pooling blocks");
    }
  }
}

NetConfig binary_variant(NetConfig cfg) {
  cfg.head = HeadKind::sigmoid;
  cfg.num_classes = 2;
  cfg.use_batchnorm = false;
  cfg.use_dropout = false;
  return cfg;
}

NetConfig multiclass_variant(NetConfig cfg, int num_classes) {
  cfg.head = HeadKind::softmax;
  cfg.num_classes = num_classes;
  cfg.use_batchnorm = true;
  cfg.use_dropout = true;
  return cfg;
}

// ---------------------------------------------------------------------------
// Network

template <typename T>
int Network<T>::add_tensor(std::string name, std::vector<int> shape, bool trainable) {
  Parameter<T> p;
  p.name = std::move(name);
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  p.shape = std::move(shape);
  p.value.assign(n, T{});
  if (trainable) p.grad.assign(n, T{});
  p.trainable = trainable;
  tensors_.push_back(std::move(p));
  return static_cast<int>(tensors_.size()) - 1;
}

template <typename T>
Network<T>::Network(NetConfig cfg, std::uint64_t init_seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(derive_seed(init_seed, {0xc0de}));
  int in_c = 1;
  for (int b = 0; b < cfg_.n_hidden_blocks(); ++b) {
    const int out_c = cfg_.channels[b];
    const int k = cfg_.kernel;
    BlockIndex idx;
    const auto pre = block_prefix(b);
    idx.conv_w = add_tensor(pre + ".conv.weight", {out_c, in_c, k, k}, true);
    idx.conv_b = add_tensor(pre + ".conv.bias", {out_c}, true);
    const double fan_in = static_cast<double>(in_c * k * k);
    fill_uniform(tensors_[idx.conv_w].value, std::sqrt(6.0 / fan_in), rng);  // Kaiming-uniform, ReLU gain
    fill_uniform(tensors_[idx.conv_b].value, 1.0 / std::sqrt(fan_in), rng);
    if (cfg_.use_batchnorm) {
      idx.bn_gamma = add_tensor(pre + ".bn.weight", {out_c}, true);
      idx.bn_beta = add_tensor(pre + ".bn.bias", {out_c}, true);
      idx.bn_mean = add_tensor(pre + ".bn.running_mean", {out_c}, false);
      idx.bn_var = add_tensor(pre + ".bn.running_var", {out_c}, false);
      std::fill(tensors_[idx.bn_gamma].value.begin(), tensors_[idx.bn_gamma].value.end(), T{1});
      std::fill(tensors_[idx.bn_var].value.begin(), tensors_[idx.bn_var].value.end(), T{1});
    }
    blocks_.push_back(idx);
    in_c = out_c;
  }
  head_w_ = add_tensor("head.weight", {cfg_.outputs(), cfg_.flatten_size()}, true);
  head_b_ = add_tensor("head.bias", {cfg_.outputs()}, true);
  init_head(derive_seed(init_seed, {0x4ead}));
}

template <typename T>
void Network<T>::init_head(std::uint64_t seed) {
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(cfg_.flatten_size()));
  fill_uniform(tensors_[head_w_].value, bound, rng);
  fill_uniform(tensors_[head_b_].value, bound, rng);
}

template <typename T>
void Network<T>::replace_head(HeadKind head, int num_classes, std::uint64_t init_seed) {
  cfg_.head = head;
  cfg_.num_classes = head == HeadKind::sigmoid ? 2 : num_classes;
  cfg_.validate();
  const int outputs = cfg_.outputs();
  const int features = cfg_.flatten_size();
  auto& w = tensors_[head_w_];
  w.shape = {outputs, features};
  w.value.assign(static_cast<std::size_t>(outputs) * features, T{});
  w.grad.assign(w.value.size(), T{});
  auto& b = tensors_[head_b_];
  b.shape = {outputs};
  b.value.assign(static_cast<std::size_t>(outputs), T{});
  b.grad.assign(b.value.size(), T{});
  init_head(init_seed);
  cached_train_ = false;
}

template <typename T>
std::vector<std::string> Network<T>::copy_body_from(const Network& src) {
  std::vector<std::string> copied;
  for (const auto& s : src.tensors_) {
    if (s.name.rfind("head.", 0) == 0) continue;
    for (auto& d : tensors_) {
      if (d.name == s.name && d.shape == s.shape) {
        d.value = s.value;
        copied.push_back(d.name);
      }
    }
  }
  return copied;
}

template <typename T>
void Network<T>::assign_values(const Network& other) {
  if (!(other.cfg_ == cfg_)) throw Error("assign_values: network configurations differ");
  for (std::size_t i = 0; i < tensors_.size(); ++i) tensors_[i].value = other.tensors_[i].value;
}

template <typename T>
Parameter<T>& Network<T>::tensor(const std::string& name) {
  for (auto& t : tensors_) {
    if (t.name == name) return t;
  }
  throw Error("no tensor named " + name);
}

template <typename T>
const Parameter<T>& Network<T>::tensor(const std::string& name) const {
  return const_cast<Network*>(this)->tensor(name);
}

template <typename T>
bool Network<T>::has_tensor(const std::string& name) const {
  return std::any_of(tensors_.begin(), tensors_.end(), [&](const auto& t) { return t.name == name; });
}

template <typename T>
void Network<T>::zero_grad() {
  for (auto& t : tensors_) std::fill(t.grad.begin(), t.grad.end(), T{});
}

template <typename T>
std::vector<T> Network<T>::forward(std::span<const T> input, std::size_t batch, Mode mode, Rng* rng) {
  const std::size_t plane_in = static_cast<std::size_t>(cfg_.input_height) * cfg_.input_width;
  if (batch == 0 || input.size() != batch * plane_in) {
    throw Error("forward: expected input of " + std::to_string(batch) + " x " +
                std::to_string(cfg_.input_height) + " x " + std::to_string(cfg_.input_width) + ", got " +
                std::to_string(input.size()) + " values");
  }
  const bool train = mode == Mode::train;
  const bool dropout = train && cfg_.use_dropout && cfg_.dropout > 0.0;
  if (dropout && rng == nullptr) throw Error("forward: dropout in train mode needs an rng");

  batch_ = batch;
  cached_train_ = train;
  cache_.resize(blocks_.size());

  std::vector<T> x(input.begin(), input.end());
  int in_c = 1, h = cfg_.input_height, w = cfg_.input_width;
  const int k = cfg_.kernel, p = cfg_.pad, pool = cfg_.pool;
  const std::size_t B = batch;

  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const BlockIndex& idx = blocks_[b];
    BlockCache& bc = cache_[b];
    const int out_c = cfg_.channels[b];
    const int hp = h + 2 * p, wp = w + 2 * p;
    const int ch = hp - k + 1, cw = wp - k + 1;
    const int oh = ch / pool, ow = cw / pool;
    bc.in_c = in_c, bc.in_h = h, bc.in_w = w, bc.conv_h = ch, bc.conv_w = cw, bc.out_h = oh, bc.out_w = ow;
    const std::size_t pplane = static_cast<std::size_t>(hp) * wp;
    const std::size_t cplane = static_cast<std::size_t>(ch) * cw;
    const std::size_t oplane = static_cast<std::size_t>(oh) * ow;

    // Zero padding.
    bc.padded.assign(B * in_c * pplane, T{});
    for (std::size_t n = 0; n < B; ++n) {
      for (int c = 0; c < in_c; ++c) {
        const T* src = x.data() + (n * in_c + c) * static_cast<std::size_t>(h) * w;
        T* dst = bc.padded.data() + (n * in_c + c) * pplane;
        for (int y = 0; y < h; ++y) std::copy(src + y * w, src + (y + 1) * w, dst + (y + p) * wp + p);
      }
    }

    // Convolution.
    const auto& wt = tensors_[idx.conv_w].value;
    const auto& bias = tensors_[idx.conv_b].value;
    std::vector<T> z(B * out_c * cplane);
    for (std::size_t n = 0; n < B; ++n) {
      for (int co = 0; co < out_c; ++co) {
        T* out = z.data() + (n * out_c + co) * cplane;
        std::fill(out, out + cplane, bias[co]);
        for (int ci = 0; ci < in_c; ++ci) {
          const T* in = bc.padded.data() + (n * in_c + ci) * pplane;
          const T* kw = wt.data() + (static_cast<std::size_t>(co) * in_c + ci) * k * k;
          for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
              const T wv = kw[ky * k + kx];
              for (int oy = 0; oy < ch; ++oy) {
                const T* irow = in + (oy + ky) * wp + kx;
                T* orow = out + oy * cw;
                for (int ox = 0; ox < cw; ++ox) orow[ox] += wv * irow[ox];
              }
            }
          }
        }
      }
    }

    // Batch normalization.
    if (cfg_.use_batchnorm) {
      auto& gamma = tensors_[idx.bn_gamma].value;
      auto& beta = tensors_[idx.bn_beta].value;
      auto& rmean = tensors_[idx.bn_mean].value;
      auto& rvar = tensors_[idx.bn_var].value;
      if (train) {
        bc.xhat.resize(z.size());
        bc.inv_std.resize(out_c);
      }
      const double m = static_cast<double>(B * cplane);
      for (int c = 0; c < out_c; ++c) {
        double mean, var;
        if (train) {
          double s = 0.0;
          for (std::size_t n = 0; n < B; ++n) {
            const T* v = z.data() + (n * out_c + c) * cplane;
            for (std::size_t i = 0; i < cplane; ++i) s += v[i];
          }
          mean = s / m;
          double sq = 0.0;
          for (std::size_t n = 0; n < B; ++n) {
            const T* v = z.data() + (n * out_c + c) * cplane;
            for (std::size_t i = 0; i < cplane; ++i) sq += (v[i] - mean) * (v[i] - mean);
          }
          var = sq / m;
          const double unbiased = m > 1.0 ? sq / (m - 1.0) : var;
          rmean[c] = static_cast<T>((1.0 - kBnMomentum) * rmean[c] + kBnMomentum * mean);
          rvar[c] = static_cast<T>((1.0 - kBnMomentum) * rvar[c] + kBnMomentum * unbiased);
        } else {
          mean = rmean[c];
          var = rvar[c];
        }
        const double inv = 1.0 / std::sqrt(var + kBnEpsilon);
        if (train) bc.inv_std[c] = static_cast<T>(inv);
        for (std::size_t n = 0; n < B; ++n) {
          T* v = z.data() + (n * out_c + c) * cplane;
          T* xh = train ? bc.xhat.data() + (n * out_c + c) * cplane : nullptr;
          for (std::size_t i = 0; i < cplane; ++i) {
            const T nv = static_cast<T>((v[i] - mean) * inv);
            if (xh) xh[i] = nv;
            v[i] = gamma[c] * nv + beta[c];
          }
        }
      }
    }

    // ReLU.
    for (auto& v : z) v = v > T{} ? v : T{};
    // Max pooling.
    std::vector<T> pooled(B * out_c * oplane);
    if (train) bc.argmax.assign(pooled.size(), 0);
    for (std::size_t nc = 0; nc < B * out_c; ++nc) {
      const T* a = z.data() + nc * cplane;
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          std::uint32_t best = static_cast<std::uint32_t>(oy * pool * cw + ox * pool);
          T best_v = a[best];
          for (int dy = 0; dy < pool; ++dy) {
            for (int dx = 0; dx < pool; ++dx) {
              const auto i = static_cast<std::uint32_t>((oy * pool + dy) * cw + ox * pool + dx);
              if (a[i] > best_v) best_v = a[i], best = i;
            }
          }
          const std::size_t o = nc * oplane + static_cast<std::size_t>(oy) * ow + ox;
          pooled[o] = best_v;
          if (train) bc.argmax[o] = best;
        }
      }
    }
    if (train) bc.activ = std::move(z);

    // Dropout (inverted).
    bc.drop_mask.clear();
    if (dropout) {
      const double keep = 1.0 - cfg_.dropout;
      std::bernoulli_distribution bern(keep);
      bc.drop_mask.resize(pooled.size());
      for (std::size_t i = 0; i < pooled.size(); ++i) {
        bc.drop_mask[i] = bern(*rng) ? static_cast<T>(1.0 / keep) : T{};
        pooled[i] *= bc.drop_mask[i];
      }
    }

    x = std::move(pooled);
    in_c = out_c, h = oh, w = ow;
  }

  // Dense head.
  const int O = cfg_.outputs();
  const std::size_t F = static_cast<std::size_t>(cfg_.flatten_size());
  const auto& hw = tensors_[head_w_].value;
  const auto& hb = tensors_[head_b_].value;
  logits_.assign(B * O, T{});
  for (std::size_t n = 0; n < B; ++n) {
    const T* f = x.data() + n * F;
    for (int o = 0; o < O; ++o) {
      const T* row = hw.data() + static_cast<std::size_t>(o) * F;
      double acc = hb[o];
      for (std::size_t i = 0; i < F; ++i) acc += static_cast<double>(row[i]) * f[i];
      logits_[n * O + o] = static_cast<T>(acc);
    }
  }
  if (train) features_ = std::move(x);

  std::vector<T> probs(logits_.size());
  if (cfg_.head == HeadKind::sigmoid) {
    for (std::size_t i = 0; i < probs.size(); ++i) {
      const double zv = logits_[i];
      probs[i] = static_cast<T>(zv >= 0 ? 1.0 / (1.0 + std::exp(-zv)) : std::exp(zv) / (1.0 + std::exp(zv)));
    }
  } else {
    for (std::size_t n = 0; n < B; ++n) {
      const T* zr = logits_.data() + n * O;
      const double mx = *std::max_element(zr, zr + O);
      double sum = 0.0;
      for (int o = 0; o < O; ++o) sum += std::exp(zr[o] - mx);
      for (int o = 0; o < O; ++o) probs[n * O + o] = static_cast<T>(std::exp(zr[o] - mx) / sum);
    }
  }
  return probs;
}

template <typename T>
void Network<T>::backward(std::span<const T> grad_logits) {
  if (!cached_train_) throw Error("backward: needs a preceding train-mode forward");
  const std::size_t B = batch_;
  const int O = cfg_.outputs();
  const std::size_t F = static_cast<std::size_t>(cfg_.flatten_size());
  if (grad_logits.size() != B * O) throw Error("backward: gradient shape mismatch");

  auto& hw = tensors_[head_w_];
  auto& hb = tensors_[head_b_];
  std::vector<T> dx(B * F, T{});
  for (std::size_t n = 0; n < B; ++n) {
    const T* f = features_.data() + n * F;
    T* df = dx.data() + n * F;
    for (int o = 0; o < O; ++o) {
      const T g = grad_logits[n * O + o];
      if (g == T{}) continue;
      hb.grad[o] += g;
      T* gw = hw.grad.data() + static_cast<std::size_t>(o) * F;
      const T* wv = hw.value.data() + static_cast<std::size_t>(o) * F;
      for (std::size_t i = 0; i < F; ++i) {
        gw[i] += g * f[i];
        df[i] += g * wv[i];
      }
    }
  }

  const int k = cfg_.kernel, p = cfg_.pad;
  for (std::size_t bi = blocks_.size(); bi-- > 0;) {
    const BlockIndex& idx = blocks_[bi];
    const BlockCache& bc = cache_[bi];
    const int out_c = cfg_.channels[bi];
    const int in_c = bc.in_c;
    const int ch = bc.conv_h, cw = bc.conv_w;
    const int hp = bc.in_h + 2 * p, wp = bc.in_w + 2 * p;
    const std::size_t cplane = static_cast<std::size_t>(ch) * cw;
    const std::size_t oplane = static_cast<std::size_t>(bc.out_h) * bc.out_w;
    const std::size_t pplane = static_cast<std::size_t>(hp) * wp;

    if (!bc.drop_mask.empty()) {
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= bc.drop_mask[i];
    }
    // Unpool + ReLU.
    std::vector<T> dz(B * out_c * cplane, T{});
    for (std::size_t nc = 0; nc < B * out_c; ++nc) {
      for (std::size_t o = 0; o < oplane; ++o) {
        const std::size_t src = nc * oplane + o;
        const std::size_t dst = nc * cplane + bc.argmax[src];
        if (bc.activ[dst] > T{}) dz[dst] += dx[src];
      }
    }

    if (cfg_.use_batchnorm) {
      auto& gamma = tensors_[idx.bn_gamma];
      auto& beta = tensors_[idx.bn_beta];
      const double m = static_cast<double>(B * cplane);
      for (int c = 0; c < out_c; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t n = 0; n < B; ++n) {
          const T* g = dz.data() + (n * out_c + c) * cplane;
          const T* xh = bc.xhat.data() + (n * out_c + c) * cplane;
          for (std::size_t i = 0; i < cplane; ++i) {
            sum_dy += g[i];
            sum_dy_xhat += static_cast<double>(g[i]) * xh[i];
          }
        }
        gamma.grad[c] += static_cast<T>(sum_dy_xhat);
        beta.grad[c] += static_cast<T>(sum_dy);
        const double scale = gamma.value[c] * static_cast<double>(bc.inv_std[c]) / m;
        for (std::size_t n = 0; n < B; ++n) {
          T* g = dz.data() + (n * out_c + c) * cplane;
          const T* xh = bc.xhat.data() + (n * out_c + c) * cplane;
          for (std::size_t i = 0; i < cplane; ++i) {
            g[i] = static_cast<T>(scale * (m * g[i] - sum_dy - xh[i] * sum_dy_xhat));
          }
        }
      }
    }

    // Convolution.
    auto& wt = tensors_[idx.conv_w];
    auto& bias = tensors_[idx.conv_b];
    const bool need_input_grad = bi > 0;
    std::vector<T> dpad(need_input_grad ? B * in_c * pplane : 0, T{});
    for (std::size_t n = 0; n < B; ++n) {
      for (int co = 0; co < out_c; ++co) {
        const T* g = dz.data() + (n * out_c + co) * cplane;
        double bsum = 0.0;
        for (std::size_t i = 0; i < cplane; ++i) bsum += g[i];
        bias.grad[co] += static_cast<T>(bsum);
        for (int ci = 0; ci < in_c; ++ci) {
          const T* in = bc.padded.data() + (n * in_c + ci) * pplane;
          const std::size_t woff = (static_cast<std::size_t>(co) * in_c + ci) * k * k;
          T* dpi = need_input_grad ? dpad.data() + (n * in_c + ci) * pplane : nullptr;
          for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
              const T wv = wt.value[woff + ky * k + kx];
              T acc{};
              for (int oy = 0; oy < ch; ++oy) {
                const T* irow = in + (oy + ky) * wp + kx;
                const T* grow = g + oy * cw;
                T row_acc{};
                for (int ox = 0; ox < cw; ++ox) row_acc += grow[ox] * irow[ox];
                acc += row_acc;
                if (dpi) {
                  T* drow = dpi + (oy + ky) * wp + kx;
                  for (int ox = 0; ox < cw; ++ox) drow[ox] += wv * grow[ox];
                }
              }
              wt.grad[woff + ky * k + kx] += acc;
            }
          }
        }
      }
    }

    if (need_input_grad) {
      const int h = bc.in_h, w = bc.in_w;
      dx.assign(B * in_c * static_cast<std::size_t>(h) * w, T{});
      for (std::size_t nc = 0; nc < B * in_c; ++nc) {
        const T* src = dpad.data() + nc * pplane;
        T* dst = dx.data() + nc * static_cast<std::size_t>(h) * w;
        for (int y = 0; y < h; ++y) std::copy(src + (y + p) * wp + p, src + (y + p) * wp + p + w, dst + y * w);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Losses

template <typename T>
LossGrad<T> bce_loss(std::span<const T> p, std::span<const T> y) {
  if (p.size() != y.size() || p.empty()) throw Error("bce_loss: size mismatch");
  LossGrad<T> out;
  out.grad.resize(p.size());
  const double inv_n = 1.0 / static_cast<double>(p.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pc = std::clamp(static_cast<double>(p[i]), kProbClamp, 1.0 - kProbClamp);
    const double yi = y[i];
    total += -(yi * std::log(pc) + (1.0 - yi) * std::log(1.0 - pc));
    out.grad[i] = static_cast<T>((-yi / pc + (1.0 - yi) / (1.0 - pc)) * inv_n);
  }
  out.value = total * inv_n;
  return out;
}

template <typename T>
LossGrad<T> bce_loss_logits(std::span<const T> p, std::span<const T> y) {
  LossGrad<T> out = bce_loss(p, y);
  const double inv_n = 1.0 / static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out.grad[i] = static_cast<T>((p[i] - y[i]) * inv_n);
  return out;
}

template <typename T>
LossGrad<T> focal_loss(std::span<const T> q, std::size_t num_classes, std::span<const int> y, double gamma) {
  if (num_classes == 0 || q.size() != y.size() * num_classes || y.empty()) throw Error("focal_loss: size mismatch");
  LossGrad<T> out;
  out.grad.assign(q.size(), T{});
  const double inv_n = 1.0 / static_cast<double>(y.size());
  double total = 0.0;
  for (std::size_t n = 0; n < y.size(); ++n) {
    if (y[n] < 0 || static_cast<std::size_t>(y[n]) >= num_classes) throw Error("focal_loss: label out of range");
    const std::size_t at = n * num_classes + static_cast<std::size_t>(y[n]);
    const double qc = std::clamp(static_cast<double>(q[at]), kProbClamp, 1.0);
    const double one_minus = 1.0 - qc;
    total += -std::pow(one_minus, gamma) * std::log(qc);
    // d/dq [-(1-q)^g log q] = g (1-q)^(g-1) log q - (1-q)^g / q
    const double d_pow =
        gamma == 0.0 || one_minus <= 0.0 ? 0.0 : gamma * std::pow(one_minus, gamma - 1.0) * std::log(qc);
    out.grad[at] = static_cast<T>((d_pow - std::pow(one_minus, gamma) / qc) * inv_n);
  }
  out.value = total * inv_n;
  return out;
}

template <typename T>
LossGrad<T> focal_loss_logits(std::span<const T> q, std::size_t num_classes, std::span<const int> y, double gamma) {
  LossGrad<T> out = focal_loss(q, num_classes, y, gamma);
  const double inv_n = 1.0 / static_cast<double>(y.size());
  std::fill(out.grad.begin(), out.grad.end(), T{});
  for (std::size_t n = 0; n < y.size(); ++n) {
    const std::size_t row = n * num_classes;
    const double qy = q[row + static_cast<std::size_t>(y[n])];
    const double qc = std::clamp(qy, kProbClamp, 1.0);
    const double one_minus = 1.0 - qy;
    // dL/dq_y * q_y, written without dividing by q_y.
    const double d_pow =
        gamma == 0.0 || one_minus <= 0.0 ? 0.0 : gamma * std::pow(one_minus, gamma - 1.0) * std::log(qc) * qy;
    const double gq = d_pow - std::pow(one_minus, gamma);
    for (std::size_t j = 0; j < num_classes; ++j) {
      const double delta = j == static_cast<std::size_t>(y[n]) ? 1.0 : 0.0;
      out.grad[row + j] = static_cast<T>(gq * (delta - q[row + j]) * inv_n);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Adam and schedule

template <typename T>
void Adam<T>::set_learning_rate(double lr) {
  if (!(lr > 0.0)) throw Error("learning rate must be > 0");
  cfg_.learning_rate = lr;
}

template <typename T>
void Adam<T>::step(std::vector<Parameter<T>>& tensors) {
  if (m_.size() != tensors.size()) {
    m_.assign(tensors.size(), {});
    v_.assign(tensors.size(), {});
  }
  for (const auto& t : tensors) {
    if (!t.trainable) continue;
    for (T g : t.grad) {
      if (std::isnan(static_cast<double>(g))) throw Error("adam_step: NaN gradient in tensor " + t.name);
    }
  }
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    auto& t = tensors[i];
    if (!t.trainable) continue;
    if (m_[i].size() != t.numel()) {
      m_[i].assign(t.numel(), 0.0);
      v_[i].assign(t.numel(), 0.0);
    }
    for (std::size_t j = 0; j < t.numel(); ++j) {
      const double g = t.grad[j];
      m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g;
      v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m_[i][j] / bc1;
      const double vhat = v_[i][j] / bc2;
      t.value[j] = static_cast<T>(t.value[j] - cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon));
    }
  }
}

double lr_schedule(int epoch, double base_lr, int step_epochs, double decay) {
  if (epoch < 0) throw Error("lr_schedule: epoch must be >= 0");
  if (step_epochs <= 0) throw Error("lr_schedule: step must be positive");
  return base_lr * std::pow(decay, epoch / step_epochs);
}

template class Network<float>;
template class Network<double>;
template class Adam<float>;
template class Adam<double>;

template LossGrad<float> bce_loss(std::span<const float>, std::span<const float>);
template LossGrad<double> bce_loss(std::span<const double>, std::span<const double>);
template LossGrad<float> bce_loss_logits(std::span<const float>, std::span<const float>);
template LossGrad<double> bce_loss_logits(std::span<const double>, std::span<const double>);
template LossGrad<float> focal_loss(std::span<const float>, std::size_t, std::span<const int>, double);
template LossGrad<double> focal_loss(std::span<const double>, std::size_t, std::span<const int>, double);
template LossGrad<float> focal_loss_logits(std::span<const float>, std::size_t, std::span<const int>, double);
template LossGrad<double> focal_loss_logits(std::span<const double>, std::size_t, std::span<const int>, double);

}  // namespace presort
