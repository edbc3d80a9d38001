// Copyright 2026 ppfwalk contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense network stack: tanh MLP with exact reverse-mode gradients, diagonal
// Gaussian policy head, Adam, a probe-based input-sensitivity estimator, and
// a little-endian checkpoint format. Parameters are 32-bit; all arithmetic
// and accumulation run in 64-bit.

#ifndef PPF_NN_HPP_
#define PPF_NN_HPP_

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppf/rng.hpp"

namespace ppf {

// Multilayer perceptron, tanh hidden activations, identity output.
// Parameters live in one flat float block, layer by layer: W (row-major,
// out x in), then b. This is also the checkpoint layout.
struct Mlp {
  std::vector<int> sizes;     // [input, hidden..., output]
  std::vector<float> params;

  static size_t count_params(const std::vector<int>& sizes) {
    size_t n = 0;
    for (size_t l = 0; l + 1 < sizes.size(); ++l)
      n += static_cast<size_t>(sizes[l + 1]) * sizes[l] + sizes[l + 1];
    return n;
  }

  static Mlp zeros(const std::vector<int>& sizes) {
    if (sizes.size() < 2)
      throw std::invalid_argument("mlp: need at least input and output dims");
    for (int s : sizes)
      if (s <= 0) throw std::invalid_argument("mlp: sizes must be positive");
    Mlp m;
    m.sizes = sizes;
    m.params.assign(count_params(sizes), 0.0f);
    return m;
  }

  static Mlp random(const std::vector<int>& sizes, Rng& rng,
                    double final_scale = 1.0) {
    Mlp m = zeros(sizes);
    size_t off = 0;
    for (size_t l = 0; l + 1 < sizes.size(); ++l) {
      const int in = sizes[l], out = sizes[l + 1];
      const bool last = (l + 2 == sizes.size());
      const double bound =
          std::sqrt(6.0 / (in + out)) * (last ? final_scale : 1.0);
      for (int i = 0; i < out * in; ++i)
        m.params[off + i] = static_cast<float>(rng.uniform(-bound, bound));
      off += static_cast<size_t>(out) * in + out;  // biases stay zero
    }
    return m;
  }

  int input_dim() const { return sizes.front(); }
  int output_dim() const { return sizes.back(); }
  int n_layers() const { return static_cast<int>(sizes.size()) - 1; }

  bool finite() const {
    for (float p : params)
      if (!std::isfinite(p)) return false;
    return true;
  }
};

// Post-activation values per layer; acts[0] is the input.
struct MlpCache {
  std::vector<std::vector<double>> acts;
};

inline std::vector<double> forward(const Mlp& m, std::span<const double> input,
                                   MlpCache* cache = nullptr) {
  if (static_cast<int>(input.size()) != m.input_dim())
    throw std::invalid_argument("mlp forward: input size mismatch");
  std::vector<double> cur(input.begin(), input.end());
  if (cache) {
    cache->acts.clear();
    cache->acts.push_back(cur);
  }
  size_t off = 0;
  for (int l = 0; l < m.n_layers(); ++l) {
    const int in = m.sizes[l], out = m.sizes[l + 1];
    std::vector<double> next(out);
    const float* W = m.params.data() + off;
    const float* b = W + static_cast<size_t>(out) * in;
    for (int i = 0; i < out; ++i) {
      double acc = b[i];
      const float* row = W + static_cast<size_t>(i) * in;
      for (int j = 0; j < in; ++j) acc += static_cast<double>(row[j]) * cur[j];
      next[i] = acc;
    }
    if (l + 1 < m.n_layers())
      for (double& v : next) v = std::tanh(v);
    cur = std::move(next);
    if (cache) cache->acts.push_back(cur);
    off += static_cast<size_t>(out) * in + out;
  }
  return cur;
}

// Exact reverse-mode gradients of the forward map. Accumulates parameter
// gradients into grad (same flat layout as params); optionally returns the
// input gradient.
inline void backward(const Mlp& m, const MlpCache& cache,
                     std::span<const double> dout, std::span<double> grad,
                     std::vector<double>* dinput = nullptr) {
  if (static_cast<int>(dout.size()) != m.output_dim())
    throw std::invalid_argument("mlp backward: dout size mismatch");
  if (grad.size() != m.params.size())
    throw std::invalid_argument("mlp backward: grad size mismatch");
  if (cache.acts.size() != static_cast<size_t>(m.n_layers()) + 1)
    throw std::invalid_argument("mlp backward: stale cache");

  std::vector<double> delta(dout.begin(), dout.end());
  std::vector<size_t> offsets(m.n_layers());
  size_t off = 0;
  for (int l = 0; l < m.n_layers(); ++l) {
    offsets[l] = off;
    off += static_cast<size_t>(m.sizes[l + 1]) * m.sizes[l] + m.sizes[l + 1];
  }

  for (int l = m.n_layers() - 1; l >= 0; --l) {
    const int in = m.sizes[l], out = m.sizes[l + 1];
    const std::vector<double>& a_in = cache.acts[l];
    const float* W = m.params.data() + offsets[l];
    double* dW = grad.data() + offsets[l];
    double* db = dW + static_cast<size_t>(out) * in;
    for (int i = 0; i < out; ++i) {
      const double d = delta[i];
      double* dWrow = dW + static_cast<size_t>(i) * in;
      for (int j = 0; j < in; ++j) dWrow[j] += d * a_in[j];
      db[i] += d;
    }
    if (l > 0 || dinput) {
      std::vector<double> prev(in, 0.0);
      for (int i = 0; i < out; ++i) {
        const double d = delta[i];
        const float* row = W + static_cast<size_t>(i) * in;
        for (int j = 0; j < in; ++j)
          prev[j] += static_cast<double>(row[j]) * d;
      }
      if (l > 0) {
        // Through tanh: a_in holds the post-activation of layer l-1.
        for (int j = 0; j < in; ++j) prev[j] *= 1.0 - a_in[j] * a_in[j];
      } else if (dinput) {
        *dinput = prev;
        break;
      }
      delta = std::move(prev);
    }
  }
}

// Stochastic input-sensitivity estimate: || f(s + eps u) - f(s) ||^2 / eps^2
// with a standard normal probe u. Unbiased for the squared Jacobian
// Frobenius norm as eps -> 0; differentiable through both forward passes.
// When grad is non-empty, the parameter gradient of the estimate is
// accumulated into it.
inline double lipschitz_penalty_probe(const Mlp& m,
                                      std::span<const double> input,
                                      double eps,
                                      std::span<const double> probe,
                                      std::span<double> grad = {}) {
  if (!(eps > 0.0))
    throw std::invalid_argument("lipschitz probe: eps must be > 0");
  if (probe.size() != input.size())
    throw std::invalid_argument("lipschitz probe: probe size mismatch");
  std::vector<double> shifted(input.begin(), input.end());
  for (size_t i = 0; i < shifted.size(); ++i) shifted[i] += eps * probe[i];

  MlpCache c0, c1;
  const std::vector<double> f0 =
      forward(m, input, grad.empty() ? nullptr : &c0);
  const std::vector<double> f1 =
      forward(m, shifted, grad.empty() ? nullptr : &c1);
  double value = 0.0;
  std::vector<double> diff(f1.size());
  for (size_t i = 0; i < f1.size(); ++i) {
    diff[i] = f1[i] - f0[i];
    value += diff[i] * diff[i];
  }
  value /= eps * eps;
  if (!grad.empty()) {
    std::vector<double> dout(diff.size());
    for (size_t i = 0; i < diff.size(); ++i) dout[i] = 2.0 * diff[i] / (eps * eps);
    backward(m, c1, dout, grad);
    for (double& v : dout) v = -v;
    backward(m, c0, dout, grad);
  }
  return value;
}

inline double lipschitz_penalty(const Mlp& m, std::span<const double> input,
                                double eps, Rng& rng,
                                std::span<double> grad = {}) {
  std::vector<double> probe(input.size());
  for (double& p : probe) p = rng.normal();
  return lipschitz_penalty_probe(m, input, eps, probe, grad);
}

// Diagonal Gaussian policy: mean network plus a state-independent learnable
// log standard deviation.
struct GaussianPolicy {
  Mlp mean;
  std::vector<float> log_std;

  static GaussianPolicy create(const std::vector<int>& sizes, Rng& rng,
                               double log_std_init) {
    GaussianPolicy p;
    p.mean = Mlp::random(sizes, rng, 0.01);
    p.log_std.assign(sizes.back(), static_cast<float>(log_std_init));
    return p;
  }

  int act_dim() const { return mean.output_dim(); }
  int obs_dim() const { return mean.input_dim(); }

  bool finite() const {
    if (!mean.finite()) return false;
    for (float v : log_std)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

// Log-density of the diagonal Gaussian at `action` given the mean vector.
inline double gaussian_logprob_from_mean(std::span<const double> mu,
                                         std::span<const float> log_std,
                                         std::span<const double> action) {
  if (mu.size() != action.size() || mu.size() != log_std.size())
    throw std::invalid_argument("gaussian logprob: size mismatch");
  double lp = 0.0;
  for (size_t i = 0; i < mu.size(); ++i) {
    const double ls = log_std[i];
    const double z = (action[i] - mu[i]) / std::exp(ls);
    lp += -0.5 * z * z - ls - 0.5 * kLogTwoPi;
  }
  return lp;
}

inline double gaussian_logprob(const GaussianPolicy& p,
                               std::span<const double> state,
                               std::span<const double> action) {
  const std::vector<double> mu = forward(p.mean, state);
  return gaussian_logprob_from_mean(mu, p.log_std, action);
}

// Sample = mu + sigma * xi with standard normal xi, and its log-density.
inline std::vector<double> gaussian_sample(const GaussianPolicy& p,
                                           std::span<const double> state,
                                           Rng& rng,
                                           double* logprob = nullptr) {
  const std::vector<double> mu = forward(p.mean, state);
  std::vector<double> a(mu.size());
  for (size_t i = 0; i < mu.size(); ++i)
    a[i] = mu[i] + std::exp(static_cast<double>(p.log_std[i])) * rng.normal();
  if (logprob) *logprob = gaussian_logprob_from_mean(mu, p.log_std, a);
  return a;
}

// d logp / d mu and d logp / d log_std at the given point.
inline void gaussian_logprob_grads(std::span<const double> mu,
                                   std::span<const float> log_std,
                                   std::span<const double> action,
                                   std::span<double> dmu,
                                   std::span<double> dlog_std) {
  for (size_t i = 0; i < mu.size(); ++i) {
    const double sigma = std::exp(static_cast<double>(log_std[i]));
    const double z = (action[i] - mu[i]) / sigma;
    dmu[i] = z / sigma;
    dlog_std[i] = z * z - 1.0;
  }
}

// Bias-corrected Adam over one flat float parameter block.
struct Adam {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t t = 0;
  std::vector<double> m, v;

  explicit Adam(size_t n, double lr_ = 3e-4)
      : lr(lr_), m(n, 0.0), v(n, 0.0) {}

  void step(std::vector<float>& params, std::span<const double> grad) {
    if (params.size() != m.size() || grad.size() != m.size())
      throw std::invalid_argument("adam: size mismatch");
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (size_t i = 0; i < m.size(); ++i) {
      const double g = grad[i];
      m[i] = beta1 * m[i] + (1.0 - beta1) * g;
      v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      params[i] = static_cast<float>(static_cast<double>(params[i]) -
                                     lr * mhat / (std::sqrt(vhat) + eps));
    }
  }
};

// ---------------------------------------------------------------------------
// Checkpoint format "PPF1": little-endian, versioned, 32-bit parameter block.
//   magic[4] = "PPF1", u32 version = 1,
//   u32 n_sizes, u32 sizes[n_sizes]            (policy mean architecture)
//   u8 has_value, [u32 n_vsizes, u32 vsizes[]] (value architecture)
//   u64 iteration, u64 seed, u32 variant_len, variant bytes,
//   f32 mean params, f32 log_std[act_dim], [f32 value params]
// ---------------------------------------------------------------------------

struct Checkpoint {
  GaussianPolicy policy;
  bool has_value = false;
  Mlp value;
  uint64_t iteration = 0;
  uint64_t seed = 0;
  std::string variant;
};

namespace detail {

inline void put_u32(std::string& b, uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& b, uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_f32(std::string& b, float v) {
  put_u32(b, std::bit_cast<uint32_t>(v));
}

struct Reader {
  const std::string& buf;
  size_t pos = 0;
  explicit Reader(const std::string& b) : buf(b) {}
  void need(size_t n) const {
    if (pos + n > buf.size())
      throw std::runtime_error("checkpoint: truncated file");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<unsigned char>(buf[pos + i]))
           << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<uint64_t>(static_cast<unsigned char>(buf[pos + i]))
           << (8 * i);
    pos += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  uint8_t u8() {
    need(1);
    return static_cast<uint8_t>(buf[pos++]);
  }
  std::string bytes(size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

inline void put_sizes(std::string& b, const std::vector<int>& sizes) {
  put_u32(b, static_cast<uint32_t>(sizes.size()));
  for (int s : sizes) put_u32(b, static_cast<uint32_t>(s));
}

inline std::vector<int> read_sizes(Reader& r) {
  const uint32_t n = r.u32();
  if (n < 2 || n > 64)
    throw std::runtime_error("checkpoint: architecture mismatch");
  std::vector<int> sizes(n);
  for (uint32_t i = 0; i < n; ++i) {
    const uint32_t s = r.u32();
    if (s == 0 || s > (1u << 20))
      throw std::runtime_error("checkpoint: architecture mismatch");
    sizes[i] = static_cast<int>(s);
  }
  return sizes;
}

}  // namespace detail

inline constexpr uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  if (!ck.policy.finite() || (ck.has_value && !ck.value.finite()))
    throw std::runtime_error("checkpoint: refusing to write non-finite params");
  std::string b;
  b += "PPF1";
  detail::put_u32(b, kCheckpointVersion);
  detail::put_sizes(b, ck.policy.mean.sizes);
  b.push_back(ck.has_value ? 1 : 0);
  if (ck.has_value) detail::put_sizes(b, ck.value.sizes);
  detail::put_u64(b, ck.iteration);
  detail::put_u64(b, ck.seed);
  detail::put_u32(b, static_cast<uint32_t>(ck.variant.size()));
  b += ck.variant;
  for (float p : ck.policy.mean.params) detail::put_f32(b, p);
  for (float p : ck.policy.log_std) detail::put_f32(b, p);
  if (ck.has_value)
    for (float p : ck.value.params) detail::put_f32(b, p);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path);
  out.write(b.data(), static_cast<std::streamsize>(b.size()));
  if (!out) throw std::runtime_error("checkpoint: write failed " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  detail::Reader r(buf);
  if (r.bytes(4) != "PPF1")
    throw std::runtime_error("checkpoint: bad magic");
  if (r.u32() != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version");
  Checkpoint ck;
  ck.policy.mean.sizes = detail::read_sizes(r);
  ck.has_value = r.u8() != 0;
  if (ck.has_value) ck.value.sizes = detail::read_sizes(r);
  ck.iteration = r.u64();
  ck.seed = r.u64();
  const uint32_t vlen = r.u32();
  if (vlen > 256) throw std::runtime_error("checkpoint: bad variant field");
  ck.variant = r.bytes(vlen);
  const size_t n_mean = Mlp::count_params(ck.policy.mean.sizes);
  ck.policy.mean.params.resize(n_mean);
  for (size_t i = 0; i < n_mean; ++i) ck.policy.mean.params[i] = r.f32();
  ck.policy.log_std.resize(ck.policy.mean.sizes.back());
  for (float& v : ck.policy.log_std) v = r.f32();
  if (ck.has_value) {
    const size_t n_val = Mlp::count_params(ck.value.sizes);
    ck.value.params.resize(n_val);
    for (size_t i = 0; i < n_val; ++i) ck.value.params[i] = r.f32();
  }
  if (r.pos != buf.size())
    throw std::runtime_error("checkpoint: trailing bytes");
  return ck;
}

}  // namespace ppf

#endif  // PPF_NN_HPP_
