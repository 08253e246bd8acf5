// Copyright 2026 The mdrive Authors
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

#include "mdrive/mlp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "mdrive/error.hpp"

namespace mdrive {
namespace {

constexpr char kMagic[4] = {'M', 'D', 'P', 'O'};
constexpr std::uint32_t kMaxWidth = 1u << 20;

void put_u32(std::ostream& out, std::uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(buf, 4);
}

void put_f64(std::ostream& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(buf, 8);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4)) throw Error(ErrorCode::kParse, "truncated MDPO header");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), 8)) throw Error(ErrorCode::kParse, "truncated MDPO payload");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

template <typename F>
void for_each_array(MlpParams& p, F&& f) {
  for (DenseLayer& l : p.layers) {
    f(l.w);
    f(l.b);
  }
}

}  // namespace

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers) n += l.w.size() + l.b.size();
  return n;
}

std::vector<int> MlpParams::dims() const {
  std::vector<int> d;
  if (layers.empty()) return d;
  d.push_back(layers.front().in);
  for (const DenseLayer& l : layers) d.push_back(l.out);
  return d;
}

MlpParams make_mlp(const std::vector<int>& dims) {
  if (dims.size() < 2) throw Error(ErrorCode::kInvalidArgument, "network needs at least two widths");
  MlpParams p;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    if (dims[i] <= 0 || dims[i + 1] <= 0) throw Error(ErrorCode::kInvalidArgument, "layer width must be positive");
    DenseLayer l;
    l.in = dims[i];
    l.out = dims[i + 1];
    l.w.assign(static_cast<std::size_t>(l.in) * static_cast<std::size_t>(l.out), 0.0);
    l.b.assign(static_cast<std::size_t>(l.out), 0.0);
    p.layers.push_back(std::move(l));
  }
  return p;
}

std::vector<int> two_hidden_dims(int input, int output) {
  return {input, kHiddenUnits, kHiddenUnits, output};
}

MlpParams make_mlp_glorot(const std::vector<int>& dims, Rng& rng, double final_scale) {
  MlpParams p = make_mlp(dims);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    DenseLayer& l = p.layers[i];
    const double limit = std::sqrt(6.0 / (l.in + l.out));
    const double scale = i + 1 == p.layers.size() ? final_scale : 1.0;
    for (double& w : l.w) w = scale * uniform(rng, -limit, limit);
  }
  return p;
}

MlpParams zeros_like(const MlpParams& params) { return make_mlp(params.dims()); }

std::vector<double> mlp_forward(const MlpParams& params, std::span<const double> x, MlpCache& cache) {
  if (params.layers.empty() || x.size() != static_cast<std::size_t>(params.input_dim())) {
    throw Error(ErrorCode::kDimensionMismatch, "network input has " + std::to_string(x.size()) +
                                                   " entries, expected " + std::to_string(params.input_dim()));
  }
  cache.inputs.resize(params.layers.size());
  cache.pre.resize(params.layers.size());
  std::vector<double> h(x.begin(), x.end());
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    const DenseLayer& l = params.layers[li];
    std::vector<double>& z = cache.pre[li];
    z.assign(l.b.begin(), l.b.end());
    for (int r = 0; r < l.out; ++r) {
      const double* row = &l.w[static_cast<std::size_t>(r) * static_cast<std::size_t>(l.in)];
      double acc = 0.0;
      for (int c = 0; c < l.in; ++c) acc += row[c] * h[static_cast<std::size_t>(c)];
      z[static_cast<std::size_t>(r)] += acc;
    }
    cache.inputs[li] = std::move(h);
    h = z;
    if (li + 1 < params.layers.size()) {
      for (double& v : h) v = std::max(v, 0.0);
    }
  }
  return h;
}

std::vector<double> mlp_predict(const MlpParams& params, std::span<const double> x) {
  MlpCache cache;
  return mlp_forward(params, x, cache);
}

std::vector<double> mlp_backward(const MlpParams& params, const MlpCache& cache,
                                 std::span<const double> grad_y, MlpParams& grads) {
  const std::size_t n = params.layers.size();
  if (cache.inputs.size() != n || cache.pre.size() != n) {
    throw Error(ErrorCode::kState, "cache does not match network");
  }
  for (std::size_t li = 0; li < n; ++li) {
    if (cache.inputs[li].size() != static_cast<std::size_t>(params.layers[li].in) ||
        cache.pre[li].size() != static_cast<std::size_t>(params.layers[li].out)) {
      throw Error(ErrorCode::kState, "cache does not match network");
    }
  }
  if (grads.dims() != params.dims()) throw Error(ErrorCode::kDimensionMismatch, "gradient shape mismatch");
  if (grad_y.size() != static_cast<std::size_t>(params.output_dim())) {
    throw Error(ErrorCode::kDimensionMismatch, "output gradient size mismatch");
  }

  std::vector<double> delta(grad_y.begin(), grad_y.end());
  for (std::size_t li = n; li-- > 0;) {
    const DenseLayer& l = params.layers[li];
    DenseLayer& g = grads.layers[li];
    if (li + 1 < n) {
      for (int r = 0; r < l.out; ++r) {
        if (cache.pre[li][static_cast<std::size_t>(r)] <= 0.0) delta[static_cast<std::size_t>(r)] = 0.0;
      }
    }
    const std::vector<double>& in = cache.inputs[li];
    std::vector<double> prev(static_cast<std::size_t>(l.in), 0.0);
    for (int r = 0; r < l.out; ++r) {
      const double d = delta[static_cast<std::size_t>(r)];
      g.b[static_cast<std::size_t>(r)] += d;
      if (d == 0.0) continue;
      const std::size_t base = static_cast<std::size_t>(r) * static_cast<std::size_t>(l.in);
      for (int c = 0; c < l.in; ++c) {
        g.w[base + static_cast<std::size_t>(c)] += d * in[static_cast<std::size_t>(c)];
        prev[static_cast<std::size_t>(c)] += d * l.w[base + static_cast<std::size_t>(c)];
      }
    }
    delta = std::move(prev);
  }
  return delta;
}

std::vector<double> flatten(const MlpParams& params) {
  std::vector<double> out;
  out.reserve(params.parameter_count());
  for (const DenseLayer& l : params.layers) {
    out.insert(out.end(), l.w.begin(), l.w.end());
    out.insert(out.end(), l.b.begin(), l.b.end());
  }
  return out;
}

void unflatten(std::span<const double> flat, MlpParams& params) {
  if (flat.size() != params.parameter_count()) throw Error(ErrorCode::kDimensionMismatch, "flat size mismatch");
  std::size_t k = 0;
  for_each_array(params, [&](std::vector<double>& a) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(k),
              flat.begin() + static_cast<std::ptrdiff_t>(k + a.size()), a.begin());
    k += a.size();
  });
}

void axpy(double scale, const MlpParams& other, MlpParams& params) {
  if (other.dims() != params.dims()) throw Error(ErrorCode::kDimensionMismatch, "shape mismatch");
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    for (std::size_t i = 0; i < params.layers[li].w.size(); ++i) params.layers[li].w[i] += scale * other.layers[li].w[i];
    for (std::size_t i = 0; i < params.layers[li].b.size(); ++i) params.layers[li].b[i] += scale * other.layers[li].b[i];
  }
}

bool all_finite(const MlpParams& params) {
  for (const DenseLayer& l : params.layers) {
    for (double v : l.w) if (!std::isfinite(v)) return false;
    for (double v : l.b) if (!std::isfinite(v)) return false;
  }
  return true;
}

AdamState make_adam(const MlpParams& params) {
  return AdamState{zeros_like(params), zeros_like(params), 0};
}

void adam_update(MlpParams& params, const MlpParams& grads, AdamState& state, double lr) {
  if (grads.dims() != params.dims() || state.m.dims() != params.dims()) {
    throw Error(ErrorCode::kDimensionMismatch, "Adam shape mismatch");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                    std::vector<double>& v) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * g[i];
      v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * g[i] * g[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + kAdamEpsilon);
    }
  };
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    update(params.layers[li].w, grads.layers[li].w, state.m.layers[li].w, state.v.layers[li].w);
    update(params.layers[li].b, grads.layers[li].b, state.m.layers[li].b, state.v.layers[li].b);
  }
}

void write_mlp(std::ostream& out, const MlpParams& params) {
  const std::vector<int> dims = params.dims();
  out.write(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(dims.size()));
  for (int d : dims) put_u32(out, static_cast<std::uint32_t>(d));
  for (const DenseLayer& l : params.layers) {
    for (double v : l.w) put_f64(out, v);
    for (double v : l.b) put_f64(out, v);
  }
  if (!out) throw Error(ErrorCode::kIo, "failed to write network");
}

MlpParams read_mlp(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) {
    throw Error(ErrorCode::kParse, "missing MDPO magic");
  }
  const std::uint32_t count = get_u32(in);
  if (count < 2 || count > 64) throw Error(ErrorCode::kParse, "bad MDPO layer count");
  std::vector<int> dims;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t d = get_u32(in);
    if (d == 0 || d > kMaxWidth) throw Error(ErrorCode::kParse, "bad MDPO layer width");
    dims.push_back(static_cast<int>(d));
  }
  MlpParams p = make_mlp(dims);
  for_each_array(p, [&](std::vector<double>& a) {
    for (double& v : a) v = get_f64(in);
  });
  if (!all_finite(p)) throw Error(ErrorCode::kNumeric, "non-finite network parameter");
  return p;
}

void save_checkpoint(const std::string& path, const std::vector<MlpParams>& networks) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path);
  for (const MlpParams& p : networks) write_mlp(out, p);
}

std::vector<MlpParams> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::vector<MlpParams> out;
  while (in.peek() != std::char_traits<char>::eof()) out.push_back(read_mlp(in));
  if (out.empty()) throw Error(ErrorCode::kParse, "empty checkpoint " + path);
  return out;
}

}  // namespace mdrive
