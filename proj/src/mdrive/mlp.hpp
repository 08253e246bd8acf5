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

// Small fully connected ReLU networks with hand-written reverse mode, Adam,
// and the "MDPO" binary parameter format.

#ifndef MDRIVE_MLP_HPP_
#define MDRIVE_MLP_HPP_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mdrive/random.hpp"

namespace mdrive {

inline constexpr int kHiddenUnits = 32;

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;  // out
};

/// ReLU after every layer except the last.
struct MlpParams {
  std::vector<DenseLayer> layers;

  int input_dim() const { return layers.empty() ? 0 : layers.front().in; }
  int output_dim() const { return layers.empty() ? 0 : layers.back().out; }
  std::size_t parameter_count() const;
  std::vector<int> dims() const;
};

/// Zero-initialized network with layer widths `dims` (input first).
MlpParams make_mlp(const std::vector<int>& dims);
/// input -> 32 -> 32 -> output.
std::vector<int> two_hidden_dims(int input, int output);
/// Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases; the last
/// layer's weights are multiplied by `final_scale`.
MlpParams make_mlp_glorot(const std::vector<int>& dims, Rng& rng, double final_scale = 1.0);
MlpParams zeros_like(const MlpParams& params);

struct MlpCache {
  std::vector<std::vector<double>> inputs;  // input seen by each layer
  std::vector<std::vector<double>> pre;     // pre-activation of each layer
};

std::vector<double> mlp_forward(const MlpParams& params, std::span<const double> x, MlpCache& cache);
std::vector<double> mlp_predict(const MlpParams& params, std::span<const double> x);

/// Accumulates parameter gradients into `grads` and returns dL/dx. Throws
/// kState when `cache` does not come from a forward pass of this network.
std::vector<double> mlp_backward(const MlpParams& params, const MlpCache& cache,
                                 std::span<const double> grad_y, MlpParams& grads);

std::vector<double> flatten(const MlpParams& params);
void unflatten(std::span<const double> flat, MlpParams& params);
/// params += scale * other
void axpy(double scale, const MlpParams& other, MlpParams& params);
bool all_finite(const MlpParams& params);

struct AdamState {
  MlpParams m;
  MlpParams v;
  std::int64_t step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

AdamState make_adam(const MlpParams& params);
void adam_update(MlpParams& params, const MlpParams& grads, AdamState& state, double lr);

/// One MDPO record: magic, u32 count of layer widths, u32 widths, then each
/// layer's row-major weights followed by its biases as little-endian f64.
void write_mlp(std::ostream& out, const MlpParams& params);
MlpParams read_mlp(std::istream& in);
/// A checkpoint is a sequence of records; the first is the policy.
void save_checkpoint(const std::string& path, const std::vector<MlpParams>& networks);
std::vector<MlpParams> load_checkpoint(const std::string& path);

}  // namespace mdrive

#endif  // MDRIVE_MLP_HPP_
