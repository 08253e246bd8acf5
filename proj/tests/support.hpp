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

// Shared helpers for the unit tests.

#ifndef MDRIVE_TESTS_SUPPORT_HPP_
#define MDRIVE_TESTS_SUPPORT_HPP_

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>

#include "mdrive/error.hpp"
#include "mdrive/mlp.hpp"
#include "mdrive/random.hpp"

namespace mdrive::testing {

// Fresh path under the system temp directory, removed on destruction.
class TempPath {
 public:
  explicit TempPath(const std::string& name)
      : path_(std::filesystem::temp_directory_path() /
              ("mdrive_" + std::to_string(::getpid()) + "_" + name)) {
    std::filesystem::remove_all(path_);
  }
  ~TempPath() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempPath(const TempPath&) = delete;
  TempPath& operator=(const TempPath&) = delete;

  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

template <typename F>
ErrorCode error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::logic_error("expected an mdrive::Error");
}

struct FdReport {
  double max_rel_error = 0.0;
  int checked = 0;
  int skipped = 0;  // coordinates straddling a ReLU kink
};

// Compares `analytic` against central differences of `loss` on `coords`
// randomly chosen parameters. Relative error is |a - f| / max(|a|, |f|, 1e-5).
// A coordinate whose difference quotients at h and h/2 disagree sits on a
// kink and is skipped.
inline FdReport finite_difference_check(const MlpParams& params, const MlpParams& analytic,
                                        const std::function<double(const MlpParams&)>& loss, Rng& rng,
                                        int coords, double h = 1e-5) {
  std::vector<double> flat = flatten(params);
  const std::vector<double> grad = flatten(analytic);
  MlpParams probe = params;
  const auto quotient = [&](std::size_t i, double step) {
    const double keep = flat[i];
    flat[i] = keep + step;
    unflatten(flat, probe);
    const double up = loss(probe);
    flat[i] = keep - step;
    unflatten(flat, probe);
    const double down = loss(probe);
    flat[i] = keep;
    return (up - down) / (2.0 * step);
  };
  FdReport report;
  for (int k = 0; k < coords; ++k) {
    const std::size_t i = uniform_index(rng, flat.size());
    const double fd = quotient(i, h);
    const double fd_half = quotient(i, 0.5 * h);
    if (std::abs(fd - fd_half) > 1e-6 * std::max(1.0, std::abs(fd))) {
      ++report.skipped;
      continue;
    }
    const double denom = std::max({std::abs(grad[i]), std::abs(fd), 1e-5});
    report.max_rel_error = std::max(report.max_rel_error, std::abs(grad[i] - fd) / denom);
    ++report.checked;
  }
  return report;
}

}  // namespace mdrive::testing

#endif  // MDRIVE_TESTS_SUPPORT_HPP_
