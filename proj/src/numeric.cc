/*
 * Copyright 2026 The FairLens Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fairlens/numeric.h"

#include <openssl/sha.h>

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "fairlens/error.h"

namespace fairlens {

double Mean(std::span<const double> v) {
  Require(!v.empty(), ErrorCode::kEmptyInput, "mean of empty sequence");
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

double Variance(std::span<const double> v) {
  const double m = Mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return acc / static_cast<double>(v.size());
}

double Covariance(std::span<const double> a, std::span<const double> b) {
  Require(a.size() == b.size(), ErrorCode::kInvalidArgument,
          "covariance of sequences with different lengths");
  const double ma = Mean(a);
  const double mb = Mean(b);
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += (a[i] - ma) * (b[i] - mb);
  return acc / static_cast<double>(a.size());
}

double Correlation(std::span<const double> a, std::span<const double> b) {
  const double va = Variance(a);
  const double vb = Variance(b);
  if (va <= 0.0 || vb <= 0.0) return 0.0;
  return Covariance(a, b) / std::sqrt(va * vb);
}

double Quantile(std::vector<double> values, double q) {
  Require(!values.empty(), ErrorCode::kEmptyInput, "quantile of empty sequence");
  q = std::clamp(q, 0.0, 1.0);
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<double> Ranks(std::span<const double> v) {
  std::vector<size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double SpearmanCorrelation(std::span<const double> a, std::span<const double> b) {
  const auto ra = Ranks(a);
  const auto rb = Ranks(b);
  return Correlation(ra, rb);
}

std::string Sha256Hex(std::string_view bytes) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(),
         digest);
  std::string out;
  out.reserve(2 * SHA256_DIGEST_LENGTH);
  char buf[3];
  for (unsigned char byte : digest) {
    std::snprintf(buf, sizeof(buf), "%02x", byte);
    out += buf;
  }
  return out;
}

}  // namespace fairlens
