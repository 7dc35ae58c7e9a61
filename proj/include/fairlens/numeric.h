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

#ifndef FAIRLENS_NUMERIC_H_
#define FAIRLENS_NUMERIC_H_

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fairlens {

inline double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double Mean(std::span<const double> v);
// Population variance (divides by n).
double Variance(std::span<const double> v);
double Covariance(std::span<const double> a, std::span<const double> b);
double Correlation(std::span<const double> a, std::span<const double> b);

// Linear-interpolated quantile of unsorted data, q in [0, 1].
double Quantile(std::vector<double> values, double q);

// Average ranks (1-based), ties share the mean rank.
std::vector<double> Ranks(std::span<const double> v);
double SpearmanCorrelation(std::span<const double> a, std::span<const double> b);

// Independent stream seed derived from a base seed (splitmix64 mix).
inline uint64_t DeriveSeed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Lowercase hex SHA-256 of the given bytes.
std::string Sha256Hex(std::string_view bytes);

}  // namespace fairlens

#endif  // FAIRLENS_NUMERIC_H_
