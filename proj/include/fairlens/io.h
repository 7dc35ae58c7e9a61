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

#ifndef FAIRLENS_IO_H_
#define FAIRLENS_IO_H_

#include <string>
#include <string_view>

#include "fairlens/dataset.h"
#include "json.hpp"

namespace fairlens {

// Shortest round-trip decimal form of a double.
std::string FormatDouble(double value);

nlohmann::json SchemaToJson(const FeatureSchema& schema);
FeatureSchema SchemaFromJson(const nlohmann::json& j);

FeatureSchema LoadSchema(const std::string& path);
void SaveSchema(const FeatureSchema& schema, const std::string& path);

// CSV layout: header row, schema columns in order, then T and Y.
ExperimentDataset ParseCsv(std::string_view text, const FeatureSchema& schema);
std::string FormatCsv(const ExperimentDataset& ds);

ExperimentDataset LoadCsv(const std::string& path, const std::string& schema_path);
void SaveCsv(const ExperimentDataset& ds, const std::string& path);

// Digest over the schema and every stored column, potential outcomes
// included. Equal digests mean equal datasets.
std::string DatasetChecksum(const ExperimentDataset& ds);

std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, std::string_view contents);

}  // namespace fairlens

#endif  // FAIRLENS_IO_H_
