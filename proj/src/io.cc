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

#include "fairlens/io.h"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "fairlens/error.h"
#include "fairlens/numeric.h"

namespace fairlens {

std::string FormatDouble(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) Fail(ErrorCode::kInternal, "cannot format double");
  return std::string(buf, end);
}

nlohmann::json SchemaToJson(const FeatureSchema& schema) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : schema.features()) {
    nlohmann::json jf = {{"name", f.name},
                         {"kind", std::string(FeatureKindName(f.kind))},
                         {"sensitive", f.sensitive}};
    if (f.kind == FeatureKind::kCategorical) jf["cardinality"] = f.cardinality;
    features.push_back(std::move(jf));
  }
  return {{"format_version", 1},
          {"features", std::move(features)},
          {"group_feature", schema.feature(schema.group_feature()).name}};
}

FeatureSchema SchemaFromJson(const nlohmann::json& j) {
  try {
    std::vector<FeatureSpec> specs;
    for (const auto& jf : j.at("features")) {
      FeatureSpec f;
      f.name = jf.at("name").get<std::string>();
      f.kind = ParseFeatureKind(jf.at("kind").get<std::string>());
      f.sensitive = jf.value("sensitive", false);
      f.cardinality = jf.value("cardinality", 0);
      specs.push_back(std::move(f));
    }
    const auto& group = j.at("group_feature");
    size_t index = specs.size();
    if (group.is_number_unsigned()) {
      index = group.get<size_t>();
    } else {
      const auto name = group.get<std::string>();
      for (size_t i = 0; i < specs.size(); ++i) {
        if (specs[i].name == name) index = i;
      }
    }
    Require(index < specs.size(), ErrorCode::kSchemaMismatch,
            "group_feature does not name a schema feature");
    return FeatureSchema(std::move(specs), index);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, std::string("malformed schema: ") + e.what());
  }
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  Require(in.good(), ErrorCode::kNotFound, "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void WriteFile(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(out.good(), ErrorCode::kInvalidArgument,
          "cannot write '" + path + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

FeatureSchema LoadSchema(const std::string& path) {
  const auto text = ReadFile(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, "schema '" + path + "' is not valid JSON: " + e.what());
  }
  return SchemaFromJson(j);
}

void SaveSchema(const FeatureSchema& schema, const std::string& path) {
  WriteFile(path, SchemaToJson(schema).dump(2) + "\n");
}

namespace {

std::vector<std::string_view> SplitLine(std::string_view line) {
  std::vector<std::string_view> cells;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  for (auto& c : cells) {
    while (!c.empty() && (c.front() == ' ' || c.front() == '\t')) c.remove_prefix(1);
    while (!c.empty() && (c.back() == ' ' || c.back() == '\t' || c.back() == '\r')) {
      c.remove_suffix(1);
    }
  }
  return cells;
}

double ParseCell(std::string_view cell, size_t row, const std::string& column) {
  double value = 0.0;
  const auto* first = cell.data();
  const auto* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw ParseError(ErrorCode::kTypeMismatch, row, column,
                     "row " + std::to_string(row) + ", column '" + column +
                         "': cannot parse '" + std::string(cell) + "' as a number");
  }
  return value;
}

}  // namespace

ExperimentDataset ParseCsv(std::string_view text, const FeatureSchema& schema) {
  std::vector<std::string_view> lines;
  size_t start = 0;
  while (start < text.size()) {
    size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    start = nl + 1;
  }
  if (lines.empty()) {
    throw ParseError(ErrorCode::kEmptyInput, 0, "", "CSV input is empty");
  }

  const auto header = SplitLine(lines[0]);
  std::vector<std::string> expected = schema.names();
  expected.push_back("T");
  expected.push_back("Y");
  for (size_t c = 0; c < expected.size(); ++c) {
    if (c >= header.size() || header[c] != expected[c]) {
      throw ParseError(ErrorCode::kMissingColumn, 0, expected[c],
                       "header column " + std::to_string(c + 1) + ": expected '" +
                           expected[c] + "'");
    }
  }
  if (header.size() != expected.size()) {
    throw ParseError(ErrorCode::kMissingColumn, 0, std::string(header.back()),
                     "header has " + std::to_string(header.size()) +
                         " columns, schema expects " +
                         std::to_string(expected.size()));
  }
  if (lines.size() == 1) {
    throw ParseError(ErrorCode::kEmptyInput, 0, "", "CSV has a header but no rows");
  }

  const size_t d = schema.size();
  ExperimentDataset ds;
  ds.schema = schema;
  ds.x = Matrix(lines.size() - 1, d);
  std::vector<double> values(d + 2);
  for (size_t li = 1; li < lines.size(); ++li) {
    const size_t row = li;
    const auto cells = SplitLine(lines[li]);
    if (cells.size() != expected.size()) {
      const std::string col =
          cells.size() < expected.size() ? expected[cells.size()] : "";
      throw ParseError(ErrorCode::kMissingColumn, row, col,
                       "row " + std::to_string(row) + " has " +
                           std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(expected.size()));
    }
    for (size_t c = 0; c < cells.size(); ++c) {
      values[c] = ParseCell(cells[c], row, expected[c]);
    }
    for (size_t c = 0; c < d; ++c) {
      const auto& f = schema.feature(c);
      const double v = values[c];
      bool ok = true;
      if (f.kind == FeatureKind::kBinary) ok = v == 0.0 || v == 1.0;
      if (f.kind == FeatureKind::kCategorical) {
        ok = v == std::floor(v) && v >= 0.0 && v < f.cardinality;
      }
      if (!ok) {
        throw ParseError(ErrorCode::kTypeMismatch, row, f.name,
                         "row " + std::to_string(row) + ", column '" + f.name +
                             "': value out of domain for " +
                             std::string(FeatureKindName(f.kind)) + " feature");
      }
      ds.x(li - 1, c) = v;
    }
    const double t = values[d];
    if (t != 0.0 && t != 1.0) {
      throw ParseError(ErrorCode::kTypeMismatch, row, "T",
                       "row " + std::to_string(row) +
                           ": treatment must be 0 or 1, got " + FormatDouble(t));
    }
    ds.t.push_back(static_cast<int>(t));
    ds.y.push_back(values[d + 1]);
  }
  ds.Validate();
  return ds;
}

std::string FormatCsv(const ExperimentDataset& ds) {
  std::string out;
  const auto names = ds.schema.names();
  for (const auto& name : names) {
    out += name;
    out += ',';
  }
  out += "T,Y\n";
  for (size_t r = 0; r < ds.size(); ++r) {
    for (double v : ds.x.row(r)) {
      out += FormatDouble(v);
      out += ',';
    }
    out += std::to_string(ds.t[r]);
    out += ',';
    out += FormatDouble(ds.y[r]);
    out += '\n';
  }
  return out;
}

ExperimentDataset LoadCsv(const std::string& path, const std::string& schema_path) {
  const auto schema = LoadSchema(schema_path);
  return ParseCsv(ReadFile(path), schema);
}

void SaveCsv(const ExperimentDataset& ds, const std::string& path) {
  WriteFile(path, FormatCsv(ds));
}

std::string DatasetChecksum(const ExperimentDataset& ds) {
  std::string bytes = SchemaToJson(ds.schema).dump();
  bytes += '\n';
  bytes += FormatCsv(ds);
  auto append = [&](const char* tag, const std::optional<std::vector<double>>& v) {
    if (!v) return;
    bytes += tag;
    for (double x : *v) {
      bytes += FormatDouble(x);
      bytes += ',';
    }
    bytes += '\n';
  };
  append("y0:", ds.y0);
  append("y1:", ds.y1);
  append("p0:", ds.p0);
  append("p1:", ds.p1);
  bytes += "assignment_prob:" + FormatDouble(ds.assignment_prob);
  return Sha256Hex(bytes);
}

}  // namespace fairlens
