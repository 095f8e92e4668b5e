// Copyright 2026 The Survey DP Authors.
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

#include "survey_dp/frame.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"

namespace survey_dp {

constexpr char kFrameHeader[] = "id,y,x,stratum,cluster,propensity";

absl::StatusOr<Frame> Frame::Create(std::vector<FrameRecord> records) {
  if (records.empty()) return absl::InvalidArgumentError("frame is empty");
  std::set<int64_t> ids;
  for (const FrameRecord& r : records) {
    if (!ids.insert(r.id).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate unit id ", r.id));
    }
    if (!(r.x > 0.0) || !std::isfinite(r.x)) {
      return absl::InvalidArgumentError(
          absl::StrCat("unit ", r.id, ": size measure x must be positive"));
    }
    if (!(r.propensity > 0.0 && r.propensity <= 1.0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("unit ", r.id, ": propensity must lie in (0, 1]"));
    }
    if (r.y.has_value() && !std::isfinite(*r.y)) {
      return absl::InvalidArgumentError(
          absl::StrCat("unit ", r.id, ": y must be finite"));
    }
  }
  return Frame(std::move(records));
}

std::vector<std::string> Frame::StratumLabels() const {
  std::set<std::string> labels;
  for (const FrameRecord& r : records_) labels.insert(r.stratum);
  return {labels.begin(), labels.end()};
}

std::vector<std::string> Frame::ClusterLabels() const {
  std::set<std::string> labels;
  for (const FrameRecord& r : records_) labels.insert(r.cluster);
  return {labels.begin(), labels.end()};
}

Frame Frame::WithValues(absl::Span<const double> y,
                        absl::Span<const double> x) const {
  std::vector<FrameRecord> records = records_;
  for (size_t i = 0; i < records.size(); ++i) {
    records[i].y =
        std::isnan(y[i]) ? std::nullopt : std::optional<double>(y[i]);
    records[i].x = x[i];
  }
  return Frame(std::move(records));
}

absl::StatusOr<ValueUniverse> ValueUniverse::Create(
    double y_min, double y_max, std::vector<double> x_values) {
  if (!std::isfinite(y_min) || !std::isfinite(y_max) || y_max < y_min) {
    return absl::InvalidArgumentError("universe requires y_min <= y_max");
  }
  if (x_values.empty()) {
    return absl::InvalidArgumentError("universe needs at least one x value");
  }
  for (double x : x_values) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      return absl::InvalidArgumentError("x values must be positive");
    }
  }
  std::sort(x_values.begin(), x_values.end());
  x_values.erase(std::unique(x_values.begin(), x_values.end()), x_values.end());
  return ValueUniverse{y_min, y_max, std::move(x_values)};
}

absl::Status ValidateFrame(const Frame& frame, const ValueUniverse& universe) {
  for (const FrameRecord& r : frame.records()) {
    if (r.y.has_value() && (*r.y < universe.y_min || *r.y > universe.y_max)) {
      return absl::OutOfRangeError(absl::StrCat("unit ", r.id, ": y=", *r.y,
                                                " outside [", universe.y_min,
                                                ", ", universe.y_max, "]"));
    }
    if (!std::binary_search(universe.x_values.begin(), universe.x_values.end(),
                            r.x)) {
      return absl::OutOfRangeError(absl::StrCat(
          "unit ", r.id, ": x=", r.x, " is not an admissible size measure"));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<Frame> ParseFrameCsv(absl::string_view text) {
  std::vector<absl::string_view> lines =
      absl::StrSplit(text, '\n', absl::SkipWhitespace());
  if (lines.empty()) return absl::InvalidArgumentError("frame CSV is empty");
  if (absl::StripTrailingAsciiWhitespace(lines[0]) != kFrameHeader) {
    return absl::InvalidArgumentError(
        absl::StrCat("frame CSV header must be '", kFrameHeader, "'"));
  }
  std::vector<FrameRecord> records;
  for (size_t line = 1; line < lines.size(); ++line) {
    absl::string_view row = absl::StripTrailingAsciiWhitespace(lines[line]);
    std::vector<absl::string_view> fields = absl::StrSplit(row, ',');
    const std::string where = absl::StrCat("frame CSV line ", line + 1);
    if (fields.size() != 6) {
      return absl::InvalidArgumentError(
          absl::StrCat(where, ": expected 6 fields, got ", fields.size()));
    }
    FrameRecord r;
    if (!absl::SimpleAtoi(fields[0], &r.id)) {
      return absl::InvalidArgumentError(absl::StrCat(where, ": bad id"));
    }
    if (!fields[1].empty()) {
      double y;
      if (!absl::SimpleAtod(fields[1], &y)) {
        return absl::InvalidArgumentError(absl::StrCat(where, ": bad y"));
      }
      r.y = y;
    }
    if (!absl::SimpleAtod(fields[2], &r.x)) {
      return absl::InvalidArgumentError(absl::StrCat(where, ": bad x"));
    }
    r.stratum = std::string(fields[3]);
    r.cluster = std::string(fields[4]);
    if (fields[5].empty()) {
      r.propensity = 1.0;
    } else if (!absl::SimpleAtod(fields[5], &r.propensity)) {
      return absl::InvalidArgumentError(
          absl::StrCat(where, ": bad propensity"));
    }
    records.push_back(std::move(r));
  }
  return Frame::Create(std::move(records));
}

absl::StatusOr<std::string> ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

absl::StatusOr<Frame> ReadFrameCsv(const std::string& path) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return text.status();
  return ParseFrameCsv(*text);
}

std::string FormatFrameCsv(const Frame& frame) {
  std::string out = absl::StrCat(kFrameHeader, "\n");
  for (const FrameRecord& r : frame.records()) {
    absl::StrAppend(&out, r.id, ",", r.y.has_value() ? absl::StrCat(*r.y) : "",
                    ",", r.x, ",", r.stratum, ",", r.cluster, ",", r.propensity,
                    "\n");
  }
  return out;
}

}  // namespace survey_dp
