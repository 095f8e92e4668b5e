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

#ifndef SURVEY_DP_FRAME_H_
#define SURVEY_DP_FRAME_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "absl/types/span.h"

namespace survey_dp {

// One unit of the sampling frame. A missing `y` marks item nonresponse.
struct FrameRecord {
  int64_t id = 0;
  std::optional<double> y;
  double x = 1.0;
  std::string stratum;
  std::string cluster;
  double propensity = 1.0;
};

// Ordered register of units. Order is significant: systematic sampling walks
// the records in this order.
class Frame {
 public:
  static absl::StatusOr<Frame> Create(std::vector<FrameRecord> records);

  absl::Span<const FrameRecord> records() const { return records_; }
  const FrameRecord& operator[](size_t i) const { return records_[i]; }
  size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  // Sorted distinct labels.
  std::vector<std::string> StratumLabels() const;
  std::vector<std::string> ClusterLabels() const;

  // Copy with the given y and x values replacing the recorded ones. A NaN y
  // marks the value missing.
  Frame WithValues(absl::Span<const double> y,
                   absl::Span<const double> x) const;

 private:
  explicit Frame(std::vector<FrameRecord> records)
      : records_(std::move(records)) {}
  std::vector<FrameRecord> records_;
};

// Declared bounds for the response variable and the admissible size
// measures.
struct ValueUniverse {
  double y_min = 0.0;
  double y_max = 1.0;
  std::vector<double> x_values = {1.0};

  static absl::StatusOr<ValueUniverse> Create(double y_min, double y_max,
                                              std::vector<double> x_values);
  double Range() const { return y_max - y_min; }
};

// Checks every observed y against the universe bounds and every x against
// the admissible size measures.
absl::Status ValidateFrame(const Frame& frame, const ValueUniverse& universe);

// CSV with header `id,y,x,stratum,cluster,propensity`; an empty y field is a
// missing value.
absl::StatusOr<Frame> ParseFrameCsv(absl::string_view text);
absl::StatusOr<Frame> ReadFrameCsv(const std::string& path);
std::string FormatFrameCsv(const Frame& frame);

absl::StatusOr<std::string> ReadFile(const std::string& path);

}  // namespace survey_dp

#endif  // SURVEY_DP_FRAME_H_
