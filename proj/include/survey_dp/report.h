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

#ifndef SURVEY_DP_REPORT_H_
#define SURVEY_DP_REPORT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "survey_dp/dp_core.h"

namespace survey_dp {

struct ReleaseReport {
  std::string label;
  std::string statistic;
  double value = 0.0;
  double epsilon = 0.0;
  double sensitivity = 0.0;
  std::string sensitivity_source;
  double noise_scale = 0.0;
};

struct StageTrace {
  std::string stage;
  bool executed = false;
  bool inside_mechanism = false;
};

// Oracle result for one release when the design stage is audited.
struct DesignAuditEntry {
  std::string label;
  double eps_nominal = 0.0;
  double eps_effective = 0.0;
  bool infinite = false;
};

struct DesignAudit {
  std::string base_mechanism;
  std::vector<DesignAuditEntry> entries;
};

// Everything a run publishes. There is deliberately no field for the
// realised sample, its weights or imputed values.
struct RunReport {
  uint64_t seed = 0;
  std::string mechanism_start;
  std::string invariant;
  std::string mutable_fields;
  std::vector<ReleaseReport> releases;
  PrivacyLedger ledger;
  double ledger_total = 0.0;
  std::vector<StageTrace> stage_trace;
  std::optional<DesignAudit> design_audit;
  std::vector<std::string> notes;
};

// Deterministic JSON with shortest round-trip numbers.
std::string RunReportToJson(const RunReport& report);

// Post-processing: rounds released values to `decimals` places. The ledger
// is copied unchanged; no budget is charged.
RunReport RoundReport(const RunReport& report, int decimals);

}  // namespace survey_dp

#endif  // SURVEY_DP_REPORT_H_
