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

#include "survey_dp/report.h"

#include <cmath>

#include "json.hpp"

namespace survey_dp {

std::string RunReportToJson(const RunReport& report) {
  using nlohmann::ordered_json;
  ordered_json out;
  out["seed"] = report.seed;
  out["mechanism_start"] = report.mechanism_start;
  out["neighbor_relation"] = {{"invariant", report.invariant},
                              {"fields", report.mutable_fields}};
  ordered_json releases = ordered_json::array();
  for (const ReleaseReport& r : report.releases) {
    releases.push_back({{"label", r.label},
                        {"statistic", r.statistic},
                        {"value", r.value},
                        {"epsilon", r.epsilon},
                        {"sensitivity", r.sensitivity},
                        {"sensitivity_source", r.sensitivity_source},
                        {"noise_scale", r.noise_scale}});
  }
  out["releases"] = std::move(releases);
  ordered_json charges = ordered_json::array();
  for (const LedgerCharge& c : report.ledger.charges()) {
    ordered_json charge = {{"label", c.label},
                           {"epsilon", c.epsilon.epsilon()}};
    if (c.sensitivity) charge["sensitivity"] = c.sensitivity->value();
    charges.push_back(std::move(charge));
  }
  out["ledger"] = {{"charges", std::move(charges)},
                   {"total", report.ledger_total}};
  ordered_json trace = ordered_json::array();
  for (const StageTrace& s : report.stage_trace) {
    trace.push_back({{"stage", s.stage},
                     {"executed", s.executed},
                     {"inside_mechanism", s.inside_mechanism}});
  }
  out["stage_trace"] = std::move(trace);
  if (report.design_audit) {
    ordered_json entries = ordered_json::array();
    for (const DesignAuditEntry& e : report.design_audit->entries) {
      entries.push_back(
          {{"label", e.label},
           {"eps_nominal", e.eps_nominal},
           {"eps_effective",
            e.infinite ? ordered_json(nullptr) : ordered_json(e.eps_effective)},
           {"infinite", e.infinite}});
    }
    out["design_audit"] = {
        {"base_mechanism", report.design_audit->base_mechanism},
        {"releases", std::move(entries)}};
  }
  out["notes"] = report.notes;
  return out.dump(2) + "\n";
}

RunReport RoundReport(const RunReport& report, int decimals) {
  RunReport rounded = report;
  const double factor = std::pow(10.0, decimals);
  for (ReleaseReport& r : rounded.releases) {
    r.value = std::round(r.value * factor) / factor;
  }
  return rounded;
}

}  // namespace survey_dp
