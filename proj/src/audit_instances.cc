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

#include "survey_dp/audit_instances.h"

#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace survey_dp {
namespace {

struct Row {
  std::optional<double> y;
  double x;
  std::string stratum;
  std::string cluster;
};

AuditInstance Make(std::string name, const std::vector<Row>& rows,
                   std::vector<double> x_grid = {1.0},
                   std::vector<size_t> fixed = {}) {
  std::vector<FrameRecord> records;
  for (size_t i = 0; i < rows.size(); ++i) {
    records.push_back({static_cast<int64_t>(i + 1), rows[i].y, rows[i].x,
                       rows[i].stratum, rows[i].cluster, 1.0});
  }
  // The rows above are valid by construction.
  Frame frame = *Frame::Create(std::move(records));
  return AuditInstance{std::move(name), std::move(frame),
                       AuditUniverse{{0.0, 1.0}, std::move(x_grid)},
                       std::move(fixed), DefaultEnumerationCap()};
}

}  // namespace

AuditInstance UniformInstance(size_t n) {
  std::vector<Row> rows;
  for (size_t i = 0; i < n; ++i) {
    rows.push_back({i % 2 == 0 ? 0.0 : 1.0, 1.0, "s", absl::StrCat("c", i)});
  }
  return Make(absl::StrCat("uniform", n), rows);
}

AuditInstance PpsReferenceInstance() {
  return Make(
      "pps_reference",
      {{0.0, 1.0, "s", "c1"}, {1.0, 1.0, "s", "c2"}, {1.0, 2.0, "s", "c3"}},
      {1.0, 2.0});
}

AuditInstance TwoClusterInstance() {
  return Make("two_clusters", {{0.0, 1.0, "A", "c1"},
                               {1.0, 1.0, "A", "c1"},
                               {0.0, 1.0, "B", "c2"},
                               {1.0, 1.0, "B", "c2"}});
}

AuditInstance PeriodicInstance() {
  return Make("periodic",
              {{0.0, 1.0, "A", "c1"},
               {1.0, 1.0, "A", "c2"},
               {0.0, 1.0, "A", "c1"},
               {1.0, 2.0, "B", "c2"},
               {0.0, 2.0, "B", "c3"},
               {1.0, 2.0, "B", "c3"}},
              {1.0, 2.0});
}

absl::StatusOr<AuditInstance> PpsMaxPiInstance(double max_pi) {
  if (max_pi == 0.2) {
    return Make("pps_maxpi_0.2", {{0.0, 1.0, "s", "c1"},
                                  {1.0, 1.0, "s", "c2"},
                                  {0.0, 1.0, "s", "c3"},
                                  {1.0, 1.0, "s", "c4"},
                                  {0.0, 1.0, "s", "c5"}});
  }
  if (max_pi == 0.4) {
    return Make("pps_maxpi_0.4",
                {{0.0, 2.0, "s", "c1"},
                 {1.0, 1.0, "s", "c2"},
                 {0.0, 1.0, "s", "c3"},
                 {1.0, 1.0, "s", "c4"}},
                {1.0, 2.0});
  }
  if (max_pi == 0.6) {
    return Make(
        "pps_maxpi_0.6",
        {{0.0, 3.0, "s", "c1"}, {1.0, 1.0, "s", "c2"}, {0.0, 1.0, "s", "c3"}},
        {1.0, 3.0});
  }
  return absl::InvalidArgumentError(
      "max pi reference frames exist for 0.2, 0.4 and 0.6 only");
}

AuditInstance HotDeckInstance(size_t missing) {
  std::vector<Row> rows;
  std::vector<size_t> fixed;
  for (size_t i = 0; i < 4; ++i) {
    const bool is_missing = i + missing >= 4;
    rows.push_back({is_missing ? std::nullopt : std::optional<double>(i % 2),
                    1.0, "s", absl::StrCat("c", i)});
    if (is_missing) fixed.push_back(i);
  }
  return Make(absl::StrCat("hot_deck_missing", missing), rows, {1.0},
              std::move(fixed));
}

AuditInstance ImputationInstance() {
  return Make("imputation3",
              {{0.0, 1.0, "s", "c1"},
               {1.0, 1.0, "s", "c2"},
               {std::nullopt, 1.0, "s", "c3"}},
              {1.0}, {2});
}

AuditInstance NeymanReferenceInstance() {
  return Make("neyman_reference", {{0.0, 1.0, "A", "c1"},
                                   {0.0, 1.0, "A", "c2"},
                                   {0.0, 1.0, "B", "c3"},
                                   {1.0, 1.0, "B", "c4"}});
}

std::vector<AuditInstance> BundledInstances() {
  std::vector<AuditInstance> out;
  out.push_back(UniformInstance(2));
  out.push_back(UniformInstance(3));
  out.push_back(UniformInstance(4));
  out.push_back(PpsReferenceInstance());
  out.push_back(TwoClusterInstance());
  out.push_back(NeymanReferenceInstance());
  out.push_back(PeriodicInstance());
  return out;
}

absl::StatusOr<AuditInstance> FindInstance(const std::string& name) {
  for (AuditInstance& instance : BundledInstances()) {
    if (instance.name == name) return std::move(instance);
  }
  for (double pi : {0.2, 0.4, 0.6}) {
    absl::StatusOr<AuditInstance> instance = PpsMaxPiInstance(pi);
    if (instance.ok() && instance->name == name) return instance;
  }
  if (name == "imputation3") return ImputationInstance();
  for (size_t k = 0; k <= 3; ++k) {
    if (name == absl::StrCat("hot_deck_missing", k)) return HotDeckInstance(k);
  }
  for (size_t n = 1; n <= 10; ++n) {
    if (name == absl::StrCat("uniform", n)) return UniformInstance(n);
  }
  return absl::NotFoundError(
      absl::StrCat("no audit instance named '", name, "'"));
}

std::vector<LabelledDesign> BundledDesigns(const AuditInstance& instance) {
  const Frame& frame = instance.frame;
  const int64_t n_units = static_cast<int64_t>(frame.size());
  std::vector<LabelledDesign> candidates;
  for (int64_t n = 1; n <= n_units; ++n) {
    candidates.push_back({"", Srswr{n}});
    candidates.push_back({"", Srswor{n}});
    candidates.push_back({"", Pps{n}});
    candidates.push_back({"", Systematic{n, SystematicOrdering::kFrameOrder}});
    candidates.push_back({"", Systematic{n, SystematicOrdering::kRandomOrder}});
    candidates.push_back({"", StratifiedSrswor{n, Allocation::kProportional}});
    candidates.push_back({"", StratifiedSrswor{n, Allocation::kNeyman}});
  }
  const int64_t clusters = static_cast<int64_t>(frame.ClusterLabels().size());
  for (int64_t m = 1; m <= clusters; ++m) {
    candidates.push_back({"", ClusterSrswor{m}});
  }
  std::vector<LabelledDesign> out;
  for (LabelledDesign& d : candidates) {
    if (!ValidateDesign(d.design, frame).ok()) continue;
    if (!InclusionProbs(d.design, frame).ok()) continue;
    d.label = DesignName(d.design);
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace survey_dp
