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

#include "survey_dp/pipeline.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <initializer_list>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "json.hpp"
#include "survey_dp/adjust.h"
#include "survey_dp/audit.h"
#include "survey_dp/dp_core.h"
#include "survey_dp/format.h"

namespace survey_dp {
namespace {

using nlohmann::json;

// Stream tags for the per-stage random substreams.
constexpr uint64_t kDrawStream = 1;
constexpr uint64_t kResponseStream = 2;
constexpr uint64_t kAdjustStream = 3;
constexpr uint64_t kImputeStream = 4;
constexpr uint64_t kReleaseStream = 100;

constexpr double kBudgetTolerance = 1e-12;

absl::Status ConfigError(const std::string& path, absl::string_view message) {
  return absl::InvalidArgumentError(
      absl::StrCat("config ", path, ": ", message));
}

absl::Status CheckObject(const json& value, const std::string& path,
                         std::initializer_list<const char*> allowed) {
  if (!value.is_object()) return ConfigError(path, "expected an object");
  for (const auto& [key, unused] : value.items()) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&key](const char* a) { return key == a; })) {
      return ConfigError(absl::StrCat(path, ".", key), "unknown key");
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<const json*> Field(const json& obj, const std::string& path,
                                  const char* key, bool required) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) return ConfigError(absl::StrCat(path, ".", key), "missing");
    return nullptr;
  }
  return &*it;
}

absl::StatusOr<double> Number(const json& value, const std::string& path) {
  if (!value.is_number()) return ConfigError(path, "expected a number");
  return value.get<double>();
}

absl::StatusOr<int64_t> Integer(const json& value, const std::string& path) {
  if (!value.is_number_integer()) {
    return ConfigError(path, "expected an integer");
  }
  return value.get<int64_t>();
}

absl::StatusOr<std::string> String(const json& value, const std::string& path) {
  if (!value.is_string()) return ConfigError(path, "expected a string");
  return value.get<std::string>();
}

absl::StatusOr<bool> Bool(const json& value, const std::string& path) {
  if (!value.is_boolean()) return ConfigError(path, "expected a boolean");
  return value.get<bool>();
}

// Wraps a parse of a named enum so the key path appears in the error.
template <typename T>
absl::StatusOr<T> Named(const json& value, const std::string& path,
                        absl::StatusOr<T> (*parse)(const std::string&)) {
  absl::StatusOr<std::string> s = String(value, path);
  if (!s.ok()) return s.status();
  absl::StatusOr<T> parsed = parse(*s);
  if (!parsed.ok()) return ConfigError(path, parsed.status().message());
  return parsed;
}

absl::StatusOr<Allocation> ParseAllocation(const std::string& name) {
  if (name == "proportional") return Allocation::kProportional;
  if (name == "neyman") return Allocation::kNeyman;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown allocation '", name, "'"));
}

absl::StatusOr<SystematicOrdering> ParseOrdering(const std::string& name) {
  if (name == "frame_order") return SystematicOrdering::kFrameOrder;
  if (name == "random_order") return SystematicOrdering::kRandomOrder;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown ordering '", name, "'"));
}

absl::StatusOr<SamplingDesign> ParseSingleDesign(const json& value,
                                                 const std::string& path) {
  if (!value.is_object()) return ConfigError(path, "expected an object");
  absl::StatusOr<const json*> type_field = Field(value, path, "type", true);
  if (!type_field.ok()) return type_field.status();
  absl::StatusOr<std::string> type = String(**type_field, path + ".type");
  if (!type.ok()) return type.status();

  auto integer = [&](const char* key) -> absl::StatusOr<int64_t> {
    absl::StatusOr<const json*> f = Field(value, path, key, true);
    if (!f.ok()) return f.status();
    return Integer(**f, absl::StrCat(path, ".", key));
  };
  if (*type == "srswr" || *type == "srswor" || *type == "pps") {
    if (absl::Status s = CheckObject(value, path, {"type", "n"}); !s.ok()) {
      return s;
    }
    absl::StatusOr<int64_t> n = integer("n");
    if (!n.ok()) return n.status();
    if (*type == "srswr") return Srswr{*n};
    if (*type == "srswor") return Srswor{*n};
    return Pps{*n};
  }
  if (*type == "poisson") {
    if (absl::Status s = CheckObject(value, path, {"type", "rate"}); !s.ok()) {
      return s;
    }
    absl::StatusOr<const json*> f = Field(value, path, "rate", true);
    if (!f.ok()) return f.status();
    absl::StatusOr<double> rate = Number(**f, path + ".rate");
    if (!rate.ok()) return rate.status();
    return PoissonSampling{*rate};
  }
  if (*type == "stratified") {
    if (absl::Status s = CheckObject(value, path, {"type", "n", "allocation"});
        !s.ok()) {
      return s;
    }
    absl::StatusOr<int64_t> n = integer("n");
    if (!n.ok()) return n.status();
    Allocation allocation = Allocation::kProportional;
    absl::StatusOr<const json*> f = Field(value, path, "allocation", false);
    if (!f.ok()) return f.status();
    if (*f != nullptr) {
      absl::StatusOr<Allocation> a =
          Named<Allocation>(**f, path + ".allocation", &ParseAllocation);
      if (!a.ok()) return a.status();
      allocation = *a;
    }
    return StratifiedSrswor{*n, allocation};
  }
  if (*type == "cluster") {
    if (absl::Status s = CheckObject(value, path, {"type", "clusters"});
        !s.ok()) {
      return s;
    }
    absl::StatusOr<int64_t> m = integer("clusters");
    if (!m.ok()) return m.status();
    return ClusterSrswor{*m};
  }
  if (*type == "systematic") {
    if (absl::Status s = CheckObject(value, path, {"type", "n", "ordering"});
        !s.ok()) {
      return s;
    }
    absl::StatusOr<int64_t> n = integer("n");
    if (!n.ok()) return n.status();
    SystematicOrdering ordering = SystematicOrdering::kFrameOrder;
    absl::StatusOr<const json*> f = Field(value, path, "ordering", false);
    if (!f.ok()) return f.status();
    if (*f != nullptr) {
      absl::StatusOr<SystematicOrdering> o =
          Named<SystematicOrdering>(**f, path + ".ordering", &ParseOrdering);
      if (!o.ok()) return o.status();
      ordering = *o;
    }
    return Systematic{*n, ordering};
  }
  return ConfigError(path + ".type",
                     absl::StrCat("unknown design type '", *type, "'"));
}

absl::StatusOr<DesignSpec> ParseDesign(const json& value,
                                       const std::string& path) {
  if (value.is_object() && value.contains("type") &&
      value["type"] == "two_stage") {
    if (absl::Status s = CheckObject(value, path, {"type", "outer", "inner"});
        !s.ok()) {
      return s;
    }
    for (const char* key : {"outer", "inner"}) {
      if (!value.contains(key)) {
        return ConfigError(absl::StrCat(path, ".", key), "missing");
      }
    }
    absl::StatusOr<SamplingDesign> outer =
        ParseSingleDesign(value["outer"], path + ".outer");
    if (!outer.ok()) return outer.status();
    if (!std::holds_alternative<ClusterSrswor>(*outer)) {
      return ConfigError(path + ".outer",
                         "the outer stage must be a cluster design");
    }
    absl::StatusOr<SamplingDesign> inner =
        ParseSingleDesign(value["inner"], path + ".inner");
    if (!inner.ok()) return inner.status();
    return DesignSpec{*outer, *inner};
  }
  absl::StatusOr<SamplingDesign> design = ParseSingleDesign(value, path);
  if (!design.ok()) return design.status();
  return DesignSpec{*design, std::nullopt};
}

absl::StatusOr<ResponseModel> ParseResponse(const std::string& name) {
  if (name == "full") return ResponseModel::kFull;
  if (name == "propensity") return ResponseModel::kPropensity;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown response model '", name, "'"));
}

absl::StatusOr<CellVariable> ParseCells(const std::string& name) {
  if (name == "stratum") return CellVariable::kStratum;
  if (name == "cluster") return CellVariable::kCluster;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown cell variable '", name, "'"));
}

absl::StatusOr<ImputationMethod> ParseImputationMethod(
    const std::string& name) {
  if (name == "none") return ImputationMethod::kNone;
  if (name == "mean") return ImputationMethod::kMean;
  if (name == "regression") return ImputationMethod::kRegression;
  if (name == "hot_deck") return ImputationMethod::kHotDeck;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown imputation method '", name, "'"));
}

absl::StatusOr<FitRows> ParseFitRows(const std::string& name) {
  if (name == "complete_cases") return FitRows::kCompleteCases;
  if (name == "all_observed") return FitRows::kAllObserved;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown fit rows '", name, "'"));
}

absl::StatusOr<WeightMaxScope> ParseWeightMax(const std::string& name) {
  if (name == "frame") return WeightMaxScope::kFrame;
  if (name == "universe") return WeightMaxScope::kUniverse;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown weight_max scope '", name, "'"));
}

absl::StatusOr<AdjustmentSpec> ParseAdjustment(const json& value,
                                               const std::string& path) {
  if (absl::Status s = CheckObject(
          value, path,
          {"cells", "nonresponse", "dp_epsilon", "benchmarks", "regularize"});
      !s.ok()) {
    return s;
  }
  AdjustmentSpec spec;
  if (value.contains("cells")) {
    absl::StatusOr<CellVariable> cells =
        Named<CellVariable>(value["cells"], path + ".cells", &ParseCells);
    if (!cells.ok()) return cells.status();
    spec.cells = *cells;
  }
  if (value.contains("nonresponse")) {
    absl::StatusOr<bool> b = Bool(value["nonresponse"], path + ".nonresponse");
    if (!b.ok()) return b.status();
    spec.nonresponse = *b;
  }
  if (value.contains("dp_epsilon")) {
    absl::StatusOr<double> e =
        Number(value["dp_epsilon"], path + ".dp_epsilon");
    if (!e.ok()) return e.status();
    spec.dp_epsilon = *e;
  }
  if (value.contains("benchmarks")) {
    const json& b = value["benchmarks"];
    if (!b.is_object()) {
      return ConfigError(path + ".benchmarks", "expected an object");
    }
    for (const auto& [label, total] : b.items()) {
      absl::StatusOr<double> t =
          Number(total, absl::StrCat(path, ".benchmarks.", label));
      if (!t.ok()) return t.status();
      spec.benchmarks[label] = *t;
    }
  }
  if (value.contains("regularize")) {
    const std::string rpath = path + ".regularize";
    const json& r = value["regularize"];
    if (absl::Status s = CheckObject(r, rpath, {"lower", "upper"}); !s.ok()) {
      return s;
    }
    WeightBounds bounds;
    for (auto [key, target] : {std::pair{"lower", &bounds.lower},
                               std::pair{"upper", &bounds.upper}}) {
      absl::StatusOr<const json*> f = Field(r, rpath, key, true);
      if (!f.ok()) return f.status();
      absl::StatusOr<double> v = Number(**f, absl::StrCat(rpath, ".", key));
      if (!v.ok()) return v.status();
      *target = *v;
    }
    spec.regularize = bounds;
  }
  return spec;
}

absl::StatusOr<ImputationSpec> ParseImputation(const json& value,
                                               const std::string& path) {
  if (absl::Status s = CheckObject(
          value, path, {"method", "epsilon", "stochastic", "fit_rows"});
      !s.ok()) {
    return s;
  }
  ImputationSpec spec;
  absl::StatusOr<const json*> m = Field(value, path, "method", true);
  if (!m.ok()) return m.status();
  absl::StatusOr<ImputationMethod> method =
      Named<ImputationMethod>(**m, path + ".method", &ParseImputationMethod);
  if (!method.ok()) return method.status();
  spec.method = *method;
  const bool parametric = spec.method == ImputationMethod::kMean ||
                          spec.method == ImputationMethod::kRegression;
  if (value.contains("epsilon")) {
    if (!parametric) {
      return ConfigError(path + ".epsilon",
                         "only parametric imputation spends budget");
    }
    absl::StatusOr<double> e = Number(value["epsilon"], path + ".epsilon");
    if (!e.ok()) return e.status();
    spec.epsilon = *e;
  } else if (parametric) {
    return ConfigError(path + ".epsilon", "missing");
  }
  if (value.contains("stochastic")) {
    absl::StatusOr<bool> b = Bool(value["stochastic"], path + ".stochastic");
    if (!b.ok()) return b.status();
    spec.stochastic = *b;
  }
  if (value.contains("fit_rows")) {
    absl::StatusOr<FitRows> rows =
        Named<FitRows>(value["fit_rows"], path + ".fit_rows", &ParseFitRows);
    if (!rows.ok()) return rows.status();
    spec.fit_rows = *rows;
  }
  return spec;
}

absl::StatusOr<ReleaseSpec> ParseRelease(const json& value,
                                         const std::string& path,
                                         size_t index) {
  if (absl::Status s = CheckObject(
          value, path,
          {"label", "statistic", "epsilon", "sensitivity", "weight_max"});
      !s.ok()) {
    return s;
  }
  ReleaseSpec spec;
  absl::StatusOr<const json*> st = Field(value, path, "statistic", true);
  if (!st.ok()) return st.status();
  absl::StatusOr<EstimatorKind> kind =
      Named<EstimatorKind>(**st, path + ".statistic", &ParseEstimator);
  if (!kind.ok()) return kind.status();
  spec.statistic = *kind;
  spec.label = absl::StrCat(EstimatorName(*kind), "_", index);
  if (value.contains("label")) {
    absl::StatusOr<std::string> label = String(value["label"], path + ".label");
    if (!label.ok()) return label.status();
    spec.label = *label;
  }
  absl::StatusOr<const json*> e = Field(value, path, "epsilon", true);
  if (!e.ok()) return e.status();
  absl::StatusOr<double> eps = Number(**e, path + ".epsilon");
  if (!eps.ok()) return eps.status();
  spec.epsilon = *eps;
  if (value.contains("sensitivity")) {
    const json& s = value["sensitivity"];
    if (s.is_string() && s.get<std::string>() == "audit") {
      spec.audit_sensitivity = true;
    } else {
      absl::StatusOr<double> v = Number(s, path + ".sensitivity");
      if (!v.ok()) {
        return ConfigError(path + ".sensitivity",
                           "expected a number or \"audit\"");
      }
      spec.sensitivity = *v;
    }
  }
  if (value.contains("weight_max")) {
    absl::StatusOr<WeightMaxScope> scope = Named<WeightMaxScope>(
        value["weight_max"], path + ".weight_max", &ParseWeightMax);
    if (!scope.ok()) return scope.status();
    spec.weight_max = *scope;
  }
  return spec;
}

absl::Status WithStage(const char* stage, const absl::Status& status) {
  if (status.ok()) return status;
  return absl::Status(status.code(),
                      absl::StrCat("stage ", stage, ": ", status.message()));
}

bool IsParametric(ImputationMethod method) {
  return method == ImputationMethod::kMean ||
         method == ImputationMethod::kRegression;
}

// First stage index inside the mechanism boundary.
size_t BoundaryIndex(MechanismStart start) {
  switch (start) {
    case MechanismStart::kFrame:
      return 0;
    case MechanismStart::kRespondingSample:
      return 2;
    case MechanismStart::kProcessedData:
      return 4;
  }
  return 0;
}

std::string CellOf(const FrameRecord& record, CellVariable cells) {
  return cells == CellVariable::kStratum ? record.stratum : record.cluster;
}

absl::StatusOr<double> MaxDesignWeight(const DesignSpec& spec,
                                       const Frame& frame) {
  absl::StatusOr<std::vector<double>> pi = DesignInclusionProbs(spec, frame);
  if (!pi.ok()) return pi.status();
  return 1.0 / *std::min_element(pi->begin(), pi->end());
}

// Largest design weight any frame unit can take when its own size measure
// ranges over the universe.
absl::StatusOr<double> UniverseMaxDesignWeight(const DesignSpec& spec,
                                               const Frame& frame,
                                               const ValueUniverse& universe) {
  absl::StatusOr<double> best = MaxDesignWeight(spec, frame);
  if (!best.ok()) return best.status();
  std::vector<double> y(frame.size());
  std::vector<double> x(frame.size());
  for (size_t i = 0; i < frame.size(); ++i) {
    y[i] = frame[i].y.value_or(universe.y_min);
    x[i] = frame[i].x;
  }
  for (size_t i = 0; i < frame.size(); ++i) {
    for (double candidate : universe.x_values) {
      std::vector<double> x_alt = x;
      x_alt[i] = candidate;
      absl::StatusOr<std::vector<double>> pi =
          DesignInclusionProbs(spec, frame.WithValues(y, x_alt));
      if (!pi.ok()) continue;  // infeasible counterfactual frame
      *best = std::max(*best, 1.0 / (*pi)[i]);
    }
  }
  return best;
}

AuditInstance InstanceFromFrame(const Frame& frame,
                                const ValueUniverse& universe) {
  std::vector<double> y_grid = {universe.y_min};
  if (universe.y_max != universe.y_min) y_grid.push_back(universe.y_max);
  return AuditInstance{"config_frame",
                       frame,
                       AuditUniverse{std::move(y_grid), universe.x_values},
                       {},
                       DefaultEnumerationCap()};
}

}  // namespace

std::string MechanismStartName(MechanismStart start) {
  switch (start) {
    case MechanismStart::kFrame:
      return "frame";
    case MechanismStart::kRespondingSample:
      return "responding_sample";
    case MechanismStart::kProcessedData:
      return "processed_data";
  }
  return "unknown";
}

absl::StatusOr<MechanismStart> ParseMechanismStart(const std::string& name) {
  if (name == "frame") return MechanismStart::kFrame;
  if (name == "responding_sample" || name == "responding-sample") {
    return MechanismStart::kRespondingSample;
  }
  if (name == "processed_data" || name == "processed-data") {
    return MechanismStart::kProcessedData;
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unknown mechanism start '", name, "'"));
}

absl::StatusOr<NeighborRelation> SupportedRelation(MechanismStart start,
                                                   Invariant invariant) {
  if (start == MechanismStart::kProcessedData &&
      invariant == Invariant::kNone) {
    return NeighborRelation{Invariant::kNone, MutableFields::kFullRecord};
  }
  if (start == MechanismStart::kFrame && invariant == Invariant::kPopulation) {
    return NeighborRelation{Invariant::kPopulation, MutableFields::kFullRecord};
  }
  if (start == MechanismStart::kRespondingSample &&
      invariant == Invariant::kFrame) {
    return NeighborRelation{Invariant::kFrame, MutableFields::kYOnly};
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unsupported mechanism start / invariant combination (",
                   MechanismStartName(start), ", ", InvariantName(invariant),
                   "); supported: (processed_data, none), (frame, population), "
                   "(responding_sample, frame)"));
}

absl::StatusOr<DesignSpec> ParseDesignJson(absl::string_view text) {
  json value = json::parse(text.begin(), text.end(), nullptr, false);
  if (value.is_discarded()) {
    return absl::InvalidArgumentError("design is not valid JSON");
  }
  return ParseDesign(value, "$");
}

absl::StatusOr<PipelineConfig> ParseConfig(absl::string_view text,
                                           const std::string& base_dir) {
  json root = json::parse(text.begin(), text.end(), nullptr, false);
  if (root.is_discarded()) {
    return absl::InvalidArgumentError("config is not valid JSON");
  }
  const std::string path = "$";
  if (absl::Status s = CheckObject(
          root, path,
          {"frame", "universe", "population_size", "design", "response",
           "adjustment", "imputation", "releases", "mechanism_start",
           "invariant", "total_budget", "seed", "audit"});
      !s.ok()) {
    return s;
  }
  for (const char* key : {"frame", "universe", "design", "releases",
                          "mechanism_start", "invariant", "total_budget"}) {
    if (!root.contains(key)) {
      return ConfigError(absl::StrCat(path, ".", key), "missing");
    }
  }
  PipelineConfig config;

  absl::StatusOr<std::string> frame = String(root["frame"], "$.frame");
  if (!frame.ok()) return frame.status();
  std::filesystem::path frame_path(*frame);
  if (frame_path.is_relative() && !base_dir.empty()) {
    frame_path = std::filesystem::path(base_dir) / frame_path;
  }
  config.frame_path = frame_path.string();

  const json& u = root["universe"];
  if (absl::Status s =
          CheckObject(u, "$.universe", {"y_min", "y_max", "x_values"});
      !s.ok()) {
    return s;
  }
  double bounds[2];
  const char* bound_keys[2] = {"y_min", "y_max"};
  for (int i = 0; i < 2; ++i) {
    absl::StatusOr<const json*> f = Field(u, "$.universe", bound_keys[i], true);
    if (!f.ok()) return f.status();
    absl::StatusOr<double> v =
        Number(**f, absl::StrCat("$.universe.", bound_keys[i]));
    if (!v.ok()) return v.status();
    bounds[i] = *v;
  }
  std::vector<double> x_values = {1.0};
  if (u.contains("x_values")) {
    if (!u["x_values"].is_array()) {
      return ConfigError("$.universe.x_values", "expected an array");
    }
    x_values.clear();
    for (size_t i = 0; i < u["x_values"].size(); ++i) {
      absl::StatusOr<double> v = Number(
          u["x_values"][i], absl::StrCat("$.universe.x_values[", i, "]"));
      if (!v.ok()) return v.status();
      x_values.push_back(*v);
    }
  }
  absl::StatusOr<ValueUniverse> universe =
      ValueUniverse::Create(bounds[0], bounds[1], std::move(x_values));
  if (!universe.ok())
    return ConfigError("$.universe", universe.status().message());
  config.universe = *universe;

  if (root.contains("population_size")) {
    absl::StatusOr<int64_t> n =
        Integer(root["population_size"], "$.population_size");
    if (!n.ok()) return n.status();
    if (*n < 1) return ConfigError("$.population_size", "must be positive");
    config.population_size = *n;
  }

  absl::StatusOr<DesignSpec> design = ParseDesign(root["design"], "$.design");
  if (!design.ok()) return design.status();
  config.design = *design;

  if (root.contains("response")) {
    absl::StatusOr<ResponseModel> r =
        Named<ResponseModel>(root["response"], "$.response", &ParseResponse);
    if (!r.ok()) return r.status();
    config.response = *r;
  }
  if (root.contains("adjustment")) {
    absl::StatusOr<AdjustmentSpec> a =
        ParseAdjustment(root["adjustment"], "$.adjustment");
    if (!a.ok()) return a.status();
    config.adjustment = *a;
  }
  if (root.contains("imputation")) {
    absl::StatusOr<ImputationSpec> i =
        ParseImputation(root["imputation"], "$.imputation");
    if (!i.ok()) return i.status();
    config.imputation = *i;
  }

  const json& releases = root["releases"];
  if (!releases.is_array() || releases.empty()) {
    return ConfigError("$.releases", "expected a non-empty array");
  }
  for (size_t i = 0; i < releases.size(); ++i) {
    absl::StatusOr<ReleaseSpec> r =
        ParseRelease(releases[i], absl::StrCat("$.releases[", i, "]"), i);
    if (!r.ok()) return r.status();
    config.releases.push_back(*r);
  }

  absl::StatusOr<MechanismStart> start = Named<MechanismStart>(
      root["mechanism_start"], "$.mechanism_start", &ParseMechanismStart);
  if (!start.ok()) return start.status();
  config.start = *start;
  absl::StatusOr<Invariant> invariant =
      Named<Invariant>(root["invariant"], "$.invariant", &ParseInvariant);
  if (!invariant.ok()) return invariant.status();
  config.invariant = *invariant;
  if (absl::StatusOr<NeighborRelation> r =
          SupportedRelation(config.start, config.invariant);
      !r.ok()) {
    return ConfigError("$.mechanism_start", r.status().message());
  }

  absl::StatusOr<double> budget =
      Number(root["total_budget"], "$.total_budget");
  if (!budget.ok()) return budget.status();
  config.total_budget = *budget;

  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned()) {
      return ConfigError("$.seed", "expected a non-negative integer");
    }
    config.seed = root["seed"].get<uint64_t>();
  }

  if (root.contains("audit")) {
    const json& a = root["audit"];
    if (absl::Status s = CheckObject(
            a, "$.audit", {"design_stage", "threads", "base_mechanism"});
        !s.ok()) {
      return s;
    }
    if (a.contains("design_stage")) {
      absl::StatusOr<bool> b = Bool(a["design_stage"], "$.audit.design_stage");
      if (!b.ok()) return b.status();
      config.audit.design_stage = *b;
    }
    if (a.contains("threads")) {
      absl::StatusOr<int64_t> t = Integer(a["threads"], "$.audit.threads");
      if (!t.ok()) return t.status();
      if (*t < 1) return ConfigError("$.audit.threads", "must be positive");
      config.audit.threads = static_cast<size_t>(*t);
    }
    if (a.contains("base_mechanism")) {
      absl::StatusOr<BaseMechanismKind> k = Named<BaseMechanismKind>(
          a["base_mechanism"], "$.audit.base_mechanism", &ParseBaseMechanism);
      if (!k.ok()) return k.status();
      config.audit.base = *k;
    }
  }

  // Semantic checks.
  if (config.audit.design_stage && config.start != MechanismStart::kFrame) {
    return ConfigError("$.audit.design_stage",
                       "a design-stage audit needs sampling inside the "
                       "mechanism (mechanism_start = frame)");
  }
  std::vector<double> epsilons;
  for (size_t i = 0; i < config.releases.size(); ++i) {
    const ReleaseSpec& r = config.releases[i];
    const std::string rpath = absl::StrCat("$.releases[", i, "]");
    if (!(r.epsilon > 0.0) || !std::isfinite(r.epsilon)) {
      return ConfigError(rpath + ".epsilon", "must be positive and finite");
    }
    if (r.sensitivity &&
        (!(*r.sensitivity >= 0.0) || !std::isfinite(*r.sensitivity))) {
      return ConfigError(rpath + ".sensitivity", "must be non-negative");
    }
    if (r.audit_sensitivity && (r.statistic == EstimatorKind::kUnweightedMean ||
                                config.start != MechanismStart::kFrame)) {
      return ConfigError(rpath + ".sensitivity",
                         "\"audit\" applies to weighted statistics with "
                         "mechanism_start = frame");
    }
    epsilons.push_back(r.epsilon);
  }
  if (IsParametric(config.imputation.method)) {
    if (!(config.imputation.epsilon > 0.0)) {
      return ConfigError("$.imputation.epsilon", "must be positive");
    }
    epsilons.push_back(config.imputation.epsilon);
  }
  if (config.adjustment && config.adjustment->dp_epsilon) {
    if (!(*config.adjustment->dp_epsilon > 0.0)) {
      return ConfigError("$.adjustment.dp_epsilon", "must be positive");
    }
    epsilons.push_back(*config.adjustment->dp_epsilon);
  }
  PrivacyLedger planned;
  for (double e : epsilons) planned.Charge("planned", *PrivacyLoss::Create(e));
  const double spent = ComposeSequential(planned)->epsilon();
  if (std::abs(spent - config.total_budget) >
      kBudgetTolerance * std::max(1.0, std::abs(config.total_budget))) {
    return ConfigError(
        "$.total_budget",
        absl::StrCat("budget mismatch: the configured epsilons sum to ",
                     ShortestDouble(spent), " but total_budget is ",
                     ShortestDouble(config.total_budget)));
  }
  return config;
}

absl::StatusOr<PipelineConfig> ReadConfig(const std::string& path) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return text.status();
  return ParseConfig(*text, std::filesystem::path(path).parent_path().string());
}

absl::StatusOr<std::vector<double>> DesignInclusionProbs(const DesignSpec& spec,
                                                         const Frame& frame) {
  absl::StatusOr<std::vector<double>> outer =
      InclusionProbs(spec.design, frame);
  if (!outer.ok() || !spec.within) return outer;
  std::vector<double> pi = *outer;
  for (const std::string& label : frame.ClusterLabels()) {
    std::vector<FrameRecord> members;
    std::vector<size_t> positions;
    for (size_t i = 0; i < frame.size(); ++i) {
      if (frame[i].cluster == label) {
        members.push_back(frame[i]);
        positions.push_back(i);
      }
    }
    absl::StatusOr<Frame> sub = Frame::Create(std::move(members));
    if (!sub.ok()) return sub.status();
    absl::StatusOr<std::vector<double>> inner =
        InclusionProbs(*spec.within, *sub);
    if (!inner.ok()) {
      return absl::Status(
          inner.status().code(),
          absl::StrCat("cluster ", label, ": ", inner.status().message()));
    }
    for (size_t k = 0; k < positions.size(); ++k) {
      pi[positions[k]] *= (*inner)[k];
    }
  }
  return pi;
}

absl::StatusOr<WeightedSample> DrawDesign(const DesignSpec& spec,
                                          const Frame& frame, Rng& rng) {
  if (!spec.within) return Draw(spec.design, frame, rng);
  absl::StatusOr<std::vector<double>> pi = DesignInclusionProbs(spec, frame);
  if (!pi.ok()) return pi.status();
  absl::StatusOr<WeightedSample> clusters = Draw(spec.design, frame, rng);
  if (!clusters.ok()) return clusters.status();
  std::vector<std::string> selected;
  for (const SampledUnit& u : clusters->units) {
    const std::string& label = frame[u.index].cluster;
    if (std::find(selected.begin(), selected.end(), label) == selected.end()) {
      selected.push_back(label);
    }
  }
  std::sort(selected.begin(), selected.end());
  std::vector<size_t> positions;
  for (const std::string& label : selected) {
    std::vector<FrameRecord> members;
    std::vector<size_t> member_positions;
    for (size_t i = 0; i < frame.size(); ++i) {
      if (frame[i].cluster == label) {
        members.push_back(frame[i]);
        member_positions.push_back(i);
      }
    }
    absl::StatusOr<Frame> sub = Frame::Create(std::move(members));
    if (!sub.ok()) return sub.status();
    absl::StatusOr<WeightedSample> inner = Draw(*spec.within, *sub, rng);
    if (!inner.ok()) return inner.status();
    for (const SampledUnit& u : inner->units) {
      for (int64_t m = 0; m < u.multiplicity; ++m) {
        positions.push_back(member_positions[u.index]);
      }
    }
  }
  std::sort(positions.begin(), positions.end());
  return MakeWeightedSample(frame, positions, *pi);
}

absl::StatusOr<RunReport> RunPipeline(const PipelineConfig& config,
                                      uint64_t seed) {
  absl::StatusOr<Frame> frame = ReadFrameCsv(config.frame_path);
  if (!frame.ok()) return WithStage("frame", frame.status());
  return RunPipeline(config, *frame, seed);
}

absl::StatusOr<RunReport> RunPipeline(const PipelineConfig& config,
                                      const Frame& frame, uint64_t seed) {
  absl::StatusOr<NeighborRelation> relation =
      SupportedRelation(config.start, config.invariant);
  if (!relation.ok()) return relation.status();
  if (absl::Status s = ValidateFrame(frame, config.universe); !s.ok()) {
    return WithStage("frame", s);
  }
  const int64_t population =
      config.population_size.value_or(static_cast<int64_t>(frame.size()));

  RunReport report;
  report.seed = seed;
  report.mechanism_start = MechanismStartName(config.start);
  report.invariant = InvariantName(relation->invariant);
  report.mutable_fields = MutableFieldsName(relation->fields);
  PrivacyLedger& ledger = report.ledger;

  const AdjustmentSpec adjustment =
      config.adjustment.value_or(AdjustmentSpec{});
  const bool nonresponse_adjusted =
      config.adjustment.has_value() && adjustment.nonresponse &&
      config.response == ResponseModel::kPropensity;
  const bool adjusted = nonresponse_adjusted ||
                        !adjustment.benchmarks.empty() ||
                        adjustment.regularize.has_value();
  const bool imputed = config.imputation.method != ImputationMethod::kNone;
  const std::vector<std::pair<const char*, bool>> stages = {
      {"draw", true},      {"respond", true},  {"adjust", adjusted},
      {"impute", imputed}, {"estimate", true}, {"release", true}};
  const size_t boundary = BoundaryIndex(config.start);
  for (size_t i = 0; i < stages.size(); ++i) {
    report.stage_trace.push_back(
        {stages[i].first, stages[i].second, i >= boundary});
  }
  const bool adjust_inside = boundary <= 2;
  const bool impute_inside = boundary <= 3;

  // Draw.
  Rng draw_rng = Substream(seed, kDrawStream);
  absl::StatusOr<WeightedSample> sample =
      DrawDesign(config.design, frame, draw_rng);
  if (!sample.ok()) return WithStage("draw", sample.status());
  if (sample->empty()) {
    return WithStage("draw", absl::FailedPreconditionError("empty sample"));
  }

  // Respond.
  Rng response_rng = Substream(seed, kResponseStream);
  std::vector<SampledUnit> respondents;
  std::vector<ResponseUnit> response_units;
  for (const SampledUnit& u : sample->units) {
    const FrameRecord& record = frame[u.index];
    const bool responded = config.response == ResponseModel::kFull ||
                           Bernoulli(response_rng, record.propensity);
    response_units.push_back(
        {record.id, CellOf(record, adjustment.cells), responded});
    if (responded) respondents.push_back(u);
  }
  if (respondents.empty()) {
    return WithStage(
        "respond", absl::FailedPreconditionError("no sampled unit responded"));
  }

  // Adjust.
  std::vector<double> weights;
  std::vector<std::string> cells;
  for (const SampledUnit& u : respondents) {
    weights.push_back(u.weight);
    cells.push_back(CellOf(frame[u.index], adjustment.cells));
  }
  const std::vector<double> base_weights = weights;
  if (nonresponse_adjusted) {
    Rng adjust_rng = Substream(seed, kAdjustStream);
    absl::StatusOr<CellPropensities> propensities =
        adjustment.dp_epsilon
            ? EstimatePropensitiesCellsDp(
                  response_units, *PrivacyLoss::Create(*adjustment.dp_epsilon),
                  adjust_rng, ledger)
            : EstimatePropensitiesCells(response_units);
    if (!propensities.ok()) return WithStage("adjust", propensities.status());
    absl::StatusOr<std::vector<double>> w =
        NonresponseAdjust(weights, cells, *propensities);
    if (!w.ok()) return WithStage("adjust", w.status());
    weights = *std::move(w);
  } else if (adjustment.dp_epsilon) {
    // The budget was declared, so spend it even if nothing needs adjusting.
    Rng adjust_rng = Substream(seed, kAdjustStream);
    absl::StatusOr<CellPropensities> propensities = EstimatePropensitiesCellsDp(
        response_units, *PrivacyLoss::Create(*adjustment.dp_epsilon),
        adjust_rng, ledger);
    if (!propensities.ok()) return WithStage("adjust", propensities.status());
  }
  if (!adjustment.benchmarks.empty()) {
    absl::StatusOr<std::vector<double>> w =
        Poststratify(weights, cells, adjustment.benchmarks);
    if (!w.ok()) return WithStage("adjust", w.status());
    weights = *std::move(w);
  }
  if (adjustment.regularize) {
    absl::StatusOr<std::vector<double>> w = RegularizeWeights(
        weights, adjustment.regularize->lower, adjustment.regularize->upper);
    if (!w.ok()) return WithStage("adjust", w.status());
    weights = *std::move(w);
  }

  // Impute.
  std::vector<std::optional<double>> y_observed;
  for (const SampledUnit& u : respondents)
    y_observed.push_back(frame[u.index].y);
  std::vector<double> y(respondents.size());
  const ImputationSpec& imputation = config.imputation;
  if (imputation.method == ImputationMethod::kNone) {
    for (size_t i = 0; i < respondents.size(); ++i) {
      if (!y_observed[i]) {
        return WithStage(
            "impute", absl::FailedPreconditionError(absl::StrCat(
                          "unit ", frame[respondents[i].index].id,
                          " has a missing y and no imputation is configured")));
      }
      y[i] = *y_observed[i];
    }
  } else {
    ImputationData data;
    std::vector<VariableBounds> bounds = {
        {config.universe.y_min, config.universe.y_max}};
    const bool regression = imputation.method == ImputationMethod::kRegression;
    data.variables = {"y"};
    if (regression) {
      data.variables.push_back("x");
      const auto [x_lo, x_hi] = std::minmax_element(
          config.universe.x_values.begin(), config.universe.x_values.end());
      bounds.push_back({*x_lo, *x_hi});
    }
    for (size_t i = 0; i < respondents.size(); ++i) {
      Record row = {y_observed[i]};
      if (regression) row.push_back(frame[respondents[i].index].x);
      data.rows.push_back(std::move(row));
    }
    Rng impute_rng = Substream(seed, kImputeStream);
    if (imputation.method == ImputationMethod::kHotDeck) {
      absl::StatusOr<HotDeckResult> filled = HotDeck(data, impute_rng);
      if (!filled.ok()) return WithStage("impute", filled.status());
      for (size_t i = 0; i < y.size(); ++i) y[i] = *filled->filled.rows[i][0];
    } else {
      const FitOptions options{imputation.fit_rows, imputation.stochastic};
      const PrivacyLoss eps1 = *PrivacyLoss::Create(imputation.epsilon);
      absl::StatusOr<ImputationParams> params =
          regression
              ? FitDpRegression(data, RegressionSpec{0, {1}}, bounds, eps1,
                                impute_rng, ledger, options)
              : FitDpMeanModel(data, bounds, eps1, impute_rng, ledger, options);
      if (!params.ok()) return WithStage("impute", params.status());
      const uint64_t record_seed = SplitMix64(seed ^ kImputeStream);
      for (size_t i = 0; i < y.size(); ++i) {
        Rng record_rng = Substream(
            record_seed, static_cast<uint64_t>(frame[respondents[i].index].id));
        absl::StatusOr<std::vector<double>> filled =
            ImputeParametric(data.rows[i], *params, record_rng);
        if (!filled.ok()) return WithStage("impute", filled.status());
        y[i] = (*filled)[0];
      }
    }
  }

  // Whether the final weights can differ between neighbouring datasets.
  bool weights_fixed = true;
  if (config.start == MechanismStart::kFrame) {
    weights_fixed = HasDataIndependentWeights(config.design.design) &&
                    (!config.design.within ||
                     HasDataIndependentWeights(*config.design.within)) &&
                    !(nonresponse_adjusted && adjust_inside);
  }
  const bool hot_deck_inside =
      imputation.method == ImputationMethod::kHotDeck && impute_inside;

  // Estimate and release.
  for (size_t r = 0; r < config.releases.size(); ++r) {
    const ReleaseSpec& spec = config.releases[r];
    const PrivacyLoss eps = *PrivacyLoss::Create(spec.epsilon);
    Rng release_rng = Substream(seed, kReleaseStream + r);
    if (hot_deck_inside && !spec.sensitivity) {
      return WithStage(
          "release",
          absl::FailedPreconditionError(absl::StrCat(
              spec.label,
              ": hot-deck imputation inside the mechanism makes imputed "
              "values depend on donor records; supply an audited sensitivity "
              "or move the mechanism start after imputation")));
    }
    absl::StatusOr<DpRelease> release;
    if (spec.statistic == EstimatorKind::kUnweightedMean) {
      if (spec.sensitivity) {
        absl::StatusOr<HtEstimate> mean = UnweightedMean(y);
        if (!mean.ok()) return WithStage("estimate", mean.status());
        absl::StatusOr<Sensitivity> delta =
            Sensitivity::Create(*spec.sensitivity);
        if (!delta.ok()) return WithStage("release", delta.status());
        DpRelease out;
        out.sensitivity = delta->value();
        out.source = SensitivitySource::kAudited;
        out.noise_scale = LaplaceScale(*delta, eps).scale();
        out.value = ReleaseLaplace(mean->value, *delta, eps, release_rng);
        ledger.Charge(spec.label, eps, *delta);
        release = out;
      } else {
        release = DpUnweightedMean(y, config.universe, eps, release_rng, ledger,
                                   spec.label);
      }
    } else {
      DpHtOptions options;
      options.label = spec.label;
      options.weights_data_independent = weights_fixed;
      double max_weight = *std::max_element(weights.begin(), weights.end());
      absl::StatusOr<double> design_max =
          spec.weight_max == WeightMaxScope::kFrame
              ? MaxDesignWeight(config.design, frame)
              : UniverseMaxDesignWeight(config.design, frame, config.universe);
      if (!design_max.ok()) return WithStage("estimate", design_max.status());
      double adjustment_ratio = 1.0;
      for (size_t i = 0; i < weights.size(); ++i) {
        adjustment_ratio =
            std::max(adjustment_ratio, weights[i] / base_weights[i]);
      }
      max_weight = std::max(max_weight, *design_max * adjustment_ratio);
      options.max_weight = max_weight;
      if (spec.sensitivity) {
        options.audited = *Sensitivity::Create(*spec.sensitivity);
      } else if (spec.audit_sensitivity) {
        if (config.design.within || adjusted) {
          return WithStage(
              "estimate",
              absl::UnimplementedError(
                  "oracle sensitivity covers single-stage designs with "
                  "design weights only"));
        }
        absl::StatusOr<SensitivityReport> audited =
            SampleCoupledHtMeanSensitivity(
                InstanceFromFrame(frame, config.universe), *relation,
                config.design.design, DesignWeightFn(config.design.design));
        if (!audited.ok()) return WithStage("estimate", audited.status());
        double delta = audited->sensitivity * static_cast<double>(frame.size());
        if (spec.statistic == EstimatorKind::kHtMean) {
          delta /= static_cast<double>(population);
        }
        options.audited = *Sensitivity::Create(delta);
      }
      release = spec.statistic == EstimatorKind::kHtMean
                    ? DpHtMean(weights, y, population, config.universe,
                               *relation, eps, release_rng, ledger, options)
                    : DpHtTotal(weights, y, config.universe, *relation, eps,
                                release_rng, ledger, options);
    }
    if (!release.ok()) return WithStage("release", release.status());
    report.releases.push_back(
        {spec.label, EstimatorName(spec.statistic), release->value,
         spec.epsilon, release->sensitivity,
         SensitivitySourceName(release->source), release->noise_scale});
  }

  absl::StatusOr<PrivacyLoss> total = ComposeSequential(ledger);
  if (!total.ok()) return total.status();
  report.ledger_total = total->epsilon();

  if (config.audit.design_stage) {
    if (config.design.within) {
      return WithStage("audit", absl::UnimplementedError(
                                    "design-stage audits cover single-stage "
                                    "designs only"));
    }
    DesignAudit audit;
    audit.base_mechanism = BaseMechanismName(config.audit.base);
    const AuditInstance instance = InstanceFromFrame(frame, config.universe);
    for (const ReleaseSpec& spec : config.releases) {
      absl::StatusOr<EffectiveEpsilonReport> e = AuditAmplification(
          instance, *relation, config.audit.base, spec.epsilon,
          {.design = config.design.design, .known_member = std::nullopt},
          {.threads = config.audit.threads, .target_record = std::nullopt});
      if (!e.ok()) return WithStage("audit", e.status());
      audit.entries.push_back(
          {spec.label, spec.epsilon, e->eps_effective, e->infinite});
    }
    report.design_audit = std::move(audit);
  }

  report.notes.push_back(
      "ledger total is the sequential-composition sum; it assumes independent "
      "noise across releases and does not account for dependence through a "
      "sample shared across runs");
  return report;
}

}  // namespace survey_dp
