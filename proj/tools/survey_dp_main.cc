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

// Command-line front end: runs pipelines, audits and the non-private sample
// and impute utilities.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "json.hpp"
#include "survey_dp/amplification.h"
#include "survey_dp/audit.h"
#include "survey_dp/audit_instances.h"
#include "survey_dp/designs.h"
#include "survey_dp/dp_core.h"
#include "survey_dp/format.h"
#include "survey_dp/frame.h"
#include "survey_dp/impute.h"
#include "survey_dp/pipeline.h"
#include "survey_dp/report.h"

namespace survey_dp {
namespace {

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;

int Fail(const absl::Status& status) {
  nlohmann::ordered_json error = {
      {"error",
       {{"code", absl::StatusCodeToString(status.code())},
        {"message", std::string(status.message())}}}};
  std::cerr << error.dump() << "\n";
  return kExitError;
}

absl::Status WriteOutput(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return absl::OkStatus();
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) return absl::UnavailableError(absl::StrCat("cannot write ", path));
  out << text;
  return out ? absl::OkStatus()
             : absl::UnavailableError(absl::StrCat("failed writing ", path));
}

// Design flags shared by several subcommands.
struct DesignFlags {
  std::string type = "srswor";
  int64_t n = 1;
  double rate = 0.5;
  int64_t clusters = 1;
  std::string allocation = "proportional";
  std::string ordering = "frame_order";

  void Register(CLI::App* app) {
    app->add_option("--design", type,
                    "srswr | srswor | poisson | stratified | cluster | pps | "
                    "systematic");
    app->add_option("--n", n, "sample size");
    app->add_option("--rate", rate, "Poisson sampling rate");
    app->add_option("--clusters", clusters, "clusters to select");
    app->add_option("--allocation", allocation, "proportional | neyman");
    app->add_option("--ordering", ordering, "frame_order | random_order");
  }

  absl::StatusOr<SamplingDesign> Build() const {
    nlohmann::json spec = {{"type", type}};
    if (type == "poisson") {
      spec["rate"] = rate;
    } else if (type == "cluster") {
      spec["clusters"] = clusters;
    } else {
      spec["n"] = n;
      if (type == "stratified") spec["allocation"] = allocation;
      if (type == "systematic") spec["ordering"] = ordering;
    }
    absl::StatusOr<DesignSpec> parsed = ParseDesignJson(spec.dump());
    if (!parsed.ok()) return parsed.status();
    return parsed->design;
  }
};

struct RelationFlags {
  std::string invariant = "none";
  std::string fields = "y";

  void Register(CLI::App* app) {
    app->add_option("--invariant", invariant, "none | population | frame");
    app->add_option("--fields", fields, "y | full");
  }

  absl::StatusOr<NeighborRelation> Build() const {
    absl::StatusOr<Invariant> inv = ParseInvariant(invariant);
    if (!inv.ok()) return inv.status();
    absl::StatusOr<MutableFields> f = ParseMutableFields(fields);
    if (!f.ok()) return f.status();
    return NeighborRelation{*inv, *f};
  }
};

int RunCommand(const std::string& config_path, std::optional<uint64_t> seed,
               std::optional<size_t> threads, const std::string& out) {
  absl::StatusOr<PipelineConfig> config = ReadConfig(config_path);
  if (!config.ok()) return Fail(config.status());
  if (threads) config->audit.threads = *threads;
  absl::StatusOr<RunReport> report =
      RunPipeline(*config, seed.value_or(config->seed));
  if (!report.ok()) return Fail(report.status());
  if (absl::Status s = WriteOutput(out, RunReportToJson(*report)); !s.ok()) {
    return Fail(s);
  }
  return 0;
}

int ValidateCommand(const std::string& config_path) {
  absl::StatusOr<PipelineConfig> config = ReadConfig(config_path);
  if (!config.ok()) return Fail(config.status());
  std::cout << "{\"valid\":true}\n";
  return 0;
}

struct SensitivityFlags {
  std::string instance = "all";
  std::string statistic = "mean";
  std::string weights;
  int64_t population = 0;
  std::string out;
};

absl::StatusOr<SensitivityReport> AuditOne(const AuditInstance& instance,
                                           const NeighborRelation& relation,
                                           const SensitivityFlags& flags,
                                           const DesignFlags& design_flags) {
  if (flags.statistic == "mean") {
    return ExactSensitivityReport(instance, relation, MeanOfY());
  }
  if (flags.statistic == "proportion") {
    return ExactSensitivityReport(
        instance, relation, ProportionAtTop(instance.universe.y_grid.back()));
  }
  if (flags.statistic == "ht_fixed") {
    std::vector<double> w;
    for (absl::string_view part : absl::StrSplit(flags.weights, ',')) {
      double v;
      if (!absl::SimpleAtod(part, &v)) {
        return absl::InvalidArgumentError("--weights must be numbers");
      }
      w.push_back(v);
    }
    const int64_t population =
        flags.population > 0 ? flags.population
                             : static_cast<int64_t>(instance.frame.size());
    return ExactSensitivityReport(instance, relation,
                                  FixedWeightHtMean(std::move(w), population));
  }
  if (flags.statistic == "ht_design") {
    absl::StatusOr<SamplingDesign> design = design_flags.Build();
    if (!design.ok()) return design.status();
    return SampleCoupledHtMeanSensitivity(instance, relation, *design,
                                          DesignWeightFn(*design));
  }
  if (flags.statistic == "hot_deck") {
    return HotDeckMeanSensitivity(instance, relation);
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unknown statistic '", flags.statistic, "'"));
}

int AuditSensitivityCommand(const SensitivityFlags& flags,
                            const RelationFlags& relation_flags,
                            const DesignFlags& design_flags) {
  absl::StatusOr<NeighborRelation> relation = relation_flags.Build();
  if (!relation.ok()) return Fail(relation.status());
  std::vector<AuditInstance> instances;
  if (flags.instance == "all") {
    instances = BundledInstances();
  } else {
    absl::StatusOr<AuditInstance> instance = FindInstance(flags.instance);
    if (!instance.ok()) return Fail(instance.status());
    instances.push_back(*std::move(instance));
  }
  std::string csv = "instance,statistic,invariant,fields,sensitivity,status\n";
  for (const AuditInstance& instance : instances) {
    absl::StatusOr<SensitivityReport> report =
        AuditOne(instance, *relation, flags, design_flags);
    absl::StrAppend(
        &csv, instance.name, ",", flags.statistic, ",",
        InvariantName(relation->invariant), ",",
        MutableFieldsName(relation->fields), ",",
        report.ok() ? ShortestDouble(report->sensitivity) : "", ",",
        report.ok() ? "ok" : absl::StrCat("error: ", report.status().message()),
        "\n");
    if (!report.ok() && flags.instance != "all") return Fail(report.status());
  }
  if (absl::Status s = WriteOutput(flags.out, csv); !s.ok()) return Fail(s);
  return 0;
}

struct AmplificationFlags {
  std::string instance = "uniform4";
  std::vector<double> eps = {0.1};
  std::string mechanism = "geometric";
  std::optional<size_t> known_member;
  size_t threads = 1;
  std::string out;
};

int AuditAmplificationCommand(const AmplificationFlags& flags,
                              const RelationFlags& relation_flags,
                              const DesignFlags& design_flags) {
  absl::StatusOr<NeighborRelation> relation = relation_flags.Build();
  if (!relation.ok()) return Fail(relation.status());
  absl::StatusOr<SamplingDesign> design = design_flags.Build();
  if (!design.ok()) return Fail(design.status());
  absl::StatusOr<AuditInstance> instance = FindInstance(flags.instance);
  if (!instance.ok()) return Fail(instance.status());
  absl::StatusOr<BaseMechanismKind> kind = ParseBaseMechanism(flags.mechanism);
  if (!kind.ok()) return Fail(kind.status());
  std::vector<SweepRow> rows;
  if (flags.known_member) {
    for (double eps : flags.eps) {
      SweepRow row{DesignName(*design), eps, 0.0, 0.0, "ok"};
      absl::StatusOr<std::vector<double>> pi =
          InclusionProbs(*design, instance->frame);
      if (pi.ok())
        row.rate_or_maxpi = *std::max_element(pi->begin(), pi->end());
      absl::StatusOr<EffectiveEpsilonReport> report = AuditAmplification(
          *instance, *relation, *kind, eps,
          {.design = *design, .known_member = flags.known_member},
          {.threads = flags.threads, .target_record = std::nullopt});
      if (report.ok()) {
        row.eps_effective = report->eps_effective;
        if (report->infinite) row.status = "infinite";
      } else {
        row.status = std::string(report.status().message());
      }
      rows.push_back(row);
    }
  } else {
    rows = AmplificationSweep(
        {{DesignName(*design), *design, *instance}}, flags.eps, *kind,
        *relation, {.threads = flags.threads, .target_record = std::nullopt});
  }
  if (absl::Status s = WriteOutput(flags.out, FormatSweepCsv(rows)); !s.ok()) {
    return Fail(s);
  }
  return 0;
}

int SampleCommand(const std::string& frame_path, const DesignFlags& flags,
                  uint64_t seed, const std::string& out) {
  absl::StatusOr<Frame> frame = ReadFrameCsv(frame_path);
  if (!frame.ok()) return Fail(frame.status());
  absl::StatusOr<SamplingDesign> design = flags.Build();
  if (!design.ok()) return Fail(design.status());
  Rng rng(seed);
  absl::StatusOr<WeightedSample> sample = Draw(*design, *frame, rng);
  if (!sample.ok()) return Fail(sample.status());
  std::string csv = "id,pi,weight,multiplicity\n";
  for (const SampledUnit& u : sample->units) {
    absl::StrAppend(&csv, u.id, ",", ShortestDouble(u.pi), ",",
                    ShortestDouble(u.weight), ",", u.multiplicity, "\n");
  }
  if (absl::Status s = WriteOutput(out, csv); !s.ok()) return Fail(s);
  return 0;
}

struct ImputeFlags {
  std::string frame;
  std::string method = "mean";
  double epsilon = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;
  std::string out;
};

int ImputeCommand(const ImputeFlags& flags, uint64_t seed) {
  absl::StatusOr<Frame> frame = ReadFrameCsv(flags.frame);
  if (!frame.ok()) return Fail(frame.status());
  ImputationData data;
  data.variables = {"y", "x"};
  double x_lo = (*frame)[0].x;
  double x_hi = x_lo;
  for (const FrameRecord& r : frame->records()) {
    data.rows.push_back({r.y, r.x});
    x_lo = std::min(x_lo, r.x);
    x_hi = std::max(x_hi, r.x);
  }
  const std::vector<VariableBounds> bounds = {{flags.y_min, flags.y_max},
                                              {x_lo, x_hi}};
  Rng rng(seed);
  PrivacyLedger ledger;
  std::vector<double> y(frame->size());
  if (flags.method == "hot_deck") {
    absl::StatusOr<HotDeckResult> filled = HotDeck(data, rng);
    if (!filled.ok()) return Fail(filled.status());
    for (size_t i = 0; i < y.size(); ++i) y[i] = *filled->filled.rows[i][0];
  } else {
    absl::StatusOr<PrivacyLoss> eps = PrivacyLoss::Create(flags.epsilon);
    if (!eps.ok()) return Fail(eps.status());
    absl::StatusOr<ImputationParams> params;
    if (flags.method == "mean") {
      ImputationData y_only{{"y"}, {}};
      for (const Record& row : data.rows) y_only.rows.push_back({row[0]});
      params = FitDpMeanModel(y_only, {bounds[0]}, *eps, rng, ledger);
      data = std::move(y_only);
    } else if (flags.method == "regression") {
      params = FitDpRegression(data, RegressionSpec{0, {1}}, bounds, *eps, rng,
                               ledger);
    } else {
      return Fail(absl::InvalidArgumentError(
          absl::StrCat("unknown method '", flags.method, "'")));
    }
    if (!params.ok()) return Fail(params.status());
    for (size_t i = 0; i < y.size(); ++i) {
      Rng record_rng = Substream(seed, static_cast<uint64_t>((*frame)[i].id));
      absl::StatusOr<std::vector<double>> filled =
          ImputeParametric(data.rows[i], *params, record_rng);
      if (!filled.ok()) return Fail(filled.status());
      y[i] = (*filled)[0];
    }
  }
  std::vector<double> x;
  for (const FrameRecord& r : frame->records()) x.push_back(r.x);
  if (absl::Status s =
          WriteOutput(flags.out, FormatFrameCsv(frame->WithValues(y, x)));
      !s.ok()) {
    return Fail(s);
  }
  return 0;
}

int Main(int argc, char** argv) {
  CLI::App app{"Survey pipelines under differential privacy"};
  app.require_subcommand(1);

  std::optional<uint64_t> seed;
  std::string config_path;
  std::string out;
  std::optional<size_t> threads;

  CLI::App* run = app.add_subcommand("run", "run a pipeline config");
  run->add_option("config", config_path, "pipeline JSON config")->required();
  run->add_option("--seed", seed, "overrides the config seed");
  run->add_option("--out", out, "report path (default stdout)");
  run->add_option("--threads", threads, "audit threads");

  CLI::App* validate =
      app.add_subcommand("validate-config", "check a pipeline config");
  validate->add_option("config", config_path, "pipeline JSON config")
      ->required();
  validate->add_option("--seed", seed, "accepted for uniformity");

  SensitivityFlags sensitivity_flags;
  RelationFlags sensitivity_relation;
  DesignFlags sensitivity_design;
  CLI::App* audit_sensitivity = app.add_subcommand(
      "audit-sensitivity", "exact sensitivity on bundled instances");
  audit_sensitivity->add_option("--instance", sensitivity_flags.instance,
                                "instance name or 'all'");
  audit_sensitivity->add_option(
      "--statistic", sensitivity_flags.statistic,
      "mean | proportion | ht_fixed | ht_design | hot_deck");
  audit_sensitivity->add_option("--weights", sensitivity_flags.weights,
                                "comma-separated fixed weights (ht_fixed)");
  audit_sensitivity->add_option("--population", sensitivity_flags.population,
                                "population size N (ht_fixed)");
  audit_sensitivity->add_option("--out", sensitivity_flags.out, "CSV path");
  audit_sensitivity->add_option("--seed", seed, "accepted for uniformity");
  sensitivity_relation.Register(audit_sensitivity);
  sensitivity_design.Register(audit_sensitivity);

  AmplificationFlags amplification_flags;
  RelationFlags amplification_relation;
  DesignFlags amplification_design;
  CLI::App* audit_amplification = app.add_subcommand(
      "audit-amplification", "exact effective epsilon of sample-then-release");
  audit_amplification->add_option("--instance", amplification_flags.instance,
                                  "instance name");
  audit_amplification
      ->add_option("--eps", amplification_flags.eps, "nominal epsilon(s)")
      ->delimiter(',');
  audit_amplification->add_option("--mechanism", amplification_flags.mechanism,
                                  "geometric | randomized_response");
  audit_amplification->add_option("--known-member",
                                  amplification_flags.known_member,
                                  "record known to be sampled");
  audit_amplification->add_option("--threads", amplification_flags.threads,
                                  "enumeration threads");
  audit_amplification->add_option("--out", amplification_flags.out, "CSV path");
  audit_amplification->add_option("--seed", seed, "accepted for uniformity");
  amplification_relation.Register(audit_amplification);
  amplification_design.Register(audit_amplification);

  std::string frame_path;
  DesignFlags sample_design;
  CLI::App* sample =
      app.add_subcommand("sample", "draw a sample (non-private)");
  sample->add_option("--frame", frame_path, "frame CSV")->required();
  sample->add_option("--seed", seed, "random seed");
  sample->add_option("--out", out, "CSV path");
  sample_design.Register(sample);

  ImputeFlags impute_flags;
  CLI::App* impute =
      app.add_subcommand("impute", "fill missing y in a frame CSV");
  impute->add_option("--frame", impute_flags.frame, "frame CSV")->required();
  impute->add_option("--method", impute_flags.method,
                     "mean | regression | hot_deck");
  impute->add_option("--epsilon", impute_flags.epsilon, "fit budget");
  impute->add_option("--y-min", impute_flags.y_min, "lower y bound");
  impute->add_option("--y-max", impute_flags.y_max, "upper y bound");
  impute->add_option("--out", impute_flags.out, "CSV path");
  impute->add_option("--seed", seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (*run) return RunCommand(config_path, seed, threads, out);
  if (*validate) return ValidateCommand(config_path);
  if (*audit_sensitivity) {
    return AuditSensitivityCommand(sensitivity_flags, sensitivity_relation,
                                   sensitivity_design);
  }
  if (*audit_amplification) {
    return AuditAmplificationCommand(
        amplification_flags, amplification_relation, amplification_design);
  }
  if (*sample) {
    return SampleCommand(frame_path, sample_design, seed.value_or(0), out);
  }
  if (*impute) return ImputeCommand(impute_flags, seed.value_or(0));
  return kExitUsage;
}

}  // namespace
}  // namespace survey_dp

int main(int argc, char** argv) { return survey_dp::Main(argc, argv); }
