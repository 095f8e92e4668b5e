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

#include "survey_dp/audit.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <thread>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace survey_dp {
namespace {

absl::Status CheckPairCap(const DatasetSpace& space, size_t cap) {
  if (space.PairCount() > static_cast<double>(cap)) {
    return absl::ResourceExhaustedError(
        absl::StrCat("intractable enumeration: ", space.PairCount(),
                     " neighbour pairs exceed the cap of ", cap));
  }
  return absl::OkStatus();
}

double L1Distance(absl::Span<const double> a, absl::Span<const double> b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

// Running maximum with the lexicographically smallest key among ties. Keys
// are visited in increasing order, so a strict comparison suffices.
struct Best {
  double value = -1.0;
  size_t base = 0;
  size_t move = 0;
  size_t outcome = 0;
  bool found = false;

  void Offer(double v, size_t b, size_t m, size_t o) {
    if (!found || v > value) {
      value = v;
      base = b;
      move = m;
      outcome = o;
      found = true;
    }
  }
  void Merge(const Best& other) {
    if (other.found && (!found || other.value > value)) *this = other;
  }
};

NeighborWitness MakeWitness(const DatasetSpace& space, const Best& best) {
  NeighborWitness w;
  w.base = space.At(best.base);
  w.neighbor = space.At(space.Neighbor(best.base, best.move));
  w.changed_record = space.ChangedRecord(best.move);
  w.outcome = best.outcome;
  return w;
}

// Runs body(begin, end, slot) over `threads` contiguous chunks of [0, n).
template <typename Body>
void ParallelChunks(size_t n, size_t threads, const Body& body) {
  threads = std::max<size_t>(1, std::min(threads, std::max<size_t>(n, 1)));
  if (threads == 1) {
    body(0, n, 0);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(threads);
  for (size_t t = 0; t < threads; ++t) {
    const size_t begin = n * t / threads;
    const size_t end = n * (t + 1) / threads;
    workers.emplace_back([&body, begin, end, t] { body(begin, end, t); });
  }
  for (std::thread& w : workers) w.join();
}

}  // namespace

std::string InvariantName(Invariant invariant) {
  switch (invariant) {
    case Invariant::kNone:
      return "none";
    case Invariant::kPopulation:
      return "population";
    case Invariant::kFrame:
      return "frame";
  }
  return "unknown";
}

absl::StatusOr<Invariant> ParseInvariant(const std::string& name) {
  if (name == "none") return Invariant::kNone;
  if (name == "population") return Invariant::kPopulation;
  if (name == "frame") return Invariant::kFrame;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown invariant '", name, "'"));
}

std::string MutableFieldsName(MutableFields fields) {
  return fields == MutableFields::kYOnly ? "y" : "full";
}

absl::StatusOr<MutableFields> ParseMutableFields(const std::string& name) {
  if (name == "y" || name == "y-only") return MutableFields::kYOnly;
  if (name == "full" || name == "full-record") {
    return MutableFields::kFullRecord;
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unknown mutable fields '", name, "'"));
}

double AuditUniverse::Range() const {
  if (y_grid.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(y_grid.begin(), y_grid.end());
  return *hi - *lo;
}

absl::StatusOr<DatasetSpace> DatasetSpace::Create(
    const AuditInstance& instance, const NeighborRelation& relation) {
  const Frame& frame = instance.frame;
  if (instance.universe.y_grid.empty()) {
    return absl::InvalidArgumentError("audit universe has an empty y grid");
  }
  if (relation.XMutable() && instance.universe.x_grid.empty()) {
    return absl::InvalidArgumentError("audit universe has an empty x grid");
  }
  DatasetSpace space;
  space.y_grid_ = instance.universe.y_grid;
  space.x_grid_ = instance.universe.x_grid;
  const size_t n = frame.size();
  std::vector<bool> fixed(n, false);
  for (size_t r : instance.fixed_records) {
    if (r >= n) return absl::OutOfRangeError("fixed record outside the frame");
    fixed[r] = true;
  }
  double total = 1.0;
  space.size_ = 1;
  for (size_t r = 0; r < n; ++r) {
    space.base_y_.push_back(
        frame[r].y.value_or(std::numeric_limits<double>::quiet_NaN()));
    space.base_x_.push_back(frame[r].x);
    size_t options = 1;
    bool x_mutable = false;
    if (!fixed[r]) {
      x_mutable = relation.XMutable();
      options = space.y_grid_.size() * (x_mutable ? space.x_grid_.size() : 1);
    }
    space.x_mutable_.push_back(x_mutable);
    space.options_.push_back(options);
    space.stride_.push_back(space.size_);
    total *= static_cast<double>(options);
    if (total > static_cast<double>(instance.cap)) {
      return absl::ResourceExhaustedError(
          absl::StrCat("intractable enumeration: more than ", instance.cap,
                       " datasets in instance '", instance.name, "'"));
    }
    space.size_ *= options;
    for (size_t a = 0; a + 1 < options; ++a) {
      space.move_record_.push_back(r);
      space.move_option_.push_back(a);
    }
  }
  space.neighbors_per_dataset_ = space.move_record_.size();
  return space;
}

AuditDataset DatasetSpace::At(size_t index) const {
  AuditDataset d{base_y_, base_x_};
  for (size_t r = 0; r < options_.size(); ++r) {
    if (options_[r] == 1) continue;
    const size_t option = (index / stride_[r]) % options_[r];
    d.y[r] = y_grid_[option % y_grid_.size()];
    if (x_mutable_[r]) d.x[r] = x_grid_[option / y_grid_.size()];
  }
  return d;
}

absl::StatusOr<size_t> DatasetSpace::IndexOf(const AuditDataset& d) const {
  if (d.y.size() != options_.size() || d.x.size() != options_.size()) {
    return absl::InvalidArgumentError("dataset size does not match instance");
  }
  size_t index = 0;
  for (size_t r = 0; r < options_.size(); ++r) {
    if (options_[r] == 1) continue;
    auto y_it = std::find(y_grid_.begin(), y_grid_.end(), d.y[r]);
    if (y_it == y_grid_.end()) {
      return absl::InvalidArgumentError(
          absl::StrCat("record ", r, ": y not on the grid"));
    }
    size_t option = static_cast<size_t>(y_it - y_grid_.begin());
    if (x_mutable_[r]) {
      auto x_it = std::find(x_grid_.begin(), x_grid_.end(), d.x[r]);
      if (x_it == x_grid_.end()) {
        return absl::InvalidArgumentError(
            absl::StrCat("record ", r, ": x not on the grid"));
      }
      option += y_grid_.size() * static_cast<size_t>(x_it - x_grid_.begin());
    } else if (d.x[r] != base_x_[r]) {
      return absl::InvalidArgumentError(
          absl::StrCat("record ", r, ": x differs from the fixed frame"));
    }
    index += option * stride_[r];
  }
  return index;
}

size_t DatasetSpace::Neighbor(size_t base, size_t j) const {
  const size_t r = move_record_[j];
  const size_t current = (base / stride_[r]) % options_[r];
  const size_t alt = move_option_[j];
  const size_t next = alt < current ? alt : alt + 1;
  return base - current * stride_[r] + next * stride_[r];
}

double DatasetSpace::PairCount() const {
  return static_cast<double>(size_) *
         static_cast<double>(neighbors_per_dataset_);
}

AuditDataset BaseDataset(const AuditInstance& instance) {
  AuditDataset d;
  for (const FrameRecord& r : instance.frame.records()) {
    d.y.push_back(r.y.value_or(std::numeric_limits<double>::quiet_NaN()));
    d.x.push_back(r.x);
  }
  return d;
}

Frame FrameFor(const AuditInstance& instance, const AuditDataset& dataset) {
  return instance.frame.WithValues(dataset.y, dataset.x);
}

absl::Status ForEachNeighborPair(
    const AuditInstance& instance, const NeighborRelation& relation,
    absl::FunctionRef<void(const AuditDataset&, const AuditDataset&)> visit) {
  absl::StatusOr<DatasetSpace> space = DatasetSpace::Create(instance, relation);
  if (!space.ok()) return space.status();
  if (absl::Status s = CheckPairCap(*space, instance.cap); !s.ok()) return s;
  for (size_t b = 0; b < space->size(); ++b) {
    const AuditDataset base = space->At(b);
    for (size_t j = 0; j < space->NeighborsPerDataset(); ++j) {
      visit(base, space->At(space->Neighbor(b, j)));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<AuditDataset>> NeighborsOf(
    const AuditInstance& instance, const NeighborRelation& relation,
    const AuditDataset& base) {
  absl::StatusOr<DatasetSpace> space = DatasetSpace::Create(instance, relation);
  if (!space.ok()) return space.status();
  absl::StatusOr<size_t> index = space->IndexOf(base);
  if (!index.ok()) return index.status();
  std::vector<AuditDataset> out;
  for (size_t j = 0; j < space->NeighborsPerDataset(); ++j) {
    out.push_back(space->At(space->Neighbor(*index, j)));
  }
  return out;
}

absl::StatusOr<SensitivityReport> ExactSensitivityReport(
    const AuditInstance& instance, const NeighborRelation& relation,
    const AuditStatistic& statistic) {
  return ExactCoupledSensitivity(
      instance, relation, 1,
      [&statistic](const AuditDataset& d, size_t) { return statistic(d); });
}

absl::StatusOr<Sensitivity> ExactSensitivity(const AuditInstance& instance,
                                             const NeighborRelation& relation,
                                             const AuditStatistic& statistic) {
  absl::StatusOr<SensitivityReport> report =
      ExactSensitivityReport(instance, relation, statistic);
  if (!report.ok()) return report.status();
  return Sensitivity::Create(report->sensitivity);
}

absl::StatusOr<SensitivityReport> ExactCoupledSensitivity(
    const AuditInstance& instance, const NeighborRelation& relation,
    size_t outcomes, const CoupledStatistic& statistic) {
  absl::StatusOr<DatasetSpace> space = DatasetSpace::Create(instance, relation);
  if (!space.ok()) return space.status();
  if (absl::Status s = CheckPairCap(*space, instance.cap); !s.ok()) return s;
  if (static_cast<double>(space->size()) * static_cast<double>(outcomes) >
      static_cast<double>(instance.cap)) {
    return absl::ResourceExhaustedError(
        absl::StrCat("intractable enumeration: ", space->size(), " datasets x ",
                     outcomes, " outcomes exceed the cap of ", instance.cap));
  }
  std::vector<std::vector<std::vector<double>>> table(space->size());
  for (size_t b = 0; b < space->size(); ++b) {
    const AuditDataset d = space->At(b);
    table[b].reserve(outcomes);
    for (size_t o = 0; o < outcomes; ++o) {
      absl::StatusOr<std::vector<double>> value = statistic(d, o);
      if (!value.ok()) return value.status();
      table[b].push_back(*std::move(value));
    }
  }
  Best best;
  for (size_t b = 0; b < space->size(); ++b) {
    for (size_t j = 0; j < space->NeighborsPerDataset(); ++j) {
      const size_t nb = space->Neighbor(b, j);
      for (size_t o = 0; o < outcomes; ++o) {
        if (table[b][o].size() != table[nb][o].size()) {
          return absl::InternalError("statistic changed dimension");
        }
        best.Offer(L1Distance(table[b][o], table[nb][o]), b, j, o);
      }
    }
  }
  SensitivityReport report;
  if (best.found) {
    report.sensitivity = best.value;
    report.witness = MakeWitness(*space, best);
  }
  return report;
}

AuditStatistic MeanOfY() {
  return [](const AuditDataset& d) -> absl::StatusOr<std::vector<double>> {
    double sum = 0.0;
    for (double y : d.y) sum += y;
    return std::vector<double>{sum / static_cast<double>(d.y.size())};
  };
}

AuditStatistic ProportionAtTop(double top) {
  return [top](const AuditDataset& d) -> absl::StatusOr<std::vector<double>> {
    double count = 0.0;
    for (double y : d.y) count += (y >= top) ? 1.0 : 0.0;
    return std::vector<double>{count / static_cast<double>(d.y.size())};
  };
}

AuditStatistic FixedWeightHtMean(std::vector<double> weights,
                                 int64_t population_size) {
  return [weights = std::move(weights), population_size](
             const AuditDataset& d) -> absl::StatusOr<std::vector<double>> {
    if (weights.size() != d.y.size()) {
      return absl::InvalidArgumentError("one weight per record is required");
    }
    double total = 0.0;
    for (size_t i = 0; i < d.y.size(); ++i) total += weights[i] * d.y[i];
    return std::vector<double>{total / static_cast<double>(population_size)};
  };
}

SampleWeightFn DesignWeightFn(SamplingDesign design) {
  return [design = std::move(design)](const Frame& frame,
                                      absl::Span<const size_t> sample)
             -> absl::StatusOr<std::vector<double>> {
    absl::StatusOr<std::vector<double>> pi = InclusionProbs(design, frame);
    if (!pi.ok()) return pi.status();
    std::vector<double> w;
    for (size_t i = 0; i < sample.size(); ++i) {
      if (i > 0 && sample[i] == sample[i - 1]) continue;
      w.push_back(1.0 / (*pi)[sample[i]]);
    }
    return w;
  };
}

absl::StatusOr<SensitivityReport> SampleCoupledHtMeanSensitivity(
    const AuditInstance& instance, const NeighborRelation& relation,
    const SamplingDesign& design, const SampleWeightFn& weights) {
  absl::StatusOr<DatasetSpace> space = DatasetSpace::Create(instance, relation);
  if (!space.ok()) return space.status();
  std::map<std::vector<size_t>, size_t> index;
  for (size_t b = 0; b < space->size(); ++b) {
    absl::StatusOr<std::vector<SampleOutcome>> outcomes =
        SampleSpace(design, FrameFor(instance, space->At(b)), instance.cap);
    if (!outcomes.ok()) return outcomes.status();
    for (const SampleOutcome& o : *outcomes) index.emplace(o.units, 0);
  }
  std::vector<std::vector<size_t>> samples;
  for (auto& [units, slot] : index) {
    slot = samples.size();
    samples.push_back(units);
  }
  const double population = static_cast<double>(instance.frame.size());
  return ExactCoupledSensitivity(
      instance, relation, samples.size(),
      [&](const AuditDataset& d,
          size_t o) -> absl::StatusOr<std::vector<double>> {
        const std::vector<size_t>& sample = samples[o];
        absl::StatusOr<std::vector<double>> w =
            weights(FrameFor(instance, d), sample);
        if (!w.ok()) return w.status();
        double total = 0.0;
        size_t k = 0;
        for (size_t i = 0; i < sample.size(); ++i) {
          if (i > 0 && sample[i] == sample[i - 1]) continue;
          total += (*w)[k++] * d.y[sample[i]];
        }
        return std::vector<double>{total / population};
      });
}

absl::StatusOr<SensitivityReport> HotDeckMeanSensitivity(
    const AuditInstance& instance, const NeighborRelation& relation) {
  const size_t n = instance.frame.size();
  std::vector<bool> missing(n, false);
  for (size_t r : instance.fixed_records) missing[r] = true;
  std::vector<size_t> donors;
  std::vector<size_t> recipients;
  for (size_t r = 0; r < n; ++r)
    (missing[r] ? recipients : donors).push_back(r);
  if (!recipients.empty() && donors.empty()) {
    return absl::FailedPreconditionError("hot deck needs at least one donor");
  }
  size_t assignments = 1;
  for (size_t i = 0; i < recipients.size(); ++i) {
    assignments *= donors.size();
    if (assignments > instance.cap) {
      return absl::ResourceExhaustedError(
          "intractable enumeration of donor assignments");
    }
  }
  return ExactCoupledSensitivity(
      instance, relation, assignments,
      [&](const AuditDataset& d,
          size_t a) -> absl::StatusOr<std::vector<double>> {
        double total = 0.0;
        for (size_t r : donors) total += d.y[r];
        for (size_t i = 0; i < recipients.size(); ++i) {
          total += d.y[donors[a % donors.size()]];
          a /= donors.size();
        }
        return std::vector<double>{total / static_cast<double>(n)};
      });
}

double EventPrivacyLoss(absl::Span<const double> p, absl::Span<const double> q,
                        size_t event) {
  const double a = p[event];
  const double b = q[event];
  if (a == 0.0 && b == 0.0) return 0.0;
  if (a == 0.0 || b == 0.0) return std::numeric_limits<double>::infinity();
  return std::abs(std::log(a) - std::log(b));
}

absl::StatusOr<EffectiveEpsilonReport> EffectiveEpsilon(
    const AuditInstance& instance, const NeighborRelation& relation,
    double eps_nominal, const OutputDistribution& mechanism,
    const AuditOptions& options) {
  absl::StatusOr<DatasetSpace> space = DatasetSpace::Create(instance, relation);
  if (!space.ok()) return space.status();
  if (absl::Status s = CheckPairCap(*space, instance.cap); !s.ok()) return s;
  if (options.target_record &&
      *options.target_record >= instance.frame.size()) {
    return absl::OutOfRangeError("target record outside the frame");
  }
  const size_t n = space->size();
  const size_t threads = std::max<size_t>(1, options.threads);

  std::vector<std::vector<double>> dist(n);
  std::vector<absl::Status> errors(threads);
  ParallelChunks(n, threads, [&](size_t begin, size_t end, size_t slot) {
    for (size_t b = begin; b < end; ++b) {
      absl::StatusOr<std::vector<double>> p = mechanism(space->At(b));
      if (!p.ok()) {
        errors[slot] = p.status();
        return;
      }
      dist[b] = *std::move(p);
    }
  });
  for (const absl::Status& s : errors) {
    if (!s.ok()) return s;
  }
  for (size_t b = 0; b < n; ++b) {
    if (dist[b].size() != dist[0].size()) {
      return absl::InternalError("output distributions differ in size");
    }
    double mass = 0.0;
    for (double p : dist[b]) {
      if (!std::isfinite(p) || p < 0.0) {
        return absl::InternalError(absl::StrCat(
            "numeric overflow: invalid output probability for dataset ", b));
      }
      mass += p;
    }
    if (std::abs(mass - 1.0) > 1e-9) {
      return absl::InternalError(
          absl::StrCat("output distribution sums to ", mass));
    }
  }

  std::vector<Best> partial(threads);
  ParallelChunks(n, threads, [&](size_t begin, size_t end, size_t slot) {
    Best& best = partial[slot];
    for (size_t b = begin; b < end; ++b) {
      for (size_t j = 0; j < space->NeighborsPerDataset(); ++j) {
        if (options.target_record &&
            space->ChangedRecord(j) != *options.target_record) {
          continue;
        }
        const std::vector<double>& q = dist[space->Neighbor(b, j)];
        for (size_t e = 0; e < dist[b].size(); ++e) {
          best.Offer(EventPrivacyLoss(dist[b], q, e), b, j, e);
        }
      }
    }
  });
  Best best;
  for (const Best& b : partial) best.Merge(b);

  EffectiveEpsilonReport report;
  report.eps_nominal = eps_nominal;
  if (best.found) {
    report.eps_effective = best.value;
    report.infinite = std::isinf(best.value);
    report.worst = MakeWitness(*space, best);
  }
  return report;
}

absl::StatusOr<double> EvaluateWitness(const OutputDistribution& mechanism,
                                       const NeighborWitness& witness) {
  absl::StatusOr<std::vector<double>> p = mechanism(witness.base);
  if (!p.ok()) return p.status();
  absl::StatusOr<std::vector<double>> q = mechanism(witness.neighbor);
  if (!q.ok()) return q.status();
  if (witness.outcome >= p->size() || p->size() != q->size()) {
    return absl::OutOfRangeError("witness event outside the output space");
  }
  return EventPrivacyLoss(*p, *q, witness.outcome);
}

}  // namespace survey_dp
