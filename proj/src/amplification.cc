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

#include "survey_dp/amplification.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_replace.h"
#include "survey_dp/format.h"

namespace survey_dp {
namespace {

constexpr double kGridTolerance = 1e-9;

// Index of `value` on the lattice lo + k * step, if it lies on it.
absl::StatusOr<size_t> LatticeIndex(double value, double lo, double step,
                                    size_t points) {
  const double k = std::round((value - lo) / step);
  if (!std::isfinite(value) || k < 0 || k >= static_cast<double>(points) ||
      std::abs(lo + k * step - value) >
          kGridTolerance * std::max(1.0, std::abs(value))) {
    return absl::OutOfRangeError(
        absl::StrCat("statistic value ", ShortestDouble(value),
                     " is not on the mechanism's output grid"));
  }
  return static_cast<size_t>(k);
}

struct YLattice {
  double y_min = 0.0;
  double y_max = 0.0;
  double step = 1.0;
};

// The y grid must be a subset of the integer multiples of its smallest gap,
// so that every sum of grid values lands on a common lattice.
absl::StatusOr<YLattice> LatticeOf(const AuditUniverse& universe) {
  std::vector<double> grid = universe.y_grid;
  if (grid.empty()) return absl::InvalidArgumentError("empty y grid");
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  YLattice lattice{grid.front(), grid.back(), 0.0};
  for (size_t i = 1; i < grid.size(); ++i) {
    const double gap = grid[i] - grid[i - 1];
    if (lattice.step == 0.0 || gap < lattice.step) lattice.step = gap;
  }
  if (lattice.step == 0.0) {
    lattice.step = grid.front() != 0.0 ? std::abs(grid.front()) : 1.0;
  }
  for (double y : grid) {
    const double k = std::round(y / lattice.step);
    if (std::abs(k * lattice.step - y) >
        kGridTolerance * std::max(1.0, std::abs(y))) {
      return absl::InvalidArgumentError(
          "y grid values must be integer multiples of the smallest gap");
    }
  }
  return lattice;
}

}  // namespace

absl::StatusOr<GeometricMechanism> GeometricMechanism::Create(
    double epsilon, double sensitivity, double lo, double hi, double step,
    int margin) {
  if (!std::isfinite(epsilon) || epsilon <= 0.0) {
    return absl::InvalidArgumentError("epsilon must be positive and finite");
  }
  if (!std::isfinite(sensitivity) || sensitivity <= 0.0) {
    return absl::InvalidArgumentError("sensitivity must be positive");
  }
  if (!std::isfinite(step) || step <= 0.0 || !std::isfinite(lo) ||
      !std::isfinite(hi) || hi < lo || margin < 0) {
    return absl::InvalidArgumentError("invalid output grid");
  }
  const double span = std::round((hi - lo) / step);
  if (std::abs(lo + span * step - hi) >
      kGridTolerance * std::max(1.0, std::abs(hi))) {
    return absl::InvalidArgumentError("hi - lo must be a multiple of step");
  }
  GeometricMechanism m;
  m.epsilon_ = epsilon;
  m.alpha_ = std::exp(-epsilon * step / sensitivity);
  m.lo_ = lo;
  m.step_ = step;
  m.points_ = static_cast<size_t>(span) + 1;
  m.margin_ = static_cast<size_t>(margin);
  return m;
}

absl::StatusOr<std::vector<double>> GeometricMechanism::Distribution(
    double value) const {
  absl::StatusOr<size_t> c = LatticeIndex(value, lo_, step_, points_);
  if (!c.ok()) return c.status();
  const double log_alpha = std::log(alpha_);
  const double head = (1.0 - alpha_) / (1.0 + alpha_);
  const double center = static_cast<double>(*c + margin_);
  std::vector<double> p(OutputSize());
  const size_t interior = points_ + 2 * margin_;
  // Interior event k + 1 is the grid point lo + (k - margin) * step.
  for (size_t k = 0; k < interior; ++k) {
    p[k + 1] =
        head * std::exp(log_alpha * std::abs(static_cast<double>(k) - center));
  }
  p.front() = std::exp(log_alpha * (center + 1.0)) / (1.0 + alpha_);
  p.back() = std::exp(log_alpha * (static_cast<double>(interior) - center)) /
             (1.0 + alpha_);
  return p;
}

double GeometricMechanism::EventValue(size_t event) const {
  if (event == 0) return -std::numeric_limits<double>::infinity();
  if (event + 1 >= OutputSize()) return std::numeric_limits<double>::infinity();
  return lo_ + (static_cast<double>(event - 1) - static_cast<double>(margin_)) *
                   step_;
}

absl::StatusOr<RandomizedResponse> RandomizedResponse::Create(
    double epsilon, std::vector<double> domain) {
  if (!std::isfinite(epsilon) || epsilon <= 0.0) {
    return absl::InvalidArgumentError("epsilon must be positive and finite");
  }
  std::sort(domain.begin(), domain.end());
  domain.erase(std::unique(domain.begin(), domain.end()), domain.end());
  if (domain.empty()) {
    return absl::InvalidArgumentError("randomized response needs a domain");
  }
  RandomizedResponse m;
  m.epsilon_ = epsilon;
  m.domain_ = std::move(domain);
  return m;
}

absl::StatusOr<std::vector<double>> RandomizedResponse::Distribution(
    double value) const {
  size_t index = domain_.size();
  for (size_t i = 0; i < domain_.size(); ++i) {
    if (std::abs(domain_[i] - value) <=
        kGridTolerance * std::max(1.0, std::abs(value))) {
      index = i;
      break;
    }
  }
  if (index == domain_.size()) {
    return absl::OutOfRangeError(
        absl::StrCat("value ", ShortestDouble(value),
                     " is outside the randomized response domain"));
  }
  const double denom =
      std::exp(epsilon_) + static_cast<double>(domain_.size()) - 1.0;
  std::vector<double> p(domain_.size(), 1.0 / denom);
  p[index] = std::exp(epsilon_) / denom;
  return p;
}

std::string BaseMechanismName(BaseMechanismKind kind) {
  return kind == BaseMechanismKind::kGeometric ? "geometric"
                                               : "randomized_response";
}

absl::StatusOr<BaseMechanismKind> ParseBaseMechanism(const std::string& name) {
  if (name == "geometric") return BaseMechanismKind::kGeometric;
  if (name == "randomized_response" || name == "rr") {
    return BaseMechanismKind::kRandomizedResponse;
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unknown base mechanism '", name, "'"));
}

absl::StatusOr<std::shared_ptr<const DiscreteMechanism>> MakeSumMechanism(
    BaseMechanismKind kind, double epsilon, const AuditInstance& instance) {
  absl::StatusOr<YLattice> lattice = LatticeOf(instance.universe);
  if (!lattice.ok()) return lattice.status();
  // The sum runs over distinct sampled units, so at most N terms.
  const double max_count = static_cast<double>(instance.frame.size());
  const double lo = std::min(0.0, max_count * lattice->y_min);
  const double hi = std::max(0.0, max_count * lattice->y_max);
  const double range = lattice->y_max - lattice->y_min;
  if (kind == BaseMechanismKind::kGeometric) {
    absl::StatusOr<GeometricMechanism> m = GeometricMechanism::Create(
        epsilon, range > 0.0 ? range : lattice->step, lo, hi, lattice->step);
    if (!m.ok()) return m.status();
    return std::make_shared<const GeometricMechanism>(*std::move(m));
  }
  std::vector<double> domain;
  const double points = std::round((hi - lo) / lattice->step);
  for (double k = 0; k <= points; ++k) domain.push_back(lo + k * lattice->step);
  absl::StatusOr<RandomizedResponse> m =
      RandomizedResponse::Create(epsilon, std::move(domain));
  if (!m.ok()) return m.status();
  return std::make_shared<const RandomizedResponse>(*std::move(m));
}

OutputDistribution SampledSumMechanism(
    const AuditInstance& instance,
    std::shared_ptr<const DiscreteMechanism> base,
    SampledMechanismOptions options) {
  return [instance, base = std::move(base), options = std::move(options)](
             const AuditDataset& d) -> absl::StatusOr<std::vector<double>> {
    std::vector<SampleOutcome> outcomes;
    if (options.design) {
      absl::StatusOr<std::vector<SampleOutcome>> space =
          SampleSpace(*options.design, FrameFor(instance, d), instance.cap);
      if (!space.ok()) return space.status();
      outcomes = *std::move(space);
    } else {
      SampleOutcome all;
      all.units.resize(d.y.size());
      std::iota(all.units.begin(), all.units.end(), size_t{0});
      all.probability = 1.0;
      outcomes.push_back(std::move(all));
    }
    double mass = 1.0;
    if (options.known_member) {
      const size_t m = *options.known_member;
      std::erase_if(outcomes, [m](const SampleOutcome& o) {
        return !std::binary_search(o.units.begin(), o.units.end(), m);
      });
      mass = 0.0;
      for (const SampleOutcome& o : outcomes) mass += o.probability;
      if (mass <= 0.0) {
        return absl::FailedPreconditionError(
            absl::StrCat("record ", m, " is never sampled"));
      }
    }
    std::vector<double> out(base->OutputSize(), 0.0);
    for (const SampleOutcome& o : outcomes) {
      double sum = 0.0;
      // Distinct units only: an SRSWR repeat must not multiply one record's
      // influence beyond the base mechanism's sensitivity.
      for (size_t k = 0; k < o.units.size(); ++k) {
        if (k == 0 || o.units[k] != o.units[k - 1]) sum += d.y[o.units[k]];
      }
      absl::StatusOr<std::vector<double>> p = base->Distribution(sum);
      if (!p.ok()) return p.status();
      const double weight = o.probability / mass;
      for (size_t e = 0; e < out.size(); ++e) out[e] += weight * (*p)[e];
    }
    return out;
  };
}

absl::StatusOr<EffectiveEpsilonReport> AuditAmplification(
    const AuditInstance& instance, const NeighborRelation& relation,
    BaseMechanismKind kind, double epsilon,
    const SampledMechanismOptions& mechanism, const AuditOptions& options) {
  absl::StatusOr<std::shared_ptr<const DiscreteMechanism>> base =
      MakeSumMechanism(kind, epsilon, instance);
  if (!base.ok()) return base.status();
  AuditOptions audit_options = options;
  if (mechanism.known_member)
    audit_options.target_record = mechanism.known_member;
  return EffectiveEpsilon(instance, relation, epsilon,
                          SampledSumMechanism(instance, *base, mechanism),
                          audit_options);
}

absl::StatusOr<OutputDistribution> ComposedImputationMechanism(
    const AuditInstance& instance, double eps1, double eps2) {
  absl::StatusOr<YLattice> lattice = LatticeOf(instance.universe);
  if (!lattice.ok()) return lattice.status();
  const size_t n = instance.frame.size();
  std::vector<bool> missing(n, false);
  for (size_t r : instance.fixed_records) {
    if (r >= n) return absl::OutOfRangeError("missing record outside frame");
    missing[r] = true;
  }
  const double n_obs =
      static_cast<double>(std::count(missing.begin(), missing.end(), false));
  if (n_obs == 0.0) {
    return absl::FailedPreconditionError("no observed records to fit on");
  }
  const double range = lattice->y_max - lattice->y_min;
  const double sensitivity = range > 0.0 ? range : lattice->step;
  absl::StatusOr<GeometricMechanism> fit =
      GeometricMechanism::Create(eps1, sensitivity, n_obs * lattice->y_min,
                                 n_obs * lattice->y_max, lattice->step);
  if (!fit.ok()) return fit.status();
  absl::StatusOr<GeometricMechanism> release = GeometricMechanism::Create(
      eps2, sensitivity, static_cast<double>(n) * lattice->y_min,
      static_cast<double>(n) * lattice->y_max, lattice->step / n_obs);
  if (!release.ok()) return release.status();

  // Noisy mean implied by each fit event; the tails clamp to the bounds.
  std::vector<double> theta(fit->OutputSize());
  for (size_t k = 0; k < theta.size(); ++k) {
    theta[k] =
        std::clamp(fit->EventValue(k) / n_obs, lattice->y_min, lattice->y_max);
  }
  return OutputDistribution(
      [fit = *std::move(fit), release = *std::move(release), theta,
       missing](const AuditDataset& d) -> absl::StatusOr<std::vector<double>> {
        double observed_sum = 0.0;
        double missing_count = 0.0;
        for (size_t i = 0; i < d.y.size(); ++i) {
          if (missing[i]) {
            missing_count += 1.0;
          } else {
            observed_sum += d.y[i];
          }
        }
        absl::StatusOr<std::vector<double>> p_fit =
            fit.Distribution(observed_sum);
        if (!p_fit.ok()) return p_fit.status();
        const size_t k_release = release.OutputSize();
        std::vector<double> out(p_fit->size() * k_release, 0.0);
        for (size_t f = 0; f < p_fit->size(); ++f) {
          absl::StatusOr<std::vector<double>> p_release =
              release.Distribution(observed_sum + missing_count * theta[f]);
          if (!p_release.ok()) return p_release.status();
          for (size_t r = 0; r < k_release; ++r) {
            out[f * k_release + r] = (*p_fit)[f] * (*p_release)[r];
          }
        }
        return out;
      });
}

std::vector<SweepRow> AmplificationSweep(const std::vector<SweepCell>& cells,
                                         const std::vector<double>& eps_grid,
                                         BaseMechanismKind kind,
                                         const NeighborRelation& relation,
                                         const AuditOptions& options) {
  std::vector<SweepRow> rows;
  for (const SweepCell& cell : cells) {
    double max_pi = 0.0;
    absl::StatusOr<std::vector<double>> pi =
        InclusionProbs(cell.design, cell.instance.frame);
    if (pi.ok() && !pi->empty()) {
      max_pi = *std::max_element(pi->begin(), pi->end());
    }
    for (double eps : eps_grid) {
      SweepRow row;
      row.design = cell.label;
      row.epsilon = eps;
      row.rate_or_maxpi = max_pi;
      if (!pi.ok()) {
        row.status = std::string(pi.status().message());
        rows.push_back(std::move(row));
        continue;
      }
      absl::StatusOr<EffectiveEpsilonReport> report = AuditAmplification(
          cell.instance, relation, kind, eps,
          {.design = cell.design, .known_member = std::nullopt}, options);
      if (!report.ok()) {
        row.status = std::string(report.status().message());
      } else {
        row.eps_effective = report->eps_effective;
        row.status = report->infinite ? "infinite" : "ok";
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string FormatSweepCsv(const std::vector<SweepRow>& rows) {
  std::string out = "design,epsilon,rate_or_maxpi,eps_effective,status\n";
  for (const SweepRow& row : rows) {
    absl::StrAppend(
        &out, absl::StrReplaceAll(row.design, {{",", ";"}}), ",",
        ShortestDouble(row.epsilon), ",", ShortestDouble(row.rate_or_maxpi),
        ",", ShortestDouble(row.eps_effective), ",",
        absl::StrReplaceAll(row.status, {{",", ";"}, {"\n", " "}}), "\n");
  }
  return out;
}

}  // namespace survey_dp
