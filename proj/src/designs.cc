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

#include "survey_dp/designs.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"

namespace survey_dp {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

absl::Status CheckSize(int64_t n, size_t population, bool with_replacement) {
  if (n < 1) return absl::InvalidArgumentError("sample size must be >= 1");
  if (!with_replacement && static_cast<size_t>(n) > population) {
    return absl::InvalidArgumentError(
        absl::StrCat("sample size ", n, " exceeds frame size ", population));
  }
  return absl::OkStatus();
}

// Frame positions grouped by label, groups in sorted label order.
std::vector<std::vector<size_t>> GroupBy(
    const Frame& frame, const std::vector<std::string>& labels,
    const std::string FrameRecord::* field) {
  std::map<std::string, size_t> slot;
  for (size_t i = 0; i < labels.size(); ++i) slot[labels[i]] = i;
  std::vector<std::vector<size_t>> groups(labels.size());
  for (size_t i = 0; i < frame.size(); ++i) {
    groups[slot[frame[i].*field]].push_back(i);
  }
  return groups;
}

double Choose(int64_t n, int64_t k) {
  if (k < 0 || k > n) return 0.0;
  double result = 1.0;
  for (int64_t i = 1; i <= k; ++i) {
    result = result * static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return std::round(result);
}

void ForEachCombination(
    size_t n, size_t k,
    const std::function<void(const std::vector<size_t>&)>& f) {
  std::vector<size_t> combo(k);
  std::iota(combo.begin(), combo.end(), 0);
  if (k > n) return;
  while (true) {
    f(combo);
    size_t i = k;
    while (i > 0 && combo[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++combo[i - 1];
    for (size_t j = i; j < k; ++j) combo[j] = combo[j - 1] + 1;
  }
}

absl::Status CheckCap(double count, size_t cap) {
  if (count > static_cast<double>(cap)) {
    return absl::ResourceExhaustedError(
        absl::StrCat("intractable enumeration: ", count,
                     " outcomes exceed the cap of ", cap));
  }
  return absl::OkStatus();
}

// Population standard deviation of observed y.
absl::StatusOr<double> PopulationSd(const Frame& frame,
                                    absl::Span<const size_t> members) {
  double sum = 0.0;
  for (size_t i : members) {
    if (!frame[i].y.has_value()) {
      return absl::FailedPreconditionError(
          absl::StrCat("Neyman allocation needs y for every unit; unit ",
                       frame[i].id, " is missing"));
    }
    sum += *frame[i].y;
  }
  const double mean = sum / static_cast<double>(members.size());
  double ss = 0.0;
  for (size_t i : members) ss += (*frame[i].y - mean) * (*frame[i].y - mean);
  return std::sqrt(ss / static_cast<double>(members.size()));
}

// Conditional Poisson sampling: among samples of size `size` from `free`,
// P(s) is proportional to the product of `odds` over s. Units in `certain`
// are always selected.
struct ConditionalPoisson {
  std::vector<size_t> certain;
  std::vector<size_t> free;
  std::vector<double> odds;
  int64_t size = 0;
};

// e_k(values) for k = 0..max_k.
std::vector<double> ElementarySymmetric(absl::Span<const double> values,
                                        int64_t max_k) {
  std::vector<double> e(max_k + 1, 0.0);
  e[0] = 1.0;
  for (double v : values) {
    for (int64_t k = max_k; k >= 1; --k) e[k] += v * e[k - 1];
  }
  return e;
}

std::vector<double> ConditionalPoissonInclusion(absl::Span<const double> odds,
                                                int64_t size) {
  const size_t m = odds.size();
  const double total = ElementarySymmetric(odds, size)[size];
  std::vector<double> pi(m);
  std::vector<double> rest;
  rest.reserve(m);
  for (size_t i = 0; i < m; ++i) {
    rest.clear();
    for (size_t j = 0; j < m; ++j) {
      if (j != i) rest.push_back(odds[j]);
    }
    pi[i] = odds[i] * ElementarySymmetric(rest, size - 1)[size - 1] / total;
  }
  return pi;
}

absl::StatusOr<ConditionalPoisson> SolveConditionalPoisson(
    absl::Span<const double> pi, int64_t n) {
  ConditionalPoisson cps;
  std::vector<double> target;
  for (size_t i = 0; i < pi.size(); ++i) {
    if (pi[i] >= 1.0) {
      cps.certain.push_back(i);
    } else {
      cps.free.push_back(i);
      target.push_back(pi[i]);
    }
  }
  cps.size = n - static_cast<int64_t>(cps.certain.size());
  if (cps.size <= 0 || cps.free.empty()) {
    cps.size = std::max<int64_t>(cps.size, 0);
    return cps;
  }
  std::vector<double> odds(target.size());
  for (size_t i = 0; i < target.size(); ++i) {
    odds[i] = target[i] / (1.0 - target[i]);
  }
  constexpr int kMaxIterations = 20000;
  constexpr double kTolerance = 1e-15;
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    const std::vector<double> current =
        ConditionalPoissonInclusion(odds, cps.size);
    double worst = 0.0;
    for (size_t i = 0; i < odds.size(); ++i) {
      worst = std::max(worst, std::abs(current[i] - target[i]));
    }
    if (worst <= kTolerance) break;
    double largest = 0.0;
    for (size_t i = 0; i < odds.size(); ++i) {
      odds[i] *= target[i] / current[i];
      largest = std::max(largest, odds[i]);
    }
    for (double& o : odds) o /= largest;
  }
  cps.odds = std::move(odds);
  return cps;
}

struct InclusionVisitor {
  const Frame& frame;

  absl::StatusOr<std::vector<double>> operator()(const Srswr& d) const {
    const double n_units = static_cast<double>(frame.size());
    const double p =
        -std::expm1(static_cast<double>(d.n) * std::log1p(-1.0 / n_units));
    return std::vector<double>(frame.size(), frame.size() == 1 ? 1.0 : p);
  }
  absl::StatusOr<std::vector<double>> operator()(const Srswor& d) const {
    return std::vector<double>(
        frame.size(),
        static_cast<double>(d.n) / static_cast<double>(frame.size()));
  }
  absl::StatusOr<std::vector<double>> operator()(
      const PoissonSampling& d) const {
    return std::vector<double>(frame.size(), d.rate);
  }
  absl::StatusOr<std::vector<double>> operator()(
      const StratifiedSrswor& d) const {
    absl::StatusOr<std::vector<StratumAllocation>> alloc =
        AllocateStrata(d.allocation, frame, d.n);
    if (!alloc.ok()) return alloc.status();
    std::map<std::string, double> rate;
    for (const StratumAllocation& a : *alloc) {
      rate[a.label] =
          static_cast<double>(a.size) / static_cast<double>(a.population);
    }
    std::vector<double> pi(frame.size());
    for (size_t i = 0; i < frame.size(); ++i) pi[i] = rate[frame[i].stratum];
    return pi;
  }
  absl::StatusOr<std::vector<double>> operator()(const ClusterSrswor& d) const {
    const double k = static_cast<double>(frame.ClusterLabels().size());
    return std::vector<double>(frame.size(),
                               static_cast<double>(d.clusters) / k);
  }
  absl::StatusOr<std::vector<double>> operator()(const Pps& d) const {
    double total = 0.0;
    for (const FrameRecord& r : frame.records()) total += r.x;
    std::vector<double> pi(frame.size());
    for (size_t i = 0; i < frame.size(); ++i) {
      pi[i] = static_cast<double>(d.n) * frame[i].x / total;
      if (pi[i] > 1.0 + 1e-12) {
        return absl::FailedPreconditionError(
            absl::StrCat("PPS certainty violation: unit ", frame[i].id,
                         " would have inclusion probability ", pi[i]));
      }
      pi[i] = std::min(pi[i], 1.0);
    }
    return pi;
  }
  absl::StatusOr<std::vector<double>> operator()(const Systematic& d) const {
    return std::vector<double>(
        frame.size(),
        static_cast<double>(d.n) / static_cast<double>(frame.size()));
  }
};

// Partial Fisher-Yates: the first k entries become a uniform k-subset.
std::vector<size_t> ChooseSubset(size_t n, size_t k, Rng& rng) {
  std::vector<size_t> items(n);
  std::iota(items.begin(), items.end(), 0);
  for (size_t i = 0; i < k; ++i) {
    const size_t j = i + UniformIndex(rng, n - i);
    std::swap(items[i], items[j]);
  }
  items.resize(k);
  std::sort(items.begin(), items.end());
  return items;
}

std::vector<size_t> SystematicPositions(size_t population, int64_t n,
                                        size_t start) {
  std::vector<size_t> positions;
  positions.reserve(n);
  for (int64_t j = 0; j < n; ++j) {
    positions.push_back((start + j * population) / n);
  }
  return positions;
}

struct DrawVisitor {
  const Frame& frame;
  Rng& rng;

  std::vector<size_t> operator()(const Srswr& d) const {
    std::vector<size_t> out;
    for (int64_t j = 0; j < d.n; ++j) {
      out.push_back(UniformIndex(rng, frame.size()));
    }
    std::sort(out.begin(), out.end());
    return out;
  }
  std::vector<size_t> operator()(const Srswor& d) const {
    return ChooseSubset(frame.size(), d.n, rng);
  }
  std::vector<size_t> operator()(const PoissonSampling& d) const {
    std::vector<size_t> out;
    for (size_t i = 0; i < frame.size(); ++i) {
      if (Bernoulli(rng, d.rate)) out.push_back(i);
    }
    return out;
  }
  std::vector<size_t> operator()(const ClusterSrswor& d) const {
    const std::vector<std::string> labels = frame.ClusterLabels();
    const auto groups = GroupBy(frame, labels, &FrameRecord::cluster);
    std::vector<size_t> out;
    for (size_t c : ChooseSubset(labels.size(), d.clusters, rng)) {
      out.insert(out.end(), groups[c].begin(), groups[c].end());
    }
    std::sort(out.begin(), out.end());
    return out;
  }
  std::vector<size_t> operator()(const Systematic& d) const {
    const size_t start = UniformIndex(rng, frame.size());
    std::vector<size_t> positions =
        SystematicPositions(frame.size(), d.n, start);
    if (d.ordering == SystematicOrdering::kRandomOrder) {
      std::vector<size_t> order(frame.size());
      std::iota(order.begin(), order.end(), 0);
      for (size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[UniformIndex(rng, i)]);
      }
      for (size_t& p : positions) p = order[p];
    }
    std::sort(positions.begin(), positions.end());
    return positions;
  }
  // Stratified and PPS need fallible setup and are handled in Draw().
  std::vector<size_t> operator()(const StratifiedSrswor&) const { return {}; }
  std::vector<size_t> operator()(const Pps&) const { return {}; }
};

}  // namespace

std::string DesignName(const SamplingDesign& design) {
  return std::visit(
      Overloaded{
          [](const Srswr& d) { return absl::StrCat("srswr(n=", d.n, ")"); },
          [](const Srswor& d) { return absl::StrCat("srswor(n=", d.n, ")"); },
          [](const PoissonSampling& d) {
            return absl::StrCat("poisson(rate=", d.rate, ")");
          },
          [](const StratifiedSrswor& d) {
            return absl::StrCat(
                "stratified(n=", d.n, ",",
                d.allocation == Allocation::kNeyman ? "neyman" : "proportional",
                ")");
          },
          [](const ClusterSrswor& d) {
            return absl::StrCat("cluster(m=", d.clusters, ")");
          },
          [](const Pps& d) { return absl::StrCat("pps(n=", d.n, ")"); },
          [](const Systematic& d) {
            return absl::StrCat("systematic(n=", d.n, ",",
                                d.ordering == SystematicOrdering::kFrameOrder
                                    ? "frame"
                                    : "random",
                                ")");
          },
      },
      design);
}

absl::Status ValidateDesign(const SamplingDesign& design, const Frame& frame) {
  if (frame.empty()) return absl::InvalidArgumentError("frame is empty");
  return std::visit(
      Overloaded{
          [&](const Srswr& d) { return CheckSize(d.n, frame.size(), true); },
          [&](const Srswor& d) { return CheckSize(d.n, frame.size(), false); },
          [&](const PoissonSampling& d) {
            if (!(d.rate > 0.0 && d.rate <= 1.0)) {
              return absl::InvalidArgumentError(
                  "Poisson rate must lie in (0, 1]");
            }
            return absl::OkStatus();
          },
          [&](const StratifiedSrswor& d) {
            absl::Status s = CheckSize(d.n, frame.size(), false);
            if (!s.ok()) return s;
            if (static_cast<size_t>(d.n) < frame.StratumLabels().size()) {
              return absl::InvalidArgumentError(
                  "sample size is smaller than the number of strata");
            }
            return absl::OkStatus();
          },
          [&](const ClusterSrswor& d) {
            const size_t k = frame.ClusterLabels().size();
            if (d.clusters < 1 || static_cast<size_t>(d.clusters) > k) {
              return absl::InvalidArgumentError(absl::StrCat(
                  "cluster count must lie in [1, ", k, "], got ", d.clusters));
            }
            return absl::OkStatus();
          },
          [&](const Pps& d) { return CheckSize(d.n, frame.size(), false); },
          [&](const Systematic& d) {
            return CheckSize(d.n, frame.size(), false);
          },
      },
      design);
}

std::optional<int64_t> FixedSampleSize(const SamplingDesign& design,
                                       const Frame& frame) {
  return std::visit(
      Overloaded{
          [](const Srswr& d) -> std::optional<int64_t> { return d.n; },
          [](const Srswor& d) -> std::optional<int64_t> { return d.n; },
          [&](const PoissonSampling& d) -> std::optional<int64_t> {
            if (d.rate == 1.0) return static_cast<int64_t>(frame.size());
            return std::nullopt;
          },
          [](const StratifiedSrswor& d) -> std::optional<int64_t> {
            return d.n;
          },
          [&](const ClusterSrswor& d) -> std::optional<int64_t> {
            const std::vector<std::string> labels = frame.ClusterLabels();
            const auto groups = GroupBy(frame, labels, &FrameRecord::cluster);
            for (const auto& g : groups) {
              if (g.size() != groups[0].size()) return std::nullopt;
            }
            return d.clusters * static_cast<int64_t>(groups[0].size());
          },
          [](const Pps& d) -> std::optional<int64_t> { return d.n; },
          [](const Systematic& d) -> std::optional<int64_t> { return d.n; },
      },
      design);
}

bool HasDataIndependentWeights(const SamplingDesign& design) {
  if (const auto* s = std::get_if<StratifiedSrswor>(&design)) {
    return s->allocation == Allocation::kProportional;
  }
  return !std::holds_alternative<Pps>(design);
}

absl::StatusOr<std::vector<double>> InclusionProbs(const SamplingDesign& design,
                                                   const Frame& frame) {
  absl::Status valid = ValidateDesign(design, frame);
  if (!valid.ok()) return valid;
  return std::visit(InclusionVisitor{frame}, design);
}

absl::StatusOr<std::vector<double>> DesignWeights(absl::Span<const double> pi) {
  std::vector<double> w(pi.size());
  for (size_t i = 0; i < pi.size(); ++i) {
    if (!(pi[i] > 0.0 && pi[i] <= 1.0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("inclusion probability at position ", i,
                       " must lie in (0, 1], got ", pi[i]));
    }
    w[i] = 1.0 / pi[i];
  }
  return w;
}

absl::StatusOr<std::vector<int64_t>> AllocateIntegers(
    absl::Span<const double> scores, absl::Span<const int64_t> capacities,
    int64_t n) {
  const size_t h_count = scores.size();
  if (h_count == 0) return absl::InvalidArgumentError("no strata");
  if (capacities.size() != h_count) {
    return absl::InvalidArgumentError("scores and capacities differ in length");
  }
  if (n < static_cast<int64_t>(h_count)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sample size ", n, " cannot give each of ", h_count,
                     " strata at least one unit"));
  }
  int64_t capacity = 0;
  double total_score = 0.0;
  for (size_t h = 0; h < h_count; ++h) {
    if (capacities[h] < 1) return absl::InvalidArgumentError("empty stratum");
    if (!(scores[h] >= 0.0) || !std::isfinite(scores[h])) {
      return absl::InvalidArgumentError(
          "allocation scores must be finite and "
          "non-negative");
    }
    capacity += capacities[h];
    total_score += scores[h];
  }
  if (n > capacity) {
    return absl::InvalidArgumentError("sample size exceeds frame size");
  }
  // All scores zero: proportional to capacity.
  std::vector<double> s(scores.begin(), scores.end());
  if (!(total_score > 0.0)) {
    for (size_t h = 0; h < h_count; ++h) {
      s[h] = static_cast<double>(capacities[h]);
    }
  }

  // Continuous allocation clamp(lambda * s_h, 1, cap_h) summing to n. The
  // sum is monotone in lambda, so bisection finds which strata sit at a
  // bound; the free strata then share the remainder exactly.
  int64_t positive_capacity = 0;
  int64_t zero_strata = 0;
  for (size_t h = 0; h < h_count; ++h) {
    if (s[h] > 0.0) {
      positive_capacity += capacities[h];
    } else {
      ++zero_strata;
    }
  }
  std::vector<double> ideal(h_count, 1.0);
  if (positive_capacity + zero_strata <= n) {
    // Scored strata saturate; zero-score strata absorb the rest in
    // proportion to their spare capacity.
    std::vector<double> spare_scores;
    std::vector<int64_t> spare_caps;
    std::vector<size_t> spare_index;
    for (size_t h = 0; h < h_count; ++h) {
      if (s[h] > 0.0) {
        ideal[h] = static_cast<double>(capacities[h]);
      } else {
        spare_scores.push_back(static_cast<double>(capacities[h]));
        spare_caps.push_back(capacities[h]);
        spare_index.push_back(h);
      }
    }
    if (!spare_index.empty()) {
      absl::StatusOr<std::vector<int64_t>> rest =
          AllocateIntegers(spare_scores, spare_caps, n - positive_capacity);
      if (!rest.ok()) return rest.status();
      std::vector<int64_t> sizes(h_count);
      for (size_t h = 0; h < h_count; ++h) sizes[h] = capacities[h];
      for (size_t k = 0; k < spare_index.size(); ++k) {
        sizes[spare_index[k]] = (*rest)[k];
      }
      return sizes;
    }
  } else {
    auto clamped_sum = [&](double lambda) {
      double sum = 0.0;
      for (size_t h = 0; h < h_count; ++h) {
        sum +=
            std::clamp(lambda * s[h], 1.0, static_cast<double>(capacities[h]));
      }
      return sum;
    };
    double lo = 0.0;
    double hi = 1.0;
    while (clamped_sum(hi) < static_cast<double>(n)) hi *= 2.0;
    for (int iter = 0; iter < 200; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (clamped_sum(mid) < static_cast<double>(n)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    int64_t remaining = n;
    double free_score = 0.0;
    std::vector<bool> free(h_count, false);
    for (size_t h = 0; h < h_count; ++h) {
      const double v = hi * s[h];
      if (v <= 1.0) {
        ideal[h] = 1.0;
        remaining -= 1;
      } else if (v >= static_cast<double>(capacities[h])) {
        ideal[h] = static_cast<double>(capacities[h]);
        remaining -= capacities[h];
      } else {
        free[h] = true;
        free_score += s[h];
      }
    }
    for (size_t h = 0; h < h_count; ++h) {
      if (free[h]) {
        ideal[h] =
            std::clamp(static_cast<double>(remaining) * s[h] / free_score, 1.0,
                       static_cast<double>(capacities[h]));
      }
    }
  }

  // Largest-remainder rounding within [1, cap_h].
  std::vector<int64_t> sizes(h_count);
  int64_t assigned = 0;
  for (size_t h = 0; h < h_count; ++h) {
    sizes[h] = std::clamp(static_cast<int64_t>(std::floor(ideal[h])),
                          int64_t{1}, capacities[h]);
    assigned += sizes[h];
  }
  while (assigned != n) {
    const bool grow = assigned < n;
    std::optional<size_t> pick;
    double best = 0.0;
    for (size_t h = 0; h < h_count; ++h) {
      if (grow ? sizes[h] >= capacities[h] : sizes[h] <= 1) continue;
      const double gap = ideal[h] - static_cast<double>(sizes[h]);
      if (!pick || (grow ? gap > best : gap < best)) {
        pick = h;
        best = gap;
      }
    }
    if (!pick) {
      return absl::InternalError("allocation did not sum to the sample size");
    }
    sizes[*pick] += grow ? 1 : -1;
    assigned += grow ? 1 : -1;
  }
  return sizes;
}

absl::StatusOr<std::vector<StratumAllocation>> AllocateStrata(
    Allocation allocation, const Frame& frame, int64_t n) {
  if (frame.empty()) return absl::InvalidArgumentError("frame is empty");
  const std::vector<std::string> labels = frame.StratumLabels();
  const auto groups = GroupBy(frame, labels, &FrameRecord::stratum);
  std::vector<double> scores(labels.size());
  std::vector<int64_t> capacities(labels.size());
  for (size_t h = 0; h < labels.size(); ++h) {
    capacities[h] = static_cast<int64_t>(groups[h].size());
    scores[h] = static_cast<double>(capacities[h]);
    if (allocation == Allocation::kNeyman) {
      absl::StatusOr<double> sd = PopulationSd(frame, groups[h]);
      if (!sd.ok()) return sd.status();
      scores[h] *= *sd;
    }
  }
  absl::StatusOr<std::vector<int64_t>> sizes =
      AllocateIntegers(scores, capacities, n);
  if (!sizes.ok()) return sizes.status();
  std::vector<StratumAllocation> out(labels.size());
  for (size_t h = 0; h < labels.size(); ++h) {
    out[h] = {labels[h], capacities[h], (*sizes)[h]};
  }
  return out;
}

absl::StatusOr<WeightedSample> MakeWeightedSample(
    const Frame& frame, absl::Span<const size_t> positions,
    absl::Span<const double> pi) {
  WeightedSample sample;
  for (size_t p : positions) {
    if (p >= frame.size()) {
      return absl::OutOfRangeError("sample position outside the frame");
    }
    if (!sample.units.empty() && sample.units.back().index == p) {
      ++sample.units.back().multiplicity;
      continue;
    }
    if (!(pi[p] > 0.0 && pi[p] <= 1.0)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "unit ", frame[p].id, " has inclusion probability ", pi[p]));
    }
    sample.units.push_back({frame[p].id, p, pi[p], 1.0 / pi[p], 1});
  }
  return sample;
}

absl::StatusOr<WeightedSample> Draw(const SamplingDesign& design,
                                    const Frame& frame, Rng& rng) {
  absl::StatusOr<std::vector<double>> pi = InclusionProbs(design, frame);
  if (!pi.ok()) return pi.status();
  std::vector<size_t> positions;
  if (const auto* d = std::get_if<StratifiedSrswor>(&design)) {
    absl::StatusOr<std::vector<StratumAllocation>> alloc =
        AllocateStrata(d->allocation, frame, d->n);
    if (!alloc.ok()) return alloc.status();
    const auto groups =
        GroupBy(frame, frame.StratumLabels(), &FrameRecord::stratum);
    for (size_t h = 0; h < groups.size(); ++h) {
      for (size_t k : ChooseSubset(groups[h].size(), (*alloc)[h].size, rng)) {
        positions.push_back(groups[h][k]);
      }
    }
    std::sort(positions.begin(), positions.end());
  } else if (const auto* d = std::get_if<Pps>(&design)) {
    absl::StatusOr<ConditionalPoisson> cps = SolveConditionalPoisson(*pi, d->n);
    if (!cps.ok()) return cps.status();
    positions = cps->certain;
    const size_t m = cps->free.size();
    // suffix[i][k] = e_k(odds[i..m)).
    std::vector<std::vector<double>> suffix(
        m + 1, std::vector<double>(cps->size + 1, 0.0));
    suffix[m][0] = 1.0;
    for (size_t i = m; i-- > 0;) {
      suffix[i][0] = 1.0;
      for (int64_t k = 1; k <= cps->size; ++k) {
        suffix[i][k] = suffix[i + 1][k] + cps->odds[i] * suffix[i + 1][k - 1];
      }
    }
    int64_t need = cps->size;
    for (size_t i = 0; i < m && need > 0; ++i) {
      const double p = cps->odds[i] * suffix[i + 1][need - 1] / suffix[i][need];
      if (Bernoulli(rng, p)) {
        positions.push_back(cps->free[i]);
        --need;
      }
    }
    std::sort(positions.begin(), positions.end());
  } else {
    positions = std::visit(DrawVisitor{frame, rng}, design);
  }
  return MakeWeightedSample(frame, positions, *pi);
}

size_t DefaultEnumerationCap() {
  constexpr size_t kDefaultCap = 1000000;
  if (const char* env = std::getenv("SURVEY_DP_ENUM_CAP")) {
    size_t cap;
    if (absl::SimpleAtoi(env, &cap) && cap > 0) return cap;
  }
  return kDefaultCap;
}

absl::StatusOr<std::vector<SampleOutcome>> SampleSpace(
    const SamplingDesign& design, const Frame& frame, size_t cap) {
  absl::StatusOr<std::vector<double>> pi = InclusionProbs(design, frame);
  if (!pi.ok()) return pi.status();
  const size_t n_units = frame.size();
  std::vector<SampleOutcome> out;

  if (const auto* d = std::get_if<Srswr>(&design)) {
    // Multisets of size n; multinomial probability n! / prod(m_j!) / N^n.
    const double count = Choose(n_units + d->n - 1, d->n);
    if (absl::Status s = CheckCap(count, cap); !s.ok()) return s;
    double log_nfact = std::lgamma(static_cast<double>(d->n) + 1.0);
    const double log_base =
        static_cast<double>(d->n) * std::log(static_cast<double>(n_units));
    // Combinations with repetition via stars and bars.
    ForEachCombination(
        n_units + d->n - 1, d->n, [&](const std::vector<size_t>& combo) {
          SampleOutcome o;
          for (size_t j = 0; j < combo.size(); ++j) {
            o.units.push_back(combo[j] - j);
          }
          double log_p = log_nfact - log_base;
          size_t run = 1;
          for (size_t j = 1; j <= o.units.size(); ++j) {
            if (j < o.units.size() && o.units[j] == o.units[j - 1]) {
              ++run;
            } else {
              log_p -= std::lgamma(static_cast<double>(run) + 1.0);
              run = 1;
            }
          }
          o.probability = std::exp(log_p);
          out.push_back(std::move(o));
        });
    return out;
  }
  if (const auto* d = std::get_if<Srswor>(&design)) {
    const double count = Choose(n_units, d->n);
    if (absl::Status s = CheckCap(count, cap); !s.ok()) return s;
    ForEachCombination(n_units, d->n, [&](const std::vector<size_t>& combo) {
      out.push_back({combo, 1.0 / count});
    });
    return out;
  }
  if (const auto* d = std::get_if<Systematic>(&design)) {
    if (d->ordering == SystematicOrdering::kRandomOrder) {
      // A uniformly random ordering makes every n-subset equally likely.
      return SampleSpace(Srswor{d->n}, frame, cap);
    }
    if (absl::Status s = CheckCap(static_cast<double>(n_units), cap); !s.ok()) {
      return s;
    }
    std::map<std::vector<size_t>, double> mass;
    for (size_t start = 0; start < n_units; ++start) {
      mass[SystematicPositions(n_units, d->n, start)] +=
          1.0 / static_cast<double>(n_units);
    }
    for (auto& [units, p] : mass) out.push_back({units, p});
    return out;
  }
  if (const auto* d = std::get_if<PoissonSampling>(&design)) {
    if (d->rate == 1.0) {
      std::vector<size_t> all(n_units);
      std::iota(all.begin(), all.end(), 0);
      out.push_back({all, 1.0});
      return out;
    }
    if (absl::Status s = CheckCap(std::ldexp(1.0, n_units), cap); !s.ok()) {
      return s;
    }
    for (uint64_t mask = 0; mask < (uint64_t{1} << n_units); ++mask) {
      SampleOutcome o;
      o.probability = 1.0;
      for (size_t i = 0; i < n_units; ++i) {
        if (mask & (uint64_t{1} << i)) {
          o.units.push_back(i);
          o.probability *= d->rate;
        } else {
          o.probability *= 1.0 - d->rate;
        }
      }
      out.push_back(std::move(o));
    }
    return out;
  }
  if (const auto* d = std::get_if<ClusterSrswor>(&design)) {
    const std::vector<std::string> labels = frame.ClusterLabels();
    const auto groups = GroupBy(frame, labels, &FrameRecord::cluster);
    const double count = Choose(labels.size(), d->clusters);
    if (absl::Status s = CheckCap(count, cap); !s.ok()) return s;
    ForEachCombination(
        labels.size(), d->clusters, [&](const std::vector<size_t>& combo) {
          SampleOutcome o;
          for (size_t c : combo) {
            o.units.insert(o.units.end(), groups[c].begin(), groups[c].end());
          }
          std::sort(o.units.begin(), o.units.end());
          o.probability = 1.0 / count;
          out.push_back(std::move(o));
        });
    return out;
  }
  if (const auto* d = std::get_if<StratifiedSrswor>(&design)) {
    absl::StatusOr<std::vector<StratumAllocation>> alloc =
        AllocateStrata(d->allocation, frame, d->n);
    if (!alloc.ok()) return alloc.status();
    const auto groups =
        GroupBy(frame, frame.StratumLabels(), &FrameRecord::stratum);
    double count = 1.0;
    for (const StratumAllocation& a : *alloc) {
      count *= Choose(a.population, a.size);
    }
    if (absl::Status s = CheckCap(count, cap); !s.ok()) return s;
    std::vector<SampleOutcome> partial = {{{}, 1.0}};
    for (size_t h = 0; h < groups.size(); ++h) {
      std::vector<SampleOutcome> next;
      const double p = 1.0 / Choose(groups[h].size(), (*alloc)[h].size);
      ForEachCombination(groups[h].size(), (*alloc)[h].size,
                         [&](const std::vector<size_t>& combo) {
                           for (const SampleOutcome& prefix : partial) {
                             SampleOutcome o = prefix;
                             for (size_t k : combo)
                               o.units.push_back(groups[h][k]);
                             o.probability *= p;
                             next.push_back(std::move(o));
                           }
                         });
      partial = std::move(next);
    }
    for (SampleOutcome& o : partial) std::sort(o.units.begin(), o.units.end());
    std::sort(partial.begin(), partial.end(),
              [](const SampleOutcome& a, const SampleOutcome& b) {
                return a.units < b.units;
              });
    return partial;
  }
  const auto& pps = std::get<Pps>(design);
  absl::StatusOr<ConditionalPoisson> cps = SolveConditionalPoisson(*pi, pps.n);
  if (!cps.ok()) return cps.status();
  const double count = Choose(cps->free.size(), cps->size);
  if (absl::Status s = CheckCap(count, cap); !s.ok()) return s;
  const double total = ElementarySymmetric(cps->odds, cps->size)[cps->size];
  ForEachCombination(cps->free.size(), cps->size,
                     [&](const std::vector<size_t>& combo) {
                       SampleOutcome o;
                       o.units = cps->certain;
                       o.probability = 1.0 / total;
                       for (size_t k : combo) {
                         o.units.push_back(cps->free[k]);
                         o.probability *= cps->odds[k];
                       }
                       std::sort(o.units.begin(), o.units.end());
                       out.push_back(std::move(o));
                     });
  return out;
}

}  // namespace survey_dp
