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

#ifndef SURVEY_DP_NEIGHBOR_RELATION_H_
#define SURVEY_DP_NEIGHBOR_RELATION_H_

#include <string>

#include "absl/status/statusor.h"

namespace survey_dp {

// Which pipeline stages are held fixed across neighbouring datasets.
enum class Invariant { kNone, kPopulation, kFrame };

// Which fields of a record a neighbour may replace.
enum class MutableFields { kYOnly, kFullRecord };

// Bounded replace-one neighbours. Under frame invariance both datasets come
// from the same frame, so size measures (and with them inclusion
// probabilities) never change regardless of `fields`.
struct NeighborRelation {
  Invariant invariant = Invariant::kNone;
  MutableFields fields = MutableFields::kYOnly;

  bool XMutable() const {
    return invariant != Invariant::kFrame &&
           fields == MutableFields::kFullRecord;
  }
};

std::string InvariantName(Invariant invariant);
absl::StatusOr<Invariant> ParseInvariant(const std::string& name);
std::string MutableFieldsName(MutableFields fields);
absl::StatusOr<MutableFields> ParseMutableFields(const std::string& name);

}  // namespace survey_dp

#endif  // SURVEY_DP_NEIGHBOR_RELATION_H_
