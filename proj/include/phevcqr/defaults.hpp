// Copyright 2026 The phevcqr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PHEVCQR_DEFAULTS_HPP_
#define PHEVCQR_DEFAULTS_HPP_

#include <vector>

#include "phevcqr/common.hpp"
#include "phevcqr/edm.hpp"

namespace phevcqr {

// Eight segments of a mixed urban/highway commute: stop-terminated urban
// segments first, then arterial and highway segments. Limits in mph are
// converted to m/s.
inline std::vector<edm::RouteSegment> default_segments() {
  return {
      {400.0, mph_to_mps(25.0), true},   {650.0, mph_to_mps(35.0), true},
      {800.0, mph_to_mps(30.0), true},   {1200.0, mph_to_mps(40.0), true},
      {900.0, mph_to_mps(45.0), false},  {1800.0, mph_to_mps(55.0), false},
      {2500.0, mph_to_mps(65.0), false}, {2000.0, mph_to_mps(60.0), true},
  };
}

// The eight default segments driven back to back.
inline edm::Route standard_route() { return edm::Route(default_segments()); }

inline std::vector<double> default_soc0() { return {0.26, 0.30, 0.40}; }

}  // namespace phevcqr

#endif  // PHEVCQR_DEFAULTS_HPP_
