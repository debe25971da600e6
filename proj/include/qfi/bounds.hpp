// Copyright 2026 The qfilab Authors
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

#ifndef QFI_BOUNDS_HPP
#define QFI_BOUNDS_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "qfi/core.hpp"

namespace qfi {

constexpr double kDefaultConditionLimit = 1e12;

/// Traces Tr(rho^r O rho^s O) keyed by (r, s); lookups are symmetric.
class MomentTable {
   public:
    void set(const MomentEstimate &m);
    void set(int r, int s, double value, double error = 0.0);
    const MomentEstimate *get(int r, int s) const;
    bool has(int r, int s) const {
        return get(r, s) != nullptr;
    }
    int max_P() const {
        return max_P_;
    }
    const std::map<std::pair<int, int>, MomentEstimate> &traces() const {
        return traces_;
    }

   private:
    std::map<std::pair<int, int>, MomentEstimate> traces_;
    int max_P_ = 0;
};

/// (r, s) pairs, r >= s, needed for T_0..T_max_k.
std::vector<std::pair<int, int>> required_traces(int max_k);

/// Table filled from an exact moment function for T_0..T_max_k.
MomentTable moment_table_from(const std::function<double(int, int)> &moment, int max_k);

/// C_l^{(k)} = C(k,l) - 2 C(k,l-1) + C(k,l-2).
double trace_coefficient(int k, int l);

ValueWithError compute_Tk(const MomentTable &table, int k);
ValueWithError compute_Fn(const std::vector<ValueWithError> &T, int n);
KrylovEntry compute_Bn(const std::vector<ValueWithError> &T, int n,
                       double condition_limit = kDefaultConditionLimit);

double sql_threshold(int L);

struct BoundOptions {
    int max_F = 5;
    int max_B = 2;
    double condition_limit = kDefaultConditionLimit;
    int n_bootstrap = 400;
    std::uint64_t seed = 0x5eed;
};

/// T_k, F_n and B_n for everything the table supports. When every trace
/// carries group means over the same groups, errors come from a joint
/// bootstrap over groups; otherwise from linear propagation.
BoundReport assemble_bounds(const MomentTable &table, const BoundOptions &options = {});

}  // namespace qfi

#endif
