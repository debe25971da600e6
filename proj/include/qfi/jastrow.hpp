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

#ifndef QFI_JASTROW_HPP
#define QFI_JASTROW_HPP

#include <cstdint>
#include <vector>

#include "qfi/core.hpp"

namespace qfi {

struct Amplitude {
    int sign = 1;
    double log_mag = 0.0;
};

/// Unnormalized Jastrow-Gutzwiller amplitudes
///   c_n = (-1)^{sum_j j n_j} prod_{i<j} sin(pi (j - i) / L)^{alpha n_i n_j}.
class JastrowModel {
   public:
    explicit JastrowModel(SystemParams params);
    JastrowModel(int L, double alpha) : JastrowModel(make_params(L, alpha)) {
    }

    const SystemParams &params() const {
        return params_;
    }
    int num_sites() const {
        return params_.L;
    }
    int num_particles() const {
        return params_.N;
    }
    double alpha() const {
        return params_.alpha;
    }

    /// ln sin(pi d / L) for d in 1..L-1; index 0 holds 0 by convention.
    double log_sine(int d) const {
        return log_sine_[d];
    }
    const std::vector<double> &log_sine_table() const {
        return log_sine_;
    }

    Amplitude amplitude(const Configuration &n) const;

    /// No sector check; any particle number.
    double log_mag_bits(std::uint64_t bits) const;
    static int sign_bits(std::uint64_t bits);

    /// c_{(n \ remove) u add} / c_n, masks in bit layout.
    double amplitude_ratio_masks(const Configuration &n, std::uint64_t remove, std::uint64_t add) const;
    double amplitude_ratio(const Configuration &n, const std::vector<int> &remove,
                           const std::vector<int> &add) const;

    /// 2 (log|c_n'| - log|c_n|) for the swap remove_site -> add_site, in O(N).
    double log_prob_ratio(const Configuration &n, int remove_site, int add_site) const;

    /// Signed exp of a log ratio, clamped to +-700 (clamps are counted).
    static double exp_clamped(double log_ratio);

   private:
    SystemParams params_;
    std::vector<double> log_sine_;
};

/// h(x) = sum_{k occupied} ln sin(pi |x - k| / L) for every site x, kept in sync
/// with a configuration under swaps. Sites here are 0-indexed.
class OccupationField {
   public:
    OccupationField(const JastrowModel &model, std::uint64_t bits);

    /// Rebuilds the field for a new configuration without reallocating.
    void reset(std::uint64_t bits);

    std::uint64_t bits() const {
        return bits_;
    }
    double at(int x) const {
        return h_[x];
    }
    /// ln|c_{n'}/c_n| for moving the particle at r to the empty site a.
    double move_log_ratio(int r, int a) const;
    /// Signed c_{n'}/c_n for the same move.
    double move_ratio(int r, int a) const;
    void apply_move(int r, int a);

   private:
    const JastrowModel *model_;
    std::uint64_t bits_;
    std::vector<double> h_;
};

/// Number of log-ratio clamps since program start (or the last reset).
std::uint64_t clamp_event_count();
void reset_clamp_events();

}  // namespace qfi

#endif
