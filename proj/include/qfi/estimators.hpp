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

#ifndef QFI_ESTIMATORS_HPP
#define QFI_ESTIMATORS_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "qfi/bounds.hpp"
#include "qfi/core.hpp"
#include "qfi/jastrow.hpp"
#include "qfi/sampler.hpp"

namespace qfi {

struct MomentRequest {
    int r = 1;
    int s = 0;
    ChannelSpec channel;
    OperatorSpec op;
    std::int64_t n_tuples = 1000000;
    std::uint64_t seed = 1;
    int threads = 0;
};

/// (1-2p)^{hamming(n, n')}.
double dephasing_weight(const Configuration &n, const Configuration &n_prime, double p);

MomentEstimate moment_dephasing_diagonal(const MomentRequest &req, const SamplePool &pool,
                                         const JastrowModel &model);

/// Tr(rho^m O_X^2) under dephasing.
MomentEstimate moment_dephasing_ox(int m, const SamplePool &pool, const JastrowModel &model, double p,
                                   std::int64_t n_tuples, std::uint64_t seed, int threads = 0);

/// w_k = C(N,k)^P p^{kP} (1-p)^{(N-k)P} / Z_w.
struct DampingWeights {
    std::vector<double> w;
    double Z = 0.0;
};
DampingWeights damping_weights(int N, int P, double p);

/// Particle-loss profile (k_1..k_P) with weight prod_a C(N,k_a) p^{k_a} (1-p)^{N-k_a}.
struct DampingProfile {
    std::vector<int> k;
    double weight = 0.0;
};
/// Profiles allowed for Tr(rho^r O rho^s O); diagonal O keeps k constant,
/// O_X changes it by one at each operator link (by 0 or 2 when s = 0).
std::vector<DampingProfile> damping_profiles(int N, int r, int s, bool off_diagonal, double p);

MomentEstimate moment_damping_diagonal(const MomentRequest &req, const SamplePool &pool,
                                       const JastrowModel &model);
MomentEstimate moment_damping_ox(const MomentRequest &req, const SamplePool &pool, const JastrowModel &model);

/// Closed form for the depolarizing channel from pure-state <O>, <O^2> and Tr(O^2).
double moment_depolarizing(int r, int s, double pure_mean, double pure_second, double trace_O2, int L,
                           double p);
MomentEstimate moment_depolarizing_mc(const MomentRequest &req, const SamplePool &pool,
                                      const JastrowModel &model);

/// Tr(O^2) over the full 2^L space.
double operator_trace_square(const OperatorSpec &op, int L);

/// Dispatches on channel and operator kind.
MomentEstimate estimate_moment(const MomentRequest &req, const SamplePool &pool, const JastrowModel &model);

/// Every trace needed for T_0..T_max_k.
MomentTable estimate_moment_table(const ChannelSpec &channel, const OperatorSpec &op, const SamplePool &pool,
                                  const JastrowModel &model, int max_k, std::int64_t n_tuples,
                                  std::uint64_t seed, int threads = 0);

/// Translation-averaged <Z_0 Z_r>, r = 1..rmax.
std::vector<ValueWithError> correlator_zz(const SamplePool &pool, const JastrowModel &model, int rmax,
                                          int threads = 0);
/// Translation-averaged <X_0 X_r>, r = 1..rmax.
std::vector<ValueWithError> correlator_xx(const SamplePool &pool, const JastrowModel &model, int rmax,
                                          int threads = 0);

ValueWithError variance_pure(const SamplePool &pool, const JastrowModel &model, const OperatorSpec &op,
                             int threads = 0);

struct PowerLawFit {
    double exponent = 0.0;
    double prefactor = 0.0;
    double stderr_exponent = 0.0;
    int points = 0;
};

struct FitOptions {
    int r_min = 2;
    int r_max = -1;  // < 0: largest r given
    bool odd_only = false;
    /// When > 0, distances are replaced by the chord length (L/pi) sin(pi r / L).
    int chord_L = 0;
    std::optional<std::vector<double>> errors;
};

/// Fits |value| ~ prefactor * r^{-exponent}; staggered multiplies by (-1)^r first.
PowerLawFit fit_power_law(const std::vector<int> &r, const std::vector<double> &values, bool staggered,
                          const FitOptions &options = {});

}  // namespace qfi

#endif
