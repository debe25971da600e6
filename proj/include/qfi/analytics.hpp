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

#ifndef QFI_ANALYTICS_HPP
#define QFI_ANALYTICS_HPP

#include <vector>

namespace qfi {

double ghz_dephasing_qfi(int L, double p);
double ghz_damping_qfi(int L, double p);

/// 4 (1-2p)^2 Var + 4 p (1-p) L for dephasing with O_X.
double dephasing_ox_qfi(double var_pure, int L, double p);

enum class PrefactorMode { AsPrinted, FourTimes };

/// Var (1-p)^2 / (1 - p + p / 2^{L-1}), times 4 in FourTimes mode.
double depolarizing_qfi(double var_pure, int L, double p, PrefactorMode mode = PrefactorMode::FourTimes);

struct DickeSpectrum {
    std::vector<double> mu;
    std::vector<double> theta;
};

DickeSpectrum dicke_spectrum(int L, double p);

/// 2 sum_{q=1}^{L-1} |O~_q|^2 G_q(L, p) with exact finite-L Fourier
/// coefficients of O_star over the block states.
double dicke_qfi(int L, double p);

/// Discrete Fourier coefficients O~_k = (1/L) sum_j O_star(phi_j) e^{2 pi i k j / L}, as |O~_k|^2.
std::vector<double> dicke_fourier_weights(int L);

/// Large-L form |O~_r|^2 = 1 / (L^2 sin^4(pi r / L)) for odd r, 0 for even r.
/// With O_star normalized to L/2 on a block, the exact weights tend to 4x this.
double dicke_fourier_weight_asymptotic(int L, int r);

double dicke_qfi_thermo(double p);

}  // namespace qfi

#endif
