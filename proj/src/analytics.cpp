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

#include "qfi/analytics.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "qfi/core.hpp"
#include "qfi/operators.hpp"

namespace qfi {

namespace {

void check_even(int L) {
    if (L < 2 || L % 2 != 0) {
        throw Error(ErrorCode::OddL, "L must be even");
    }
}

void check_strength(double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw Error(ErrorCode::BadStrength, "p must lie in [0, 1]");
    }
}

}  // namespace

double ghz_dephasing_qfi(int L, double p) {
    check_even(L);
    check_strength(p);
    return static_cast<double>(L) * L * std::pow(1.0 - 2.0 * p, 2 * L);
}

double ghz_damping_qfi(int L, double p) {
    check_even(L);
    check_strength(p);
    return static_cast<double>(L) * L * std::pow(1.0 - p, L / 2);
}

double dephasing_ox_qfi(double var_pure, int L, double p) {
    check_even(L);
    check_strength(p);
    double q = 1.0 - 2.0 * p;
    return 4.0 * q * q * var_pure + 4.0 * p * (1.0 - p) * L;
}

double depolarizing_qfi(double var_pure, int L, double p, PrefactorMode mode) {
    check_even(L);
    check_strength(p);
    double denom = 1.0 - p + std::ldexp(p, 1 - L);
    double v = var_pure * (1.0 - p) * (1.0 - p) / denom;
    return mode == PrefactorMode::FourTimes ? 4.0 * v : v;
}

DickeSpectrum dicke_spectrum(int L, double p) {
    check_even(L);
    check_strength(p);
    double q = 1.0 - 2.0 * p;
    double q2 = q * q;
    double q4 = q2 * q2;
    double qL = std::pow(q, L);
    DickeSpectrum s;
    s.mu.resize(L);
    s.theta.resize(L);
    for (int m = 0; m < L; m++) {
        double th = 2.0 * std::numbers::pi * m / L;
        s.theta[m] = th;
        double sign = (m % 2) ? -1.0 : 1.0;
        double denom = 1.0 + q4 - 2.0 * q2 * std::cos(th);
        if (denom > 1e-6) {
            s.mu[m] = (1.0 - q4) / (L * denom) * (1.0 - sign * qL);
        } else {
            double acc = 1.0 + sign * qL;
            double qk = 1.0;
            for (int k = 1; k < L / 2; k++) {
                qk *= q2;
                acc += 2.0 * qk * std::cos(k * th);
            }
            s.mu[m] = acc / L;
        }
    }
    return s;
}

std::vector<double> dicke_fourier_weights(int L) {
    check_even(L);
    std::vector<double> w = star_weights(L);
    double half = 0.0;
    for (double x : w) {
        half += 0.5 * x;
    }
    std::vector<double> o(L);
    for (int i = 1; i <= L; i++) {
        double v = half;
        for (int t = 0; t < L / 2; t++) {
            v -= w[(i - 1 + t) % L];
        }
        o[i - 1] = v;
    }
    std::vector<double> out(L);
    for (int k = 0; k < L; k++) {
        std::complex<double> acc = 0.0;
        for (int j = 1; j <= L; j++) {
            double ang = 2.0 * std::numbers::pi * static_cast<double>((static_cast<long long>(k) * j) % L) / L;
            acc += o[j - 1] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        acc /= static_cast<double>(L);
        out[k] = std::norm(acc);
    }
    return out;
}

double dicke_fourier_weight_asymptotic(int L, int r) {
    if (r % 2 == 0) {
        return 0.0;
    }
    double s = std::sin(std::numbers::pi * r / L);
    return 1.0 / (static_cast<double>(L) * L * s * s * s * s);
}

double dicke_qfi(int L, double p) {
    check_even(L);
    if (L % 4 != 0) {
        throw Error(ErrorCode::BadConfig, "Dicke QFI needs L divisible by 4");
    }
    DickeSpectrum spec = dicke_spectrum(L, p);
    std::vector<double> ow = dicke_fourier_weights(L);
    double total = 0.0;
    for (int q = 1; q < L; q++) {
        if (ow[q] == 0.0) {
            continue;
        }
        double g = 0.0;
        for (int k = 0; k < L; k++) {
            double a = spec.mu[k];
            double b = spec.mu[(k - q + L) % L];
            double sum = a + b;
            if (sum > 1e-300) {
                g += (a - b) * (a - b) / sum;
            }
        }
        total += ow[q] * g;
    }
    return 2.0 * total;
}

double dicke_qfi_thermo(double p) {
    check_strength(p);
    double q = 1.0 - 2.0 * p;
    double q4 = q * q * q * q;
    if (q == 0.0 || q4 == 1.0) {
        throw Error(ErrorCode::DegenerateP, "thermodynamic Dicke QFI is degenerate at p = 0 and p = 1/2");
    }
    return 8.0 * q4 / ((1.0 - q4) * (1.0 - q4));
}

}  // namespace qfi
