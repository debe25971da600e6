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

#include "qfi/jastrow.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <numbers>

namespace qfi {

namespace {

std::atomic<std::uint64_t> g_clamp_events{0};

constexpr double kLogClamp = 700.0;

int site_sum_parity(std::uint64_t bits) {
    // sum of 1-indexed positions mod 2 = number of occupied odd sites mod 2,
    // odd sites being bits 0, 2, 4, ...
    return std::popcount(bits & 0x5555555555555555ULL) & 1;
}

}  // namespace

std::uint64_t clamp_event_count() {
    return g_clamp_events.load(std::memory_order_relaxed);
}

void reset_clamp_events() {
    g_clamp_events.store(0, std::memory_order_relaxed);
}

JastrowModel::JastrowModel(SystemParams params) : params_(params) {
    validate_system(params_);
    int L = params_.L;
    log_sine_.assign(L, 0.0);
    for (int d = 1; d < L; d++) {
        int dd = std::min(d, L - d);
        log_sine_[d] = std::log(std::sin(std::numbers::pi * dd / L));
    }
    // exact symmetry and exact zero at d = L/2
    log_sine_[L / 2] = 0.0;
}

double JastrowModel::exp_clamped(double log_ratio) {
    if (log_ratio > kLogClamp) {
        g_clamp_events.fetch_add(1, std::memory_order_relaxed);
        log_ratio = kLogClamp;
    } else if (log_ratio < -kLogClamp) {
        g_clamp_events.fetch_add(1, std::memory_order_relaxed);
        log_ratio = -kLogClamp;
    }
    return std::exp(log_ratio);
}

int JastrowModel::sign_bits(std::uint64_t bits) {
    return site_sum_parity(bits) ? -1 : 1;
}

double JastrowModel::log_mag_bits(std::uint64_t bits) const {
    if (params_.alpha == 0.0) {
        return 0.0;
    }
    int sites[kMaxSites];
    int m = 0;
    for (std::uint64_t b = bits; b; b &= b - 1) {
        sites[m++] = std::countr_zero(b);
    }
    double acc = 0.0;
    for (int a = 0; a < m; a++) {
        for (int c = a + 1; c < m; c++) {
            acc += log_sine_[sites[c] - sites[a]];
        }
    }
    return params_.alpha * acc;
}

Amplitude JastrowModel::amplitude(const Configuration &n) const {
    if (n.num_sites() != params_.L || n.particle_count() != params_.N) {
        throw Error(ErrorCode::WrongSector, "configuration is not half filled for this model");
    }
    return Amplitude{sign_bits(n.bits()), log_mag_bits(n.bits())};
}

double JastrowModel::amplitude_ratio_masks(const Configuration &n, std::uint64_t remove,
                                     std::uint64_t add) const {
    std::uint64_t bits = n.bits();
    if ((remove & ~bits) != 0) {
        throw Error(ErrorCode::RemoveNotOccupied, "removed sites must be occupied");
    }
    std::uint64_t kept = bits & ~remove;
    if ((add & kept) != 0) {
        return 0.0;
    }
    std::uint64_t target = kept | add;
    if (std::popcount(target) != params_.N) {
        return 0.0;
    }
    if (remove == add) {
        return 1.0;
    }
    double delta = 0.0;
    if (params_.alpha != 0.0) {
        auto cross = [&](std::uint64_t set, std::uint64_t with) {
            double acc = 0.0;
            for (std::uint64_t a = set; a; a &= a - 1) {
                int x = std::countr_zero(a);
                for (std::uint64_t k = with; k; k &= k - 1) {
                    acc += log_sine_[std::abs(std::countr_zero(k) - x)];
                }
            }
            return acc;
        };
        auto within = [&](std::uint64_t set) {
            double acc = 0.0;
            for (std::uint64_t a = set; a; a &= a - 1) {
                int x = std::countr_zero(a);
                for (std::uint64_t c = a & (a - 1); c; c &= c - 1) {
                    acc += log_sine_[std::countr_zero(c) - x];
                }
            }
            return acc;
        };
        delta = params_.alpha * (cross(add, kept) + within(add) - cross(remove, kept) - within(remove));
    }
    int sign = site_sum_parity(add) ^ site_sum_parity(remove) ? -1 : 1;
    return sign * exp_clamped(delta);
}

double JastrowModel::amplitude_ratio(const Configuration &n, const std::vector<int> &remove,
                                     const std::vector<int> &add) const {
    auto to_mask = [&](const std::vector<int> &sites) {
        std::uint64_t m = 0;
        for (int j : sites) {
            if (j < 1 || j > params_.L) {
                throw Error(ErrorCode::BadConfig, "site index out of range");
            }
            m |= std::uint64_t{1} << (j - 1);
        }
        return m;
    };
    return amplitude_ratio_masks(n, to_mask(remove), to_mask(add));
}

double JastrowModel::log_prob_ratio(const Configuration &n, int remove_site, int add_site) const {
    std::uint64_t bits = n.bits();
    int r = remove_site - 1;
    int a = add_site - 1;
    if (!((bits >> r) & 1)) {
        throw Error(ErrorCode::RemoveNotOccupied, "removed site must be occupied");
    }
    if (r == a) {
        return 0.0;
    }
    if ((bits >> a) & 1) {
        return -INFINITY;
    }
    if (params_.alpha == 0.0) {
        return 0.0;
    }
    double acc = 0.0;
    for (std::uint64_t k = bits & ~(std::uint64_t{1} << r); k; k &= k - 1) {
        int x = std::countr_zero(k);
        acc += log_sine_[std::abs(x - a)] - log_sine_[std::abs(x - r)];
    }
    return 2.0 * params_.alpha * acc;
}

OccupationField::OccupationField(const JastrowModel &model, std::uint64_t bits)
    : model_(&model), bits_(bits), h_(model.num_sites(), 0.0) {
    reset(bits);
}

void OccupationField::reset(std::uint64_t bits) {
    const auto &ls = model_->log_sine_table();
    int L = model_->num_sites();
    bits_ = bits;
    std::fill(h_.begin(), h_.end(), 0.0);
    for (std::uint64_t k = bits; k; k &= k - 1) {
        int y = std::countr_zero(k);
        const double *row = ls.data();
        for (int x = 0; x < y; x++) {
            h_[x] += row[y - x];
        }
        for (int x = y + 1; x < L; x++) {
            h_[x] += row[x - y];
        }
    }
}

double OccupationField::move_log_ratio(int r, int a) const {
    const auto &ls = model_->log_sine_table();
    return model_->alpha() * (h_[a] - ls[std::abs(a - r)] - h_[r]);
}

double OccupationField::move_ratio(int r, int a) const {
    // sign changes by (-1)^{(a+1)-(r+1)}
    int sign = ((a - r) & 1) ? -1 : 1;
    return sign * JastrowModel::exp_clamped(move_log_ratio(r, a));
}

void OccupationField::apply_move(int r, int a) {
    const auto &ls = model_->log_sine_table();
    int L = model_->num_sites();
    for (int x = 0; x < L; x++) {
        h_[x] += ls[std::abs(x - a)] - ls[std::abs(x - r)];
    }
    bits_ ^= (std::uint64_t{1} << r) | (std::uint64_t{1} << a);
}

}  // namespace qfi
