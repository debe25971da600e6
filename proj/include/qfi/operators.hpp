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

#ifndef QFI_OPERATORS_HPP
#define QFI_OPERATORS_HPP

#include <bit>
#include <cstdint>
#include <vector>

#include "qfi/core.hpp"

namespace qfi {

/// O(n) = 1/2 sum_j w_j (1 - 2 n_j).
class DiagonalOperator {
   public:
    explicit DiagonalOperator(std::vector<double> weights);

    static DiagonalOperator staggered_z(int L);
    static DiagonalOperator star(int L);

    const std::vector<double> &weights() const {
        return weights_;
    }
    int num_sites() const {
        return static_cast<int>(weights_.size());
    }
    double value(const Configuration &n) const {
        return value_bits(n.bits());
    }
    double value_bits(std::uint64_t bits) const {
        double acc = half_sum_;
        for (std::uint64_t b = bits; b; b &= b - 1) {
            acc -= weights_[std::countr_zero(b)];
        }
        return acc;
    }
    /// Tr(O^2) / 2^L = 1/4 sum_j w_j^2.
    double mean_square_trace() const;

   private:
    std::vector<double> weights_;
    double half_sum_ = 0.0;
};

/// Staggered sign (-1)^j for 1-indexed j.
inline double stagger(int site) {
    return (site & 1) ? -1.0 : 1.0;
}

/// Weights of O_Z, O_star or the custom operator; NotDiagonal for O_X.
DiagonalOperator diagonal_operator(const OperatorSpec &spec, int L);

/// eta_j of O_star: +1 on the outer quarters, -1 in the middle half.
std::vector<double> star_weights(int L);

double diagonal_value(const DiagonalOperator &op, const Configuration &n);

/// <n'| (-1)^j X_j / 2 |n>.
double ox_single_flip_element(int site, const Configuration &n, const Configuration &n_prime);

struct PairTerm {
    Configuration target;
    double weight = 0.0;
};

/// Calls fn(target_bits, weight) for every nonzero <target|O_X^2|n> at fixed
/// particle number: the diagonal L/4 first, then moves occupied j <-> empty l
/// in lexicographic (min, max) site order with weight (-1)^{j+l}/2.
template <typename Fn>
void for_each_ox_pair_term(std::uint64_t bits, int L, Fn &&fn) {
    fn(bits, 0.25 * L);
    for (int a = 0; a < L; a++) {
        for (int b = a + 1; b < L; b++) {
            if (((bits >> a) ^ (bits >> b)) & 1) {
                double w = ((a + b) & 1) ? -0.5 : 0.5;
                fn(bits ^ ((std::uint64_t{1} << a) | (std::uint64_t{1} << b)), w);
            }
        }
    }
}

std::vector<PairTerm> ox_pair_terms(const Configuration &n, int N);

}  // namespace qfi

#endif
