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

#include "qfi/operators.hpp"

#include <numeric>

namespace qfi {

DiagonalOperator::DiagonalOperator(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty() || weights_.size() > static_cast<size_t>(kMaxSites)) {
        throw Error(ErrorCode::BadCoefficients, "operator needs between 1 and 64 weights");
    }
    half_sum_ = 0.5 * std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

DiagonalOperator DiagonalOperator::staggered_z(int L) {
    std::vector<double> w(L);
    for (int j = 1; j <= L; j++) {
        w[j - 1] = stagger(j);
    }
    return DiagonalOperator(std::move(w));
}

std::vector<double> star_weights(int L) {
    std::vector<double> w(L);
    for (int j = 1; j <= L; j++) {
        w[j - 1] = (j <= L / 4 || j > (3 * L) / 4) ? 1.0 : -1.0;
    }
    return w;
}

DiagonalOperator DiagonalOperator::star(int L) {
    return DiagonalOperator(star_weights(L));
}

double DiagonalOperator::mean_square_trace() const {
    double acc = 0.0;
    for (double w : weights_) {
        acc += w * w;
    }
    return 0.25 * acc;
}

DiagonalOperator diagonal_operator(const OperatorSpec &spec, int L) {
    switch (spec.kind) {
        case OperatorKind::OZ:
            return DiagonalOperator::staggered_z(L);
        case OperatorKind::OStar:
            return DiagonalOperator::star(L);
        case OperatorKind::CustomDiagonal:
            if (!spec.coefficients || static_cast<int>(spec.coefficients->size()) != L) {
                throw Error(ErrorCode::BadCoefficients, "custom operator needs exactly L coefficients");
            }
            return DiagonalOperator(*spec.coefficients);
        case OperatorKind::OX:
            break;
    }
    throw Error(ErrorCode::NotDiagonal, "O_X has no diagonal representation");
}

double diagonal_value(const DiagonalOperator &op, const Configuration &n) {
    return op.value(n);
}

double ox_single_flip_element(int site, const Configuration &n, const Configuration &n_prime) {
    if (site < 1 || site > n.num_sites()) {
        return 0.0;
    }
    if ((n.bits() ^ n_prime.bits()) != (std::uint64_t{1} << (site - 1))) {
        return 0.0;
    }
    return 0.5 * stagger(site);
}

std::vector<PairTerm> ox_pair_terms(const Configuration &n, int N) {
    if (n.particle_count() != N) {
        throw Error(ErrorCode::WrongSector, "pair terms need a configuration in the target sector");
    }
    std::vector<PairTerm> out;
    int L = n.num_sites();
    for_each_ox_pair_term(n.bits(), L, [&](std::uint64_t t, double w) {
        out.push_back(PairTerm{Configuration(L, t), w});
    });
    return out;
}

}  // namespace qfi
