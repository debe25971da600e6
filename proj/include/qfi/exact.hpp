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

#ifndef QFI_EXACT_HPP
#define QFI_EXACT_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <vector>

#include "qfi/core.hpp"
#include "qfi/jastrow.hpp"

namespace qfi {

constexpr double kDefaultRankCut = 1e-12;

/// Density matrix restricted to one particle-number sector, in the
/// ascending-mask basis of sector_masks(L, particles).
struct SectorBlock {
    int particles = 0;
    std::vector<std::uint64_t> basis;
    Eigen::MatrixXd rho;
};

/// Block-diagonal density operator on 2^L sites' Fock space. Sectors not
/// listed in `blocks` equal background * identity.
struct DenseState {
    int L = 0;
    std::vector<SectorBlock> blocks;  // ascending particle number
    double background = 0.0;

    double trace() const;
    const SectorBlock *find(int particles) const;
    /// Full 2^L x 2^L matrix indexed by mask; L <= 12.
    Eigen::MatrixXd full_matrix() const;
};

DenseState build_jg_density(const JastrowModel &model);

/// Normalized pure state with the given amplitudes on sector masks.
DenseState pure_state(int L, const std::map<std::uint64_t, double> &amplitudes);

/// (-1)^{(L/2) mod 2}|1010..> + |0101..>, normalized.
DenseState ghz_state(int L);
/// Equal superposition of the L translates of a contiguous half-filled block.
DenseState dicke_state(int L);
/// Mask of the block starting at 1-indexed site i (sites i..i+L/2-1 mod L).
std::uint64_t dicke_block_mask(int L, int i);

DenseState apply_dephasing(const DenseState &state, double p);
DenseState apply_damping(const DenseState &state, double p);
DenseState apply_depolarizing(const DenseState &state, double p);
DenseState apply_channel(const DenseState &state, const ChannelSpec &channel);

/// Eigendecomposition of a state paired with one generator; every spectral
/// quantity is a cheap reduction over the stored projections.
class ExactOracle {
   public:
    ExactOracle(const DenseState &state, const OperatorSpec &op);

    double qfi(double rank_cut = kDefaultRankCut) const;
    double moment(int r, int s) const;
    double effective_rank() const;
    std::vector<double> eigenvalues() const;

   private:
    struct Pair {
        int a;
        int b;
        Eigen::MatrixXd o2;  // |<i_a|O|j_b>|^2, rows in block a, cols in block b
    };
    int L_ = 0;
    double background_ = 0.0;
    double background_dim_ = 0.0;
    double trace_qoqo_ = 0.0;
    std::vector<Eigen::VectorXd> lambda_;
    std::vector<Eigen::VectorXd> leak_;
    std::vector<Pair> pairs_;
};

double spectral_qfi(const DenseState &state, const OperatorSpec &op, double rank_cut = kDefaultRankCut);
double exact_moment(const DenseState &state, const OperatorSpec &op, int r, int s);

/// Pure-state quantities straight from amplitudes.
double exact_variance(const JastrowModel &model, const OperatorSpec &op);
double exact_expectation(const JastrowModel &model, const OperatorSpec &op);
double exact_square(const JastrowModel &model, const OperatorSpec &op);
/// Translation-averaged <Z_j Z_{j+r}> and <X_j X_{j+r}>.
double exact_correlator_zz(const JastrowModel &model, int r);
double exact_correlator_xx(const JastrowModel &model, int r);

/// Dephased Dicke-like state in the L-dimensional block basis.
struct BlockBasisState {
    int L = 0;
    double p = 0.0;
    Eigen::MatrixXd matrix;         // <phi_i|rho|phi_j>, i, j = 1..L
    std::vector<double> op_values;  // O_star(phi_i)
};

BlockBasisState dephased_dicke_density(int L, double p);
std::vector<double> eigenvalues(const BlockBasisState &state);
double spectral_qfi(const BlockBasisState &state, double rank_cut = kDefaultRankCut);

}  // namespace qfi

#endif
