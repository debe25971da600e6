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

#include "qfi/exact.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <bit>
#include <cmath>

#include "qfi/operators.hpp"

namespace qfi {

namespace {

constexpr double kSectorLimit = 2e4;
constexpr int kMaxDampingSites = 12;
constexpr int kMaxDepolarizingSites = 20;
constexpr double kSupportCut = 1e-14;

void check_strength(double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw Error(ErrorCode::BadStrength, "p must lie in [0, 1]");
    }
}

double ipow(double base, int e) {
    double r = 1.0;
    for (int i = 0; i < e; i++) {
        r *= base;
    }
    return r;
}

SectorBlock &block_for(std::vector<SectorBlock> &blocks, int L, int k) {
    for (auto &b : blocks) {
        if (b.particles == k) {
            return b;
        }
    }
    SectorBlock nb;
    nb.particles = k;
    nb.basis = sector_masks(L, k);
    nb.rho = Eigen::MatrixXd::Zero(nb.basis.size(), nb.basis.size());
    blocks.push_back(std::move(nb));
    return blocks.back();
}

void sort_blocks(std::vector<SectorBlock> &blocks) {
    std::sort(blocks.begin(), blocks.end(),
              [](const SectorBlock &a, const SectorBlock &b) { return a.particles < b.particles; });
}

/// Normalized signed amplitudes of the JG state over the half-filled sector.
Eigen::VectorXd jg_amplitudes(const JastrowModel &model, std::vector<std::uint64_t> &basis) {
    int L = model.num_sites();
    int N = model.num_particles();
    if (binomial(L, N) > kSectorLimit) {
        throw Error(ErrorCode::SectorTooLarge, "dense states are limited to C(L, L/2) <= 20000");
    }
    basis = sector_masks(L, N);
    Eigen::VectorXd logs(basis.size());
    for (size_t i = 0; i < basis.size(); i++) {
        logs[i] = model.log_mag_bits(basis[i]);
    }
    double top = logs.maxCoeff();
    Eigen::VectorXd c(basis.size());
    for (size_t i = 0; i < basis.size(); i++) {
        c[i] = JastrowModel::sign_bits(basis[i]) * std::exp(logs[i] - top);
    }
    return c / c.norm();
}

}  // namespace

double DenseState::trace() const {
    double t = 0.0;
    double stored = 0.0;
    for (const auto &b : blocks) {
        t += b.rho.trace();
        stored += static_cast<double>(b.basis.size());
    }
    return t + background * (std::ldexp(1.0, L) - stored);
}

const SectorBlock *DenseState::find(int particles) const {
    for (const auto &b : blocks) {
        if (b.particles == particles) {
            return &b;
        }
    }
    return nullptr;
}

Eigen::MatrixXd DenseState::full_matrix() const {
    if (L > 12) {
        throw Error(ErrorCode::SpaceTooLarge, "full matrices are limited to L <= 12");
    }
    std::size_t dim = std::size_t{1} << L;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
    for (int k = 0; k <= L; k++) {
        if (find(k) == nullptr) {
            for (std::uint64_t b : sector_masks(L, k)) {
                m(b, b) = background;
            }
        }
    }
    for (const auto &blk : blocks) {
        for (size_t i = 0; i < blk.basis.size(); i++) {
            for (size_t j = 0; j < blk.basis.size(); j++) {
                m(blk.basis[i], blk.basis[j]) = blk.rho(i, j);
            }
        }
    }
    return m;
}

DenseState build_jg_density(const JastrowModel &model) {
    SectorBlock blk;
    blk.particles = model.num_particles();
    Eigen::VectorXd c = jg_amplitudes(model, blk.basis);
    blk.rho = c * c.transpose();
    DenseState s;
    s.L = model.num_sites();
    s.blocks.push_back(std::move(blk));
    return s;
}

DenseState pure_state(int L, const std::map<std::uint64_t, double> &amplitudes) {
    if (amplitudes.empty()) {
        throw Error(ErrorCode::BadConfig, "pure state needs at least one amplitude");
    }
    int k = std::popcount(amplitudes.begin()->first);
    SectorBlock blk;
    blk.particles = k;
    blk.basis = sector_masks(L, k);
    SectorIndex index(L, k);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(blk.basis.size());
    for (const auto &[mask, amp] : amplitudes) {
        if (std::popcount(mask) != k || (mask & ~site_mask(L))) {
            throw Error(ErrorCode::WrongSector, "pure state amplitudes must share one sector");
        }
        c[index.rank(mask)] += amp;
    }
    c /= c.norm();
    blk.rho = c * c.transpose();
    DenseState s;
    s.L = L;
    s.blocks.push_back(std::move(blk));
    return s;
}

DenseState ghz_state(int L) {
    validate_system(make_params(L, 0.0));
    std::uint64_t odd = site_mask(L) & 0x5555555555555555ULL;
    std::uint64_t even = site_mask(L) & 0xAAAAAAAAAAAAAAAAULL;
    double sign = ((L / 2) % 2) ? -1.0 : 1.0;
    return pure_state(L, {{odd, sign}, {even, 1.0}});
}

std::uint64_t dicke_block_mask(int L, int i) {
    std::uint64_t m = 0;
    for (int t = 0; t < L / 2; t++) {
        int site = (i - 1 + t) % L;
        m |= std::uint64_t{1} << site;
    }
    return m;
}

DenseState dicke_state(int L) {
    validate_system(make_params(L, 0.0));
    std::map<std::uint64_t, double> amps;
    for (int i = 1; i <= L; i++) {
        amps[dicke_block_mask(L, i)] += 1.0;
    }
    return pure_state(L, amps);
}

DenseState apply_dephasing(const DenseState &state, double p) {
    check_strength(p);
    DenseState out = state;
    double q = 1.0 - 2.0 * p;
    std::vector<double> qpow(state.L + 1);
    for (int h = 0; h <= state.L; h++) {
        qpow[h] = ipow(q, h);
    }
    for (auto &blk : out.blocks) {
        for (size_t i = 0; i < blk.basis.size(); i++) {
            for (size_t j = 0; j < blk.basis.size(); j++) {
                blk.rho(i, j) *= qpow[std::popcount(blk.basis[i] ^ blk.basis[j])];
            }
        }
    }
    return out;
}

DenseState apply_damping(const DenseState &state, double p) {
    check_strength(p);
    int L = state.L;
    if (L > kMaxDampingSites) {
        throw Error(ErrorCode::SpaceTooLarge, "amplitude damping oracle is limited to L <= 12");
    }
    std::vector<SectorBlock> blocks = state.blocks;
    if (state.background != 0.0) {
        for (int k = 0; k <= L; k++) {
            if (state.find(k) == nullptr) {
                SectorBlock &b = block_for(blocks, L, k);
                b.rho.diagonal().setConstant(state.background);
            }
        }
    }
    double keep = std::sqrt(1.0 - p);
    for (int site = 0; site < L; site++) {
        std::uint64_t bit = std::uint64_t{1} << site;
        std::vector<SectorBlock> next;
        for (const auto &blk : blocks) {
            SectorBlock &same = block_for(next, L, blk.particles);
            size_t n = blk.basis.size();
            for (size_t i = 0; i < n; i++) {
                double fi = (blk.basis[i] & bit) ? keep : 1.0;
                for (size_t j = 0; j < n; j++) {
                    double fj = (blk.basis[j] & bit) ? keep : 1.0;
                    same.rho(i, j) += fi * fj * blk.rho(i, j);
                }
            }
            if (blk.particles == 0 || p == 0.0) {
                continue;
            }
            SectorBlock &lower = block_for(next, L, blk.particles - 1);
            SectorIndex index(L, blk.particles - 1);
            std::vector<std::int64_t> target(n, -1);
            for (size_t i = 0; i < n; i++) {
                if (blk.basis[i] & bit) {
                    target[i] = static_cast<std::int64_t>(index.rank(blk.basis[i] ^ bit));
                }
            }
            for (size_t i = 0; i < n; i++) {
                if (target[i] < 0) {
                    continue;
                }
                for (size_t j = 0; j < n; j++) {
                    if (target[j] >= 0) {
                        lower.rho(target[i], target[j]) += p * blk.rho(i, j);
                    }
                }
            }
        }
        blocks = std::move(next);
    }
    sort_blocks(blocks);
    DenseState out;
    out.L = L;
    out.blocks = std::move(blocks);
    out.background = 0.0;
    return out;
}

DenseState apply_depolarizing(const DenseState &state, double p) {
    check_strength(p);
    if (state.L > kMaxDepolarizingSites) {
        throw Error(ErrorCode::SpaceTooLarge, "depolarizing oracle is limited to L <= 20");
    }
    double t = std::ldexp(p, -state.L);
    DenseState out = state;
    for (auto &blk : out.blocks) {
        blk.rho *= (1.0 - p);
        blk.rho.diagonal().array() += t;
    }
    out.background = (1.0 - p) * state.background + t;
    return out;
}

DenseState apply_channel(const DenseState &state, const ChannelSpec &channel) {
    switch (channel.kind) {
        case ChannelKind::Dephasing:
            return apply_dephasing(state, channel.p);
        case ChannelKind::AmplitudeDamping:
            return apply_damping(state, channel.p);
        case ChannelKind::Depolarizing:
            return apply_depolarizing(state, channel.p);
    }
    return state;
}

ExactOracle::ExactOracle(const DenseState &state, const OperatorSpec &op)
    : L_(state.L), background_(state.background) {
    size_t nb = state.blocks.size();
    std::vector<Eigen::MatrixXd> vecs(nb);
    lambda_.resize(nb);
    leak_.resize(nb);
    double stored = 0.0;
    for (size_t b = 0; b < nb; b++) {
        const auto &blk = state.blocks[b];
        stored += static_cast<double>(blk.basis.size());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(blk.rho);
        Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
        if (background_ == 0.0) {
            std::vector<int> keep;
            for (int i = 0; i < ev.size(); i++) {
                if (ev[i] > kSupportCut) {
                    keep.push_back(i);
                }
            }
            lambda_[b].resize(keep.size());
            vecs[b].resize(blk.basis.size(), keep.size());
            for (size_t c = 0; c < keep.size(); c++) {
                lambda_[b][c] = ev[keep[c]];
                vecs[b].col(c) = es.eigenvectors().col(keep[c]);
            }
        } else {
            lambda_[b] = ev;
            vecs[b] = es.eigenvectors();
        }
    }
    background_dim_ = std::ldexp(1.0, L_) - stored;

    auto find_block = [&](int k) -> int {
        for (size_t b = 0; b < nb; b++) {
            if (state.blocks[b].particles == k) {
                return static_cast<int>(b);
            }
        }
        return -1;
    };

    if (op.is_diagonal()) {
        DiagonalOperator dop = diagonal_operator(op, L_);
        for (size_t b = 0; b < nb; b++) {
            const auto &blk = state.blocks[b];
            Eigen::VectorXd o(blk.basis.size());
            for (size_t i = 0; i < blk.basis.size(); i++) {
                o[i] = dop.value_bits(blk.basis[i]);
            }
            Eigen::MatrixXd ov = o.asDiagonal() * vecs[b];
            Eigen::MatrixXd ot = vecs[b].transpose() * ov;
            Eigen::MatrixXd o2 = ot.array().square().matrix();
            leak_[b] = ov.colwise().squaredNorm().transpose() - o2.colwise().sum().transpose();
            pairs_.push_back(Pair{static_cast<int>(b), static_cast<int>(b), std::move(o2)});
        }
        if (background_ != 0.0) {
            for (int k = 0; k <= L_; k++) {
                if (find_block(k) < 0) {
                    for (std::uint64_t m : sector_masks(L_, k)) {
                        double v = dop.value_bits(m);
                        trace_qoqo_ += v * v;
                    }
                }
            }
        }
    } else {
        for (size_t b = 0; b < nb; b++) {
            leak_[b] = Eigen::VectorXd::Zero(lambda_[b].size());
        }
        for (size_t b = 0; b < nb; b++) {
            const auto &blk = state.blocks[b];
            int k = blk.particles;
            for (int dir : {+1, -1}) {
                int k2 = k + dir;
                if (k2 < 0 || k2 > L_) {
                    continue;
                }
                SectorIndex index(L_, k2);
                Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(binomial(L_, k2)),
                                                          vecs[b].cols());
                for (size_t i = 0; i < blk.basis.size(); i++) {
                    std::uint64_t m = blk.basis[i];
                    for (int site = 0; site < L_; site++) {
                        bool occ = (m >> site) & 1;
                        if (occ == (dir > 0)) {
                            continue;
                        }
                        double amp = 0.5 * stagger(site + 1);
                        w.row(index.rank(m ^ (std::uint64_t{1} << site))) += amp * vecs[b].row(i);
                    }
                }
                leak_[b] += w.colwise().squaredNorm().transpose();
                int b2 = find_block(k2);
                if (b2 >= 0) {
                    Eigen::MatrixXd ot = vecs[b2].transpose() * w;
                    Eigen::MatrixXd o2 = ot.array().square().matrix();
                    leak_[b] -= o2.colwise().sum().transpose();
                    if (dir > 0) {
                        pairs_.push_back(Pair{b2, static_cast<int>(b), std::move(o2)});
                    }
                }
            }
        }
        if (background_ != 0.0) {
            for (int k = 0; k < L_; k++) {
                if (find_block(k) < 0 && find_block(k + 1) < 0) {
                    trace_qoqo_ += 2.0 * 0.25 * binomial(L_, k) * (L_ - k);
                }
            }
        }
    }
}

double ExactOracle::moment(int r, int s) const {
    if (r < 0 || s < 0) {
        throw Error(ErrorCode::BadConfig, "moment powers must be nonnegative");
    }
    auto pw = [](const Eigen::VectorXd &v, int e) {
        Eigen::VectorXd out(v.size());
        for (int i = 0; i < v.size(); i++) {
            out[i] = std::pow(v[i], e);
        }
        return out;
    };
    double total = 0.0;
    for (const auto &pr : pairs_) {
        Eigen::VectorXd ar = pw(lambda_[pr.a], r), as = pw(lambda_[pr.a], s);
        if (pr.a == pr.b) {
            total += ar.dot(pr.o2 * as);
        } else {
            Eigen::VectorXd br = pw(lambda_[pr.b], r), bs = pw(lambda_[pr.b], s);
            total += ar.dot(pr.o2 * bs) + as.dot(pr.o2 * br);
        }
    }
    double tr = std::pow(background_, r);
    double ts = std::pow(background_, s);
    for (size_t b = 0; b < lambda_.size(); b++) {
        for (int i = 0; i < lambda_[b].size(); i++) {
            double l = lambda_[b][i];
            total += (std::pow(l, r) * ts + std::pow(l, s) * tr) * leak_[b][i];
        }
    }
    if (background_ != 0.0) {
        total += tr * ts * trace_qoqo_;
    }
    return total;
}

double ExactOracle::qfi(double rank_cut) const {
    double total = 0.0;
    for (const auto &pr : pairs_) {
        const auto &la = lambda_[pr.a];
        const auto &lb = lambda_[pr.b];
        double acc = 0.0;
        for (int j = 0; j < lb.size(); j++) {
            for (int i = 0; i < la.size(); i++) {
                double sum = la[i] + lb[j];
                if (sum > rank_cut) {
                    double d = la[i] - lb[j];
                    acc += d * d / sum * pr.o2(i, j);
                }
            }
        }
        total += (pr.a == pr.b) ? acc : 2.0 * acc;
    }
    double cross = 0.0;
    for (size_t b = 0; b < lambda_.size(); b++) {
        for (int i = 0; i < lambda_[b].size(); i++) {
            double l = lambda_[b][i];
            double sum = l + background_;
            if (sum > rank_cut) {
                double d = l - background_;
                cross += d * d / sum * leak_[b][i];
            }
        }
    }
    return 2.0 * total + 4.0 * cross;
}

std::vector<double> ExactOracle::eigenvalues() const {
    std::vector<double> out;
    for (const auto &l : lambda_) {
        out.insert(out.end(), l.data(), l.data() + l.size());
    }
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

double ExactOracle::effective_rank() const {
    double h = 0.0;
    for (const auto &l : lambda_) {
        for (int i = 0; i < l.size(); i++) {
            if (l[i] > 0.0) {
                h -= l[i] * std::log(l[i]);
            }
        }
    }
    if (background_ > 0.0) {
        h -= background_dim_ * background_ * std::log(background_);
    }
    return std::exp(h);
}

double spectral_qfi(const DenseState &state, const OperatorSpec &op, double rank_cut) {
    return ExactOracle(state, op).qfi(rank_cut);
}

double exact_moment(const DenseState &state, const OperatorSpec &op, int r, int s) {
    return ExactOracle(state, op).moment(r, s);
}

double exact_expectation(const JastrowModel &model, const OperatorSpec &op) {
    if (!op.is_diagonal()) {
        return 0.0;
    }
    std::vector<std::uint64_t> basis;
    Eigen::VectorXd c = jg_amplitudes(model, basis);
    DiagonalOperator dop = diagonal_operator(op, model.num_sites());
    double acc = 0.0;
    for (size_t i = 0; i < basis.size(); i++) {
        acc += c[i] * c[i] * dop.value_bits(basis[i]);
    }
    return acc;
}

double exact_square(const JastrowModel &model, const OperatorSpec &op) {
    std::vector<std::uint64_t> basis;
    Eigen::VectorXd c = jg_amplitudes(model, basis);
    int L = model.num_sites();
    double acc = 0.0;
    if (op.is_diagonal()) {
        DiagonalOperator dop = diagonal_operator(op, L);
        for (size_t i = 0; i < basis.size(); i++) {
            double v = dop.value_bits(basis[i]);
            acc += c[i] * c[i] * v * v;
        }
    } else {
        SectorIndex index(L, model.num_particles());
        for (size_t i = 0; i < basis.size(); i++) {
            for_each_ox_pair_term(basis[i], L, [&](std::uint64_t t, double w) {
                acc += c[i] * w * c[index.rank(t)];
            });
        }
    }
    return acc;
}

double exact_variance(const JastrowModel &model, const OperatorSpec &op) {
    double m = exact_expectation(model, op);
    return exact_square(model, op) - m * m;
}

double exact_correlator_zz(const JastrowModel &model, int r) {
    std::vector<std::uint64_t> basis;
    Eigen::VectorXd c = jg_amplitudes(model, basis);
    int L = model.num_sites();
    double acc = 0.0;
    for (size_t i = 0; i < basis.size(); i++) {
        double zz = 0.0;
        for (int j = 0; j < L; j++) {
            int a = (basis[i] >> j) & 1;
            int b = (basis[i] >> ((j + r) % L)) & 1;
            zz += (1 - 2 * a) * (1 - 2 * b);
        }
        acc += c[i] * c[i] * zz / L;
    }
    return acc;
}

double exact_correlator_xx(const JastrowModel &model, int r) {
    std::vector<std::uint64_t> basis;
    Eigen::VectorXd c = jg_amplitudes(model, basis);
    int L = model.num_sites();
    SectorIndex index(L, model.num_particles());
    double acc = 0.0;
    for (size_t i = 0; i < basis.size(); i++) {
        for (int j = 0; j < L; j++) {
            int l = (j + r) % L;
            if (l == j) {
                acc += c[i] * c[i] / L;
                continue;
            }
            if ((((basis[i] >> j) ^ (basis[i] >> l)) & 1) == 0) {
                continue;
            }
            std::uint64_t t = basis[i] ^ ((std::uint64_t{1} << j) | (std::uint64_t{1} << l));
            acc += c[i] * c[index.rank(t)] / L;
        }
    }
    return acc;
}

BlockBasisState dephased_dicke_density(int L, double p) {
    if (L < 2 || L % 2 != 0) {
        throw Error(ErrorCode::OddL, "L must be even");
    }
    if (L > 2000) {
        throw Error(ErrorCode::SpaceTooLarge, "block-basis Dicke states are limited to L <= 2000");
    }
    check_strength(p);
    BlockBasisState s;
    s.L = L;
    s.p = p;
    double q2 = (1.0 - 2.0 * p) * (1.0 - 2.0 * p);
    std::vector<double> qpow(L / 2 + 1);
    for (int d = 0; d <= L / 2; d++) {
        qpow[d] = ipow(q2, d) / L;
    }
    s.matrix.resize(L, L);
    for (int i = 0; i < L; i++) {
        for (int j = 0; j < L; j++) {
            int d = std::abs(i - j);
            d = std::min(d, L - d);
            s.matrix(i, j) = qpow[d];
        }
    }
    std::vector<double> w = star_weights(L);
    double half = 0.0;
    for (double x : w) {
        half += 0.5 * x;
    }
    s.op_values.resize(L);
    for (int i = 1; i <= L; i++) {
        std::vector<char> occ(L, 0);
        for (int t = 0; t < L / 2; t++) {
            occ[(i - 1 + t) % L] = 1;
        }
        double v = half;
        for (int j = 0; j < L; j++) {
            if (occ[j]) {
                v -= w[j];
            }
        }
        s.op_values[i - 1] = v;
    }
    return s;
}

std::vector<double> eigenvalues(const BlockBasisState &state) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(state.matrix, Eigen::EigenvaluesOnly);
    const auto &ev = es.eigenvalues();
    return std::vector<double>(ev.data(), ev.data() + ev.size());
}

double spectral_qfi(const BlockBasisState &state, double rank_cut) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(state.matrix);
    Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
    Eigen::VectorXd o = Eigen::Map<const Eigen::VectorXd>(state.op_values.data(), state.op_values.size());
    Eigen::MatrixXd ot = es.eigenvectors().transpose() * o.asDiagonal() * es.eigenvectors();
    double acc = 0.0;
    for (int i = 0; i < lam.size(); i++) {
        for (int j = 0; j < lam.size(); j++) {
            double sum = lam[i] + lam[j];
            if (sum > rank_cut) {
                double d = lam[i] - lam[j];
                acc += d * d / sum * ot(i, j) * ot(i, j);
            }
        }
    }
    return 2.0 * acc;
}

}  // namespace qfi
