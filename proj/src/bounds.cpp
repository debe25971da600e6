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

#include "qfi/bounds.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>


namespace qfi {

void MomentTable::set(const MomentEstimate &m) {
    int r = std::max(m.r, m.s);
    int s = std::min(m.r, m.s);
    MomentEstimate copy = m;
    copy.r = r;
    copy.s = s;
    traces_[{r, s}] = std::move(copy);
    max_P_ = std::max(max_P_, r + s);
}

void MomentTable::set(int r, int s, double value, double error) {
    MomentEstimate m;
    m.r = r;
    m.s = s;
    m.value = value;
    m.std_error = error;
    set(m);
}

const MomentEstimate *MomentTable::get(int r, int s) const {
    auto it = traces_.find({std::max(r, s), std::min(r, s)});
    return it == traces_.end() ? nullptr : &it->second;
}

std::vector<std::pair<int, int>> required_traces(int max_k) {
    std::vector<std::pair<int, int>> out;
    for (int P = 2; P <= max_k + 2; P++) {
        for (int s = 0; 2 * s <= P; s++) {
            out.emplace_back(P - s, s);
        }
    }
    return out;
}

MomentTable moment_table_from(const std::function<double(int, int)> &moment, int max_k) {
    MomentTable t;
    for (auto [r, s] : required_traces(max_k)) {
        t.set(r, s, moment(r, s));
    }
    return t;
}

double trace_coefficient(int k, int l) {
    return binomial(k, l) - 2.0 * binomial(k, l - 1) + binomial(k, l - 2);
}

namespace {

bool table_has_Tk(const MomentTable &table, int k) {
    for (int l = 0; l <= k + 2; l++) {
        if (trace_coefficient(k, l) != 0.0 && !table.has(k + 2 - l, l)) {
            return false;
        }
    }
    return true;
}

double Tk_from(const std::function<double(int, int)> &trace, int k) {
    double acc = 0.0;
    for (int l = 0; l <= k + 2; l++) {
        double c = trace_coefficient(k, l);
        if (c != 0.0) {
            acc += c * trace(k + 2 - l, l);
        }
    }
    return std::ldexp(acc, -k);
}

double Fn_from(const std::vector<double> &T, int n) {
    double acc = 0.0;
    for (int k = 0; k <= n; k++) {
        double c = std::ldexp(binomial(n + 1, k + 1), k + 1);
        acc += (k % 2 ? -c : c) * T[k];
    }
    return acc;
}

struct KrylovValue {
    double value;
    double condition;
    bool stable;
};

KrylovValue Bn_from(const std::vector<double> &T, int n, double condition_limit) {
    Eigen::MatrixXd A(n, n);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; i++) {
        b[i] = T[i];
        for (int j = 0; j < n; j++) {
            A(i, j) = T[i + j + 1];
        }
    }
    if (!A.allFinite() || !b.allFinite()) {
        throw Error(ErrorCode::SingularMatrix, "moment matrix has non-finite entries");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    if (es.info() != Eigen::Success) {
        throw Error(ErrorCode::SingularMatrix, "moment matrix factorization failed");
    }
    const Eigen::VectorXd &lam = es.eigenvalues();
    double top = lam.cwiseAbs().maxCoeff();
    double bottom = lam.cwiseAbs().minCoeff();
    if (top == 0.0) {
        if (b.cwiseAbs().maxCoeff() == 0.0) {
            return {0.0, INFINITY, false};
        }
        throw Error(ErrorCode::SingularMatrix, "moment matrix vanishes while b does not");
    }
    double condition = bottom > 0.0 ? top / bottom : INFINITY;
    bool stable = condition <= condition_limit;
    Eigen::VectorXd proj = es.eigenvectors().transpose() * b;
    double value = 0.0;
    for (int i = 0; i < n; i++) {
        if (std::abs(lam[i]) * condition_limit >= top) {
            value += proj[i] * proj[i] / lam[i];
        }
    }
    return {value, condition, stable};
}

}  // namespace

ValueWithError compute_Tk(const MomentTable &table, int k) {
    if (k < 0) {
        throw Error(ErrorCode::MissingTrace, "k must be nonnegative");
    }
    double var = 0.0;
    double magnitude = 0.0;
    auto trace = [&](int r, int s) {
        const MomentEstimate *m = table.get(r, s);
        if (m == nullptr) {
            throw Error(ErrorCode::MissingTrace,
                        "missing trace (" + std::to_string(r) + "," + std::to_string(s) + ")");
        }
        return m->value;
    };
    for (int l = 0; l <= k + 2; l++) {
        double c = trace_coefficient(k, l);
        if (c != 0.0) {
            const MomentEstimate *m = table.get(k + 2 - l, l);
            if (m != nullptr) {
                var += c * c * m->std_error * m->std_error;
                magnitude += std::abs(c * m->value);
            }
        }
    }
    double value = Tk_from(trace, k);
    // cancellation residue, e.g. a state commuting with O
    if (std::abs(value) <= 64 * std::numeric_limits<double>::epsilon() * std::ldexp(magnitude, -k)) {
        value = 0.0;
    }
    return {value, std::ldexp(std::sqrt(var), -k)};
}

ValueWithError compute_Fn(const std::vector<ValueWithError> &T, int n) {
    if (n < 0 || static_cast<int>(T.size()) <= n) {
        throw Error(ErrorCode::MissingTk, "F_n needs T_0..T_n");
    }
    std::vector<double> v(n + 1);
    double var = 0.0;
    for (int k = 0; k <= n; k++) {
        v[k] = T[k].value;
        double c = std::ldexp(binomial(n + 1, k + 1), k + 1);
        var += c * c * T[k].error * T[k].error;
    }
    return {Fn_from(v, n), std::sqrt(var)};
}

KrylovEntry compute_Bn(const std::vector<ValueWithError> &T, int n, double condition_limit) {
    if (n < 1 || static_cast<int>(T.size()) < 2 * n) {
        throw Error(ErrorCode::MissingTk, "B_n needs T_0..T_{2n-1}");
    }
    std::vector<double> v(2 * n);
    for (int k = 0; k < 2 * n; k++) {
        v[k] = T[k].value;
    }
    KrylovValue kv = Bn_from(v, n, condition_limit);
    double var = 0.0;
    for (int k = 0; k < 2 * n; k++) {
        if (T[k].error == 0.0) {
            continue;
        }
        double h = 1e-6 * std::max(std::abs(v[k]), 1e-300);
        std::vector<double> up = v, dn = v;
        up[k] += h;
        dn[k] -= h;
        double g = (Bn_from(up, n, condition_limit).value - Bn_from(dn, n, condition_limit).value) / (2 * h);
        var += g * g * T[k].error * T[k].error;
    }
    return KrylovEntry{n, kv.value, std::sqrt(var), kv.condition, kv.stable};
}

double sql_threshold(int L) {
    return static_cast<double>(L);
}

BoundReport assemble_bounds(const MomentTable &table, const BoundOptions &options) {
    BoundReport rep;
    int kmax = -1;
    while (kmax + 1 <= 2 * std::max(options.max_B, 0) - 1 || kmax + 1 <= options.max_F) {
        if (!table_has_Tk(table, kmax + 1)) {
            break;
        }
        kmax++;
    }
    for (int k = 0; k <= kmax; k++) {
        rep.T.push_back(compute_Tk(table, k));
    }
    int fmax = std::min(options.max_F, kmax);
    for (int n = 0; n <= fmax; n++) {
        rep.F.push_back(compute_Fn(rep.T, n));
    }
    int bmax = std::min(options.max_B, (kmax + 1) / 2);
    bool all_stable = true;
    for (int n = 1; n <= bmax; n++) {
        KrylovEntry e = compute_Bn(rep.T, n, options.condition_limit);
        rep.B.push_back(e);
        rep.krylov_condition.push_back(e.condition);
        all_stable = all_stable && e.stable;
        if (all_stable) {
            rep.stable_orders = n;
        }
    }

    // joint bootstrap over groups
    size_t groups = 0;
    bool grouped = !table.traces().empty();
    for (const auto &[key, m] : table.traces()) {
        if (m.group_means.size() < 2 || (groups != 0 && m.group_means.size() != groups)) {
            grouped = false;
            break;
        }
        groups = m.group_means.size();
    }
    if (!grouped || options.n_bootstrap < 2 || kmax < 0) {
        return rep;
    }
    std::mt19937_64 rng(options.seed);
    std::uniform_int_distribution<size_t> pick(0, groups - 1);
    std::vector<std::vector<double>> t_rep(kmax + 1), f_rep(fmax + 1), b_rep(bmax);
    std::vector<size_t> idx(groups);
    for (int rep_i = 0; rep_i < options.n_bootstrap; rep_i++) {
        for (auto &i : idx) {
            i = pick(rng);
        }
        std::map<std::pair<int, int>, double> means;
        for (const auto &[key, m] : table.traces()) {
            double acc = 0.0;
            for (size_t i : idx) {
                acc += m.group_means[i];
            }
            means[key] = acc / groups;
        }
        auto trace = [&](int r, int s) { return means.at({std::max(r, s), std::min(r, s)}); };
        std::vector<double> T(kmax + 1);
        for (int k = 0; k <= kmax; k++) {
            T[k] = Tk_from(trace, k);
            t_rep[k].push_back(T[k]);
        }
        for (int n = 0; n <= fmax; n++) {
            f_rep[n].push_back(Fn_from(T, n));
        }
        for (int n = 1; n <= bmax; n++) {
            try {
                double v = Bn_from(T, n, options.condition_limit).value;
                if (std::isfinite(v)) {
                    b_rep[n - 1].push_back(v);
                }
            } catch (const Error &) {
            }
        }
    }
    auto sd = [](const std::vector<double> &xs) -> double {
        if (xs.size() < 2) {
            return NAN;
        }
        double m = 0.0;
        for (double x : xs) {
            m += x;
        }
        m /= xs.size();
        double ss = 0.0;
        for (double x : xs) {
            ss += (x - m) * (x - m);
        }
        return std::sqrt(ss / (xs.size() - 1));
    };
    for (int k = 0; k <= kmax; k++) {
        rep.T[k].error = sd(t_rep[k]);
    }
    for (int n = 0; n <= fmax; n++) {
        rep.F[n].error = sd(f_rep[n]);
    }
    for (int n = 1; n <= bmax; n++) {
        rep.B[n - 1].error = sd(b_rep[n - 1]);
    }
    return rep;
}

}  // namespace qfi
