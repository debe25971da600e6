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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dense_oracle.hpp"
#include "qfi/bounds.hpp"
#include "qfi/exact.hpp"

using namespace qfi;

namespace {

OperatorSpec spec_of(OperatorKind k) {
    OperatorSpec s;
    s.kind = k;
    return s;
}

MomentTable table_of(const dense::Mat &rho, const dense::Mat &O, int max_k) {
    return moment_table_from([&](int r, int s) { return dense::moment(rho, O, r, s); }, max_k);
}

/// Random full-rank density matrix of dimension d with a random symmetric O.
std::pair<dense::Mat, dense::Mat> random_pair(int d, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    dense::Mat A(d, d), B(d, d);
    for (int i = 0; i < d; i++) {
        for (int j = 0; j < d; j++) {
            A(i, j) = g(rng);
            B(i, j) = g(rng);
        }
    }
    dense::Mat rho = A * A.transpose();
    rho /= rho.trace();
    return {rho, B + B.transpose()};
}

double F_spectral(const dense::Mat &rho, const dense::Mat &O, int n) {
    Eigen::SelfAdjointEigenSolver<dense::Mat> es(rho);
    const auto &l = es.eigenvalues();
    dense::Mat Ot = es.eigenvectors().transpose() * O * es.eigenvectors();
    double f = 0.0;
    for (int i = 0; i < l.size(); i++) {
        for (int j = 0; j < l.size(); j++) {
            double x = l[i] + l[j];
            if (x > 1e-14) {
                f += 2 * (l[i] - l[j]) * (l[i] - l[j]) / x * (1 - std::pow(1 - x, n + 1)) * Ot(i, j) * Ot(i, j);
            }
        }
    }
    return f;
}

}  // namespace

TEST(TraceCoefficient, LowOrders) {
    EXPECT_DOUBLE_EQ(trace_coefficient(0, 0), 1);
    EXPECT_DOUBLE_EQ(trace_coefficient(0, 1), -2);
    EXPECT_DOUBLE_EQ(trace_coefficient(0, 2), 1);
    EXPECT_DOUBLE_EQ(trace_coefficient(1, 0), 1);
    EXPECT_DOUBLE_EQ(trace_coefficient(1, 1), -1);
    EXPECT_DOUBLE_EQ(trace_coefficient(1, 2), -1);
    EXPECT_DOUBLE_EQ(trace_coefficient(1, 3), 1);
    for (int k = 0; k <= 6; k++) {
        double sum = 0.0;
        for (int l = 0; l <= k + 2; l++) {
            sum += trace_coefficient(k, l);
        }
        EXPECT_DOUBLE_EQ(sum, 0.0);
    }
}

TEST(MomentTable, SymmetricAccess) {
    MomentTable t;
    t.set(1, 3, 0.25, 0.01);
    ASSERT_TRUE(t.has(3, 1));
    EXPECT_DOUBLE_EQ(t.get(3, 1)->value, 0.25);
    EXPECT_DOUBLE_EQ(t.get(1, 3)->std_error, 0.01);
    EXPECT_EQ(t.max_P(), 4);
    EXPECT_FALSE(t.has(2, 2));
    auto req = required_traces(2);
    for (auto [r, s] : req) {
        EXPECT_GE(r, s);
        EXPECT_LE(r + s, 4);
    }
}

TEST(Tk, PureStateValues) {
    const int L = 6;
    auto psi = dense::jg_vector(L, 1.0);
    auto rho = dense::projector(psi);
    for (auto O : {dense::oz(L), dense::ox(L)}) {
        auto table = table_of(rho, O, 3);
        double var = dense::variance(psi, O);
        EXPECT_NEAR(compute_Tk(table, 0).value, 2 * var, 1e-12);
        EXPECT_NEAR(compute_Tk(table, 1).value, var, 1e-12);
        EXPECT_NEAR(compute_Tk(table, 0).value, 2 * dense::moment(rho, O, 2, 0) - 2 * dense::moment(rho, O, 1, 1),
                    1e-12);
    }
}

TEST(Tk, MatchesSpectralFormOnRandomStates) {
    for (unsigned seed : {1u, 2u, 3u}) {
        auto [rho, O] = random_pair(12, seed);
        auto table = table_of(rho, O, 6);
        for (int k = 0; k <= 6; k++) {
            EXPECT_NEAR(compute_Tk(table, k).value, dense::spectral_T(rho, O, k), 1e-12 * (1 + std::abs(dense::spectral_T(rho, O, k))));
        }
    }
}

TEST(Tk, MissingTraceReported) {
    MomentTable t;
    t.set(2, 0, 1.0);
    try {
        compute_Tk(t, 0);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingTrace);
    }
}

TEST(Fn, HierarchyAndPureLimit) {
    const int L = 6;
    auto psi = dense::jg_vector(L, 3.0);
    auto table = table_of(dense::projector(psi), dense::ox(L), 5);
    std::vector<ValueWithError> T;
    for (int k = 0; k <= 5; k++) {
        T.push_back(compute_Tk(table, k));
    }
    double fq = 4 * dense::variance(psi, dense::ox(L));
    EXPECT_NEAR(compute_Fn(T, 0).value, fq, 1e-10);
    EXPECT_NEAR(compute_Fn(T, 5).value, fq, 1e-10);
    EXPECT_NEAR(compute_Bn(T, 1).value, fq, 1e-10);

    for (unsigned seed : {4u, 5u}) {
        auto [rho, O] = random_pair(10, seed);
        auto tab = table_of(rho, O, 5);
        std::vector<ValueWithError> R;
        for (int k = 0; k <= 5; k++) {
            R.push_back(compute_Tk(tab, k));
        }
        for (int n = 0; n <= 5; n++) {
            EXPECT_NEAR(compute_Fn(R, n).value, F_spectral(rho, O, n), 1e-10 * F_spectral(rho, O, n));
        }
    }
    std::vector<ValueWithError> zeros(6, ValueWithError{0.0, 0.0});
    for (int n = 0; n <= 5; n++) {
        EXPECT_DOUBLE_EQ(compute_Fn(zeros, n).value, 0.0);
    }
    EXPECT_THROW(compute_Fn(std::vector<ValueWithError>(2), 3), Error);
}

TEST(Fn, MaximallyMixedGivesZero) {
    const int L = 4;
    dense::Mat rho = dense::Mat::Identity(16, 16) / 16.0;
    auto table = table_of(rho, dense::oz(L), 5);
    BoundOptions opts;
    opts.max_B = 1;
    auto rep = assemble_bounds(table, opts);
    for (const auto &f : rep.F) {
        EXPECT_NEAR(f.value, 0.0, 1e-14);
    }
}

TEST(Bn, FirstOrderIsRatio) {
    std::vector<ValueWithError> T = {{3.0, 0.1}, {2.0, 0.1}};
    auto b = compute_Bn(T, 1);
    EXPECT_DOUBLE_EQ(b.value, 4.5);
    EXPECT_TRUE(b.stable);
    EXPECT_NEAR(b.error, std::sqrt(std::pow(2 * 3.0 / 2.0 * 0.1, 2) + std::pow(9.0 / 4.0 * 0.1, 2)), 1e-6);
}

TEST(Bn, OrderingOnDephasedStates) {
    const int L = 8;
    JastrowModel m(L, 10.0);
    auto rho = apply_dephasing(build_jg_density(m), 0.05);
    ExactOracle oracle(rho, spec_of(OperatorKind::OZ));
    auto table = moment_table_from([&](int r, int s) { return oracle.moment(r, s); }, 5);
    auto rep = assemble_bounds(table);
    double fq = oracle.qfi();
    EXPECT_GE(rep.B[0].value, rep.F[1].value - 1e-9);
    EXPECT_GE(rep.B[1].value, rep.F[3].value - 1e-9);
    EXPECT_LE(rep.B[1].value, fq + 1e-9);
    EXPECT_LE(rep.F[5].value, fq + 1e-9);
    EXPECT_NEAR(fq, 11.8854, 1e-4);
}

TEST(Bn, NearPureStateHighOrderIsUnstable) {
    const int L = 6;
    auto psi = dense::jg_vector(L, 1.0);
    auto rho = dense::depolarize(dense::projector(psi), L, 1e-9);
    auto table = table_of(rho, dense::oz(L), 5);
    std::vector<ValueWithError> T;
    for (int k = 0; k <= 5; k++) {
        T.push_back(compute_Tk(table, k));
    }
    auto b3 = compute_Bn(T, 3);
    EXPECT_FALSE(b3.stable);
    EXPECT_GT(b3.condition, kDefaultConditionLimit);
    EXPECT_TRUE(std::isfinite(b3.value));
    BoundOptions opts;
    opts.max_B = 3;
    auto rep = assemble_bounds(table, opts);
    EXPECT_LT(rep.stable_orders, 3);
}

TEST(Bn, SingularInputs) {
    std::vector<ValueWithError> T = {{1.0, 0.0}, {0.0, 0.0}};
    EXPECT_THROW(compute_Bn(T, 1), Error);
    std::vector<ValueWithError> bad = {{1.0, 0.0}, {NAN, 0.0}};
    EXPECT_THROW(compute_Bn(bad, 1), Error);
    std::vector<ValueWithError> zero = {{0.0, 0.0}, {0.0, 0.0}};
    EXPECT_DOUBLE_EQ(compute_Bn(zero, 1).value, 0.0);
    EXPECT_THROW(compute_Bn(T, 2), Error);
}

TEST(Sql, Threshold) {
    EXPECT_DOUBLE_EQ(sql_threshold(10), 10.0);
    EXPECT_DOUBLE_EQ(sql_threshold(50), 50.0);
}

TEST(AssembleBounds, ShapesFollowAvailableTraces) {
    auto [rho, O] = random_pair(8, 9);
    auto table = table_of(rho, O, 1);
    BoundOptions opts;
    opts.max_F = 5;
    opts.max_B = 2;
    auto rep = assemble_bounds(table, opts);
    EXPECT_EQ(rep.T.size(), 2u);
    EXPECT_EQ(rep.F.size(), 2u);
    EXPECT_EQ(rep.B.size(), 1u);
}

TEST(AssembleBounds, BootstrapErrorsFromGroups) {
    // Synthetic moments with group means: errors must be finite and positive.
    auto [rho, O] = random_pair(6, 12);
    MomentTable table;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (auto [r, s] : required_traces(3)) {
        double v = dense::moment(rho, O, r, s);
        MomentEstimate e;
        e.r = r;
        e.s = s;
        e.value = v;
        for (int i = 0; i < 20; i++) {
            e.group_means.push_back(v * (1 + 1e-3 * g(rng)));
        }
        e.std_error = 1e-3 * std::abs(v) / std::sqrt(20.0);
        e.n_tuples = 20;
        table.set(e);
    }
    auto rep = assemble_bounds(table);
    for (const auto &f : rep.F) {
        EXPECT_GT(f.error, 0.0);
        EXPECT_TRUE(std::isfinite(f.error));
    }
    EXPECT_GT(rep.B[0].error, 0.0);
}
