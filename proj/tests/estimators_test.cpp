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
#include <set>

#include "dense_oracle.hpp"
#include "qfi/bounds.hpp"
#include "qfi/estimators.hpp"
#include "qfi/exact.hpp"
#include "qfi/operators.hpp"
#include "qfi/sampler.hpp"

using namespace qfi;

namespace {

OperatorSpec spec_of(OperatorKind k) {
    OperatorSpec s;
    s.kind = k;
    return s;
}

SamplePool pool_for(const JastrowModel &m, std::int64_t M, std::uint64_t seed) {
    SamplerConfig c;
    c.n_samples = M;
    c.seed = seed;
    c.n_chains = 2;
    c.n_blocks = 25;
    return run_chain(m, c);
}

MomentRequest request(int r, int s, ChannelKind ch, double p, OperatorKind op, std::int64_t tuples,
                      std::uint64_t seed) {
    MomentRequest q;
    q.r = r;
    q.s = s;
    q.channel = ChannelSpec{ch, p};
    q.op = spec_of(op);
    q.n_tuples = tuples;
    q.seed = seed;
    return q;
}

double exact_for(const JastrowModel &m, ChannelKind ch, double p, OperatorKind op, int r, int s) {
    return exact_moment(apply_channel(build_jg_density(m), ChannelSpec{ch, p}), spec_of(op), r, s);
}

void expect_within(const MomentEstimate &e, double exact, double nsigma) {
    EXPECT_LE(std::abs(e.value - exact), nsigma * e.std_error + 1e-12)
        << "value " << e.value << " exact " << exact << " se " << e.std_error << " (r,s)=(" << e.r << "," << e.s
        << ")";
}

}  // namespace

TEST(DephasingWeight, Values) {
    auto a = Configuration::from_string("1100");
    auto b = Configuration::from_string("0110");
    EXPECT_DOUBLE_EQ(dephasing_weight(a, a, 0.3), 1.0);
    EXPECT_DOUBLE_EQ(dephasing_weight(a, b, 0.0), 1.0);
    EXPECT_NEAR(dephasing_weight(a, b, 0.2), 0.36, 1e-15);
    EXPECT_DOUBLE_EQ(dephasing_weight(a, b, 0.5), 0.0);
    EXPECT_DOUBLE_EQ(dephasing_weight(a, b, 1.0), 1.0);
}

TEST(DephasingDiagonal, PureLimit) {
    JastrowModel m(8, 1.0);
    auto pool = pool_for(m, 100000, 1);
    auto op = OperatorKind::OZ;
    auto mean = exact_expectation(m, spec_of(op));
    auto sq = exact_square(m, spec_of(op));
    auto e11 = moment_dephasing_diagonal(request(1, 1, ChannelKind::Dephasing, 0.0, op, 200000, 3), pool, m);
    auto e20 = moment_dephasing_diagonal(request(2, 0, ChannelKind::Dephasing, 0.0, op, 200000, 4), pool, m);
    expect_within(e11, mean * mean, 4);
    expect_within(e20, sq, 4);
}

TEST(DephasingDiagonal, FullyDephasedMatchesPopulations) {
    JastrowModel m(8, 1.0);
    auto pool = pool_for(m, 200000, 2);
    auto dist = exact_distribution(m);
    auto O = DiagonalOperator::staggered_z(8);
    double ref = 0.0;
    for (size_t i = 0; i < dist.configs.size(); i++) {
        double v = O.value_bits(dist.configs[i]);
        ref += dist.probs[i] * dist.probs[i] * v * v;
    }
    EXPECT_NEAR(ref, exact_for(m, ChannelKind::Dephasing, 0.5, OperatorKind::OZ, 1, 1), 1e-14);
    auto e = moment_dephasing_diagonal(request(1, 1, ChannelKind::Dephasing, 0.5, OperatorKind::OZ, 1000000, 5), pool, m);
    expect_within(e, ref, 3);
}

TEST(DephasingDiagonal, GhzRegimeAgainstOracle) {
    JastrowModel m(8, 10.0);
    auto pool = pool_for(m, 200000, 3);
    auto e = moment_dephasing_diagonal(request(1, 1, ChannelKind::Dephasing, 0.05, OperatorKind::OZ, 1000000, 6), pool, m);
    expect_within(e, exact_for(m, ChannelKind::Dephasing, 0.05, OperatorKind::OZ, 1, 1), 3);
}

TEST(DephasingOx, Examples) {
    JastrowModel m4(4, 0.0);
    auto pool4 = pool_for(m4, 100000, 4);
    auto e = moment_dephasing_ox(1, pool4, m4, 0.2, 100000, 7);
    expect_within(e, exact_for(m4, ChannelKind::Dephasing, 0.2, OperatorKind::OX, 1, 0), 4);
    auto half = moment_dephasing_ox(1, pool4, m4, 0.5, 10000, 8);
    EXPECT_NEAR(half.value, 1.0, 1e-12);

    JastrowModel m8(8, 1.0);
    auto pool8 = pool_for(m8, 200000, 5);
    auto e2 = moment_dephasing_ox(2, pool8, m8, 0.05, 1000000, 9);
    expect_within(e2, exact_for(m8, ChannelKind::Dephasing, 0.05, OperatorKind::OX, 2, 0), 3);
}

TEST(DampingWeights, Normalization) {
    auto w = damping_weights(4, 3, 0.2);
    double sum = 0.0, Z = 0.0;
    for (int k = 0; k <= 4; k++) {
        sum += w.w[k];
        Z += std::pow(binomial(4, k), 3) * std::pow(0.2, 3 * k) * std::pow(0.8, 3 * (4 - k));
    }
    EXPECT_NEAR(sum, 1.0, 1e-14);
    EXPECT_NEAR(w.Z, Z, 1e-14);
    auto w0 = damping_weights(4, 2, 0.0);
    EXPECT_DOUBLE_EQ(w0.w[0], 1.0);
}

TEST(DampingProfiles, OffDiagonalAlternation) {
    auto prof = damping_profiles(2, 1, 1, true, 0.3);
    std::set<std::vector<int>> got;
    for (const auto &p : prof) {
        got.insert(p.k);
    }
    std::set<std::vector<int>> want = {{0, 1}, {1, 0}, {1, 2}, {2, 1}};
    EXPECT_EQ(got, want);
    for (const auto &p : damping_profiles(3, 2, 1, false, 0.3)) {
        EXPECT_EQ(p.k[0], p.k[1]);
        EXPECT_EQ(p.k[1], p.k[2]);
    }
}

TEST(DampingDiagonal, PureLimitAndOracle) {
    JastrowModel m(6, 1.0);
    auto pool = pool_for(m, 200000, 6);
    auto pure = moment_damping_diagonal(request(1, 1, ChannelKind::AmplitudeDamping, 0.0, OperatorKind::OZ, 200000, 1),
                                        pool, m);
    double mean = exact_expectation(m, spec_of(OperatorKind::OZ));
    expect_within(pure, mean * mean, 4);
    auto e = moment_damping_diagonal(request(1, 1, ChannelKind::AmplitudeDamping, 0.1, OperatorKind::OZ, 1000000, 2),
                                     pool, m);
    expect_within(e, exact_for(m, ChannelKind::AmplitudeDamping, 0.1, OperatorKind::OZ, 1, 1), 3);
}

TEST(DampingOx, PureLimitAndOracle) {
    JastrowModel m(4, 1.0);
    auto pool = pool_for(m, 100000, 7);
    auto zero = moment_damping_ox(request(1, 1, ChannelKind::AmplitudeDamping, 0.0, OperatorKind::OX, 100000, 1), pool, m);
    EXPECT_NEAR(zero.value, 0.0, 1e-12);
    auto sq = moment_damping_ox(request(1, 0, ChannelKind::AmplitudeDamping, 0.0, OperatorKind::OX, 100000, 2), pool, m);
    expect_within(sq, exact_square(m, spec_of(OperatorKind::OX)), 4);
    auto e = moment_damping_ox(request(1, 1, ChannelKind::AmplitudeDamping, 0.1, OperatorKind::OX, 1000000, 3), pool, m);
    expect_within(e, exact_for(m, ChannelKind::AmplitudeDamping, 0.1, OperatorKind::OX, 1, 1), 3);
}

TEST(DampingDiagonal, GhzRegimeB1) {
    JastrowModel m(8, 10.0);
    auto pool = pool_for(m, 1000000, 8);
    auto table = estimate_moment_table(ChannelSpec{ChannelKind::AmplitudeDamping, 0.05}, spec_of(OperatorKind::OZ),
                                       pool, m, 1, 1000000, 11);
    BoundOptions opts;
    opts.max_F = 1;
    opts.max_B = 1;
    auto rep = assemble_bounds(table, opts);
    ExactOracle oracle(apply_damping(build_jg_density(m), 0.05), spec_of(OperatorKind::OZ));
    auto exact_table = moment_table_from([&](int r, int s) { return oracle.moment(r, s); }, 1);
    double exact_b1 = assemble_bounds(exact_table, opts).B[0].value;
    EXPECT_NEAR(rep.B[0].value, exact_b1, 3 * rep.B[0].error);
    EXPECT_NEAR(rep.B[0].value, 64 * std::pow(0.95, 4), 3 * rep.B[0].error);
}

TEST(Depolarizing, ClosedFormLimits) {
    const int L = 6;
    double tr = 7.0;
    EXPECT_DOUBLE_EQ(moment_depolarizing(1, 1, 0.5, 2.0, tr, L, 0.0), 0.25);
    EXPECT_DOUBLE_EQ(moment_depolarizing(2, 0, 0.5, 2.0, tr, L, 0.0), 2.0);
    double t = 1.0 / 64;
    EXPECT_NEAR(moment_depolarizing(2, 1, 0.5, 2.0, tr, L, 1.0), std::pow(t, 3) * tr, 1e-18);
}

TEST(Depolarizing, ClosedFormMatchesOracle) {
    for (int L : {4, 6, 8}) {
        JastrowModel m(L, 1.0);
        for (auto op : {OperatorKind::OZ, OperatorKind::OX, OperatorKind::OStar}) {
            double mean = exact_expectation(m, spec_of(op));
            double sq = exact_square(m, spec_of(op));
            double tr = operator_trace_square(spec_of(op), L);
            for (double p : {0.05, 0.5, 1.0}) {
                auto rho = apply_depolarizing(build_jg_density(m), p);
                ExactOracle o(rho, spec_of(op));
                for (int r = 0; r <= 4; r++) {
                    for (int s = 0; s <= r && r + s <= 5; s++) {
                        if (r + s == 0) {
                            continue;
                        }
                        EXPECT_NEAR(moment_depolarizing(r, s, mean, sq, tr, L, p), o.moment(r, s), 1e-13);
                    }
                }
            }
        }
    }
}

TEST(Depolarizing, FirstOrderBounds) {
    const int L = 8;
    JastrowModel m(L, 1.0);
    auto op = spec_of(OperatorKind::OZ);
    double mean = exact_expectation(m, op), sq = exact_square(m, op), tr = operator_trace_square(op, L);
    for (double p : {0.05, 0.5}) {
        auto table = moment_table_from([&](int r, int s) { return moment_depolarizing(r, s, mean, sq, tr, L, p); }, 1);
        BoundOptions opts;
        opts.max_F = 1;
        opts.max_B = 1;
        auto rep = assemble_bounds(table, opts);
        double fq = spectral_qfi(apply_depolarizing(build_jg_density(m), p), op);
        EXPECT_NEAR(rep.B[0].value, fq, 1e-8);
        double x = p * (1 - std::pow(2.0, 1 - L));
        EXPECT_NEAR(rep.F[1].value, fq * (1 - x * x), 1e-8);
    }
}

TEST(OperatorTrace, MatchesDense) {
    for (int L : {4, 6}) {
        EXPECT_NEAR(operator_trace_square(spec_of(OperatorKind::OZ), L), (dense::oz(L) * dense::oz(L)).trace(), 1e-10);
        EXPECT_NEAR(operator_trace_square(spec_of(OperatorKind::OX), L), (dense::ox(L) * dense::ox(L)).trace(), 1e-10);
        EXPECT_NEAR(operator_trace_square(spec_of(OperatorKind::OStar), L),
                    (dense::ostar(L) * dense::ostar(L)).trace(), 1e-10);
    }
}

TEST(Correlators, UniformEnsemble) {
    JastrowModel m(4, 0.0);
    auto pool = pool_for(m, 100000, 9);
    auto zz = correlator_zz(pool, m, 2);
    auto xx = correlator_xx(pool, m, 2);
    for (int r = 1; r <= 2; r++) {
        EXPECT_NEAR(zz[r - 1].value, -1.0 / 3.0, 4 * zz[r - 1].error + 1e-12);
    }
    EXPECT_NEAR(xx[1].value, 2.0 / 3.0, 4 * xx[1].error + 1e-12);
    EXPECT_NEAR(xx[0].value, exact_correlator_xx(m, 1), 4 * xx[0].error + 1e-12);
}

TEST(Correlators, AgainstExactAtL8) {
    for (double alpha : {1.0, 3.0}) {
        JastrowModel m(8, alpha);
        auto pool = pool_for(m, 200000, 10);
        auto zz = correlator_zz(pool, m, 4);
        auto xx = correlator_xx(pool, m, 4);
        for (int r = 1; r <= 4; r++) {
            EXPECT_NEAR(zz[r - 1].value, exact_correlator_zz(m, r), 4 * zz[r - 1].error + 1e-12) << r;
            EXPECT_NEAR(xx[r - 1].value, exact_correlator_xx(m, r), 4 * xx[r - 1].error + 1e-12) << r;
        }
    }
}

TEST(VariancePure, Regimes) {
    JastrowModel ghz(8, 10.0);
    auto pool = pool_for(ghz, 100000, 11);
    auto v = variance_pure(pool, ghz, spec_of(OperatorKind::OZ));
    EXPECT_NEAR(v.value, exact_variance(ghz, spec_of(OperatorKind::OZ)), 4 * v.error);
    EXPECT_NEAR(v.value, 16.0, 0.01 * 16);

    JastrowModel flat(8, 0.0);
    auto pf = pool_for(flat, 100000, 12);
    for (auto op : {OperatorKind::OZ, OperatorKind::OX, OperatorKind::OStar}) {
        auto vf = variance_pure(pf, flat, spec_of(op));
        EXPECT_NEAR(vf.value, exact_variance(flat, spec_of(op)), 4 * vf.error + 1e-9) << to_string(op);
    }

    JastrowModel clustered(12, -5.0);
    auto pc = pool_for(clustered, 100000, 13);
    auto vs = variance_pure(pc, clustered, spec_of(OperatorKind::OStar));
    EXPECT_NEAR(vs.value / 144.0, 1.0 / 12.0, 0.2 / 12.0);
}

TEST(PowerLaw, Synthetic) {
    std::vector<int> r;
    std::vector<double> v, stag;
    for (int i = 1; i <= 20; i++) {
        r.push_back(i);
        v.push_back(3.0 * std::pow(i, -1.5));
        stag.push_back((i % 2 ? -1.0 : 1.0) * 0.5 * std::pow(i, -0.5));
    }
    auto f = fit_power_law(r, v, false);
    EXPECT_NEAR(f.exponent, 1.5, 1e-9);
    EXPECT_NEAR(f.prefactor, 3.0, 1e-9);
    auto g = fit_power_law(r, stag, true);
    EXPECT_NEAR(g.exponent, 0.5, 1e-9);
    FitOptions odd;
    odd.odd_only = true;
    EXPECT_NEAR(fit_power_law(r, stag, true, odd).exponent, 0.5, 1e-9);
}

TEST(PowerLaw, Errors) {
    std::vector<int> r = {1, 2, 3, 4, 5, 6};
    std::vector<double> zeros(6, 0.0);
    try {
        fit_power_law(r, zeros, true);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::NonPositiveValues);
    }
    std::vector<double> few = {1.0, 0.5, 0.3};
    EXPECT_THROW(fit_power_law({1, 2, 3}, few, false), Error);
}

// Broad sweep: every channel/operator/(r,s) at small L against the exact moments. At 3 sigma a
// few percent of comparisons may fail by chance; none may reach 5 sigma.
TEST(MomentSweep, AgreesWithExactMoments) {
    int total = 0, over3 = 0;
    double worst = 0.0;
    std::uint64_t seed = 500;
    for (int L : {4, 6}) {
        for (double alpha : {-2.0, 1.0, 3.0}) {
            JastrowModel m(L, alpha);
            auto pool = pool_for(m, 100000, seed++);
            auto state = build_jg_density(m);
            for (auto ch : {ChannelKind::Dephasing, ChannelKind::AmplitudeDamping, ChannelKind::Depolarizing}) {
                auto rho = apply_channel(state, ChannelSpec{ch, 0.2});
                for (auto op : {OperatorKind::OZ, OperatorKind::OX, OperatorKind::OStar}) {
                    ExactOracle oracle(rho, spec_of(op));
                    for (int r = 1; r <= 3; r++) {
                        for (int s = 0; s <= r && r + s <= 3; s++) {
                            auto e = estimate_moment(request(r, s, ch, 0.2, op, 200000, seed++), pool, m);
                            double exact = oracle.moment(r, s);
                            double diff = std::abs(e.value - exact);
                            if (e.std_error == 0.0) {
                                EXPECT_NEAR(e.value, exact, 1e-12);
                                continue;
                            }
                            double z = diff / e.std_error;
                            total++;
                            over3 += z > 3;
                            worst = std::max(worst, z);
                            EXPECT_LT(z, 5.0) << "L=" << L << " alpha=" << alpha << " " << to_string(ch) << " "
                                              << to_string(op) << " (" << r << "," << s << ")";
                        }
                    }
                }
            }
        }
    }
    EXPECT_GT(total, 100);
    EXPECT_LE(over3, std::max(2, total / 50)) << "worst z " << worst;
}
