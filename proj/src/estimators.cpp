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

#include "qfi/estimators.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <random>

#include "qfi/operators.hpp"
#include "qfi/parallel.hpp"

namespace qfi {

namespace {

inline double unit(std::mt19937_64 &rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::uint64_t bounded(std::mt19937_64 &rng, std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

void check_strength(double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw Error(ErrorCode::BadStrength, "p must lie in [0, 1]");
    }
}

std::vector<double> power_table(double base, int n) {
    std::vector<double> t(n + 1);
    t[0] = 1.0;
    for (int i = 1; i <= n; i++) {
        t[i] = t[i - 1] * base;
    }
    return t;
}

/// Runs one estimator over every pool group. make_kernel() is called once per
/// group and returns a callable (const uint64_t *tuple, rng) -> double.
template <typename MakeKernel>
MomentEstimate run_grouped(const SamplePool &pool, int tuple_size, std::int64_t n_tuples, std::uint64_t seed,
                           int threads, int r, int s, MakeKernel &&make_kernel) {
    if (pool.empty()) {
        throw Error(ErrorCode::EmptyPool, "estimators need a nonempty pool");
    }
    if (tuple_size > 64) {
        throw Error(ErrorCode::BadConfig, "tuples are limited to 64 configurations");
    }
    int G = pool.num_groups();
    if (n_tuples < G) {
        throw Error(ErrorCode::BadConfig, "n_tuples must be at least the number of pool blocks");
    }
    std::vector<double> means(G, 0.0);
    parallel_for(G, resolve_threads(threads), [&](std::int64_t g) {
        auto [b, e] = pool.group_range(static_cast<int>(g));
        std::int64_t count = n_tuples / G + (g < n_tuples % G ? 1 : 0);
        TupleStream stream(pool, tuple_size, count, stream_seed(seed, 2 * g), b, e);
        std::mt19937_64 rng(stream_seed(seed, 2 * g + 1));
        auto kernel = make_kernel();
        std::uint64_t tuple[64];
        double acc = 0.0;
        while (stream.next(tuple)) {
            acc += kernel(tuple, rng);
        }
        means[g] = acc / static_cast<double>(count);
    });
    MomentEstimate est;
    est.r = r;
    est.s = s;
    ValueWithError ve = mean_and_error(means);
    est.value = ve.value;
    est.std_error = ve.error;
    est.n_tuples = n_tuples;
    est.group_means = std::move(means);
    return est;
}

MomentEstimate zero_estimate(const SamplePool &pool, int r, int s, std::int64_t n_tuples) {
    MomentEstimate est;
    est.r = r;
    est.s = s;
    est.n_tuples = std::max<std::int64_t>(n_tuples, 1);
    est.group_means.assign(pool.num_groups(), 0.0);
    return est;
}

enum class Link { Plain, Diag, DiagSquared, Flip, DoubleFlip };

/// Link kinds around the ring for Tr(rho^r O rho^s O): operators sit at
/// link 0 and link r (mod P).
std::vector<Link> ring_links(int r, int s, bool off_diagonal) {
    int P = r + s;
    std::vector<Link> links(P, Link::Plain);
    if (s == 0 || r == 0) {
        links[0] = off_diagonal ? Link::DoubleFlip : Link::DiagSquared;
    } else {
        links[0] = off_diagonal ? Link::Flip : Link::Diag;
        links[r] = off_diagonal ? Link::Flip : Link::Diag;
    }
    return links;
}

bool step_allowed(Link link, int dk) {
    switch (link) {
        case Link::Plain:
        case Link::Diag:
        case Link::DiagSquared:
            return dk == 0;
        case Link::Flip:
            return dk == 1 || dk == -1;
        case Link::DoubleFlip:
            return dk == 0 || dk == 2 || dk == -2;
    }
    return false;
}

std::vector<DampingProfile> enumerate_profiles(int N, const std::vector<Link> &links, double p) {
    int P = static_cast<int>(links.size());
    std::vector<double> single(N + 1);
    for (int k = 0; k <= N; k++) {
        single[k] = binomial(N, k) * std::pow(p, k) * std::pow(1.0 - p, N - k);
    }
    std::vector<DampingProfile> out;
    std::vector<int> ks(P);
    auto rec = [&](auto &&self, int a, double w) -> void {
        if (a == P) {
            if (step_allowed(links[P - 1], ks[0] - ks[P - 1])) {
                out.push_back(DampingProfile{ks, w});
            }
            return;
        }
        for (int k = 0; k <= N; k++) {
            if (a > 0 && !step_allowed(links[a - 1], k - ks[a - 1])) {
                continue;
            }
            ks[a] = k;
            self(self, a + 1, w * single[k]);
        }
    };
    rec(rec, 0, 1.0);
    return out;
}

/// Ring estimator for amplitude damping.
MomentEstimate damping_ring(const MomentRequest &req, const SamplePool &pool, const JastrowModel &model,
                            bool off_diagonal) {
    check_strength(req.channel.p);
    int r = req.r;
    int s = req.s;
    if (r < 0 || s < 0 || r + s < 1) {
        throw Error(ErrorCode::BadConfig, "moment needs r + s >= 1");
    }
    if (r == 0) {
        std::swap(r, s);
    }
    int P = r + s;
    int L = model.num_sites();
    int N = model.num_particles();
    std::vector<Link> links = ring_links(r, s, off_diagonal);
    std::vector<DampingProfile> all = enumerate_profiles(N, links, req.channel.p);
    if (all.empty()) {
        throw Error(ErrorCode::ProfileSetEmpty, "no particle-loss profile is compatible with this moment");
    }
    std::vector<DampingProfile> profiles;
    std::vector<double> cumulative;
    double Z = 0.0;
    for (auto &pr : all) {
        if (pr.weight > 0.0) {
            Z += pr.weight;
            cumulative.push_back(Z);
            profiles.push_back(std::move(pr));
        }
    }
    if (profiles.empty()) {
        MomentEstimate est = zero_estimate(pool, req.r, req.s, req.n_tuples);
        return est;
    }
    std::optional<DiagonalOperator> dop;
    if (!off_diagonal) {
        dop = diagonal_operator(req.op, L);
    }

    auto make_kernel = [&]() {
        return [&, occ = std::vector<int>(L), q = std::vector<std::uint64_t>(P),
                logc = std::vector<double>(P), sgn = std::vector<int>(P)](const std::uint64_t *t,
                                                                          std::mt19937_64 &rng) mutable {
            double u = unit(rng) * Z;
            size_t pi = std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin();
            if (pi >= profiles.size()) {
                pi = profiles.size() - 1;
            }
            const std::vector<int> &ks = profiles[pi].k;
            for (int a = 0; a < P; a++) {
                int m = 0;
                for (std::uint64_t b = t[a]; b; b &= b - 1) {
                    occ[m++] = std::countr_zero(b);
                }
                std::uint64_t mask = 0;
                for (int i = 0; i < ks[a]; i++) {
                    int j = i + static_cast<int>(bounded(rng, m - i));
                    std::swap(occ[i], occ[j]);
                    mask |= std::uint64_t{1} << occ[i];
                }
                q[a] = mask;
                logc[a] = model.log_mag_bits(t[a]);
                sgn[a] = JastrowModel::sign_bits(t[a]);
            }
            double prod = Z;
            for (int a = 0; a < P && prod != 0.0; a++) {
                std::uint64_t m = t[a] & ~q[a];
                std::uint64_t qn = q[(a + 1) % P];
                auto ratio = [&](std::uint64_t mm) -> double {
                    if ((mm & qn) != 0) {
                        return 0.0;
                    }
                    std::uint64_t target = mm | qn;
                    if (std::popcount(target) != N) {
                        return 0.0;
                    }
                    int sign = JastrowModel::sign_bits(target) * sgn[a];
                    return sign * JastrowModel::exp_clamped(model.log_mag_bits(target) - logc[a]);
                };
                double v = 0.0;
                switch (links[a]) {
                    case Link::Plain:
                        v = ratio(m);
                        break;
                    case Link::Diag:
                        v = ratio(m);
                        if (v != 0.0) {
                            v *= dop->value_bits(m);
                        }
                        break;
                    case Link::DiagSquared:
                        v = ratio(m);
                        if (v != 0.0) {
                            double o = dop->value_bits(m);
                            v *= o * o;
                        }
                        break;
                    case Link::Flip:
                        for (int j = 0; j < L; j++) {
                            double rr = ratio(m ^ (std::uint64_t{1} << j));
                            if (rr != 0.0) {
                                v += 0.5 * stagger(j + 1) * rr;
                            }
                        }
                        break;
                    case Link::DoubleFlip:
                        v = 0.25 * L * ratio(m);
                        for (int j = 0; j < L; j++) {
                            for (int l = j + 1; l < L; l++) {
                                double rr = ratio(m ^ ((std::uint64_t{1} << j) | (std::uint64_t{1} << l)));
                                if (rr != 0.0) {
                                    v += (((j + l) & 1) ? -0.5 : 0.5) * rr;
                                }
                            }
                        }
                        break;
                }
                prod *= v;
            }
            return prod;
        };
    };
    return run_grouped(pool, P, req.n_tuples, req.seed, req.threads, req.r, req.s, make_kernel);
}

struct DepolarizingCoefficients {
    double second;  // multiplies <O^2>
    double mean_sq; // multiplies <O>^2
    double trace;   // multiplies Tr(O^2)
};

DepolarizingCoefficients depolarizing_coefficients(int r, int s, int L, double p) {
    double q = 1.0 - p;
    double t = std::ldexp(p, -L);
    auto u = [&](int n) { return std::pow(q + t, n) - std::pow(t, n); };
    double tr = std::pow(t, r), ts = std::pow(t, s);
    return {u(r) * ts + u(s) * tr, u(r) * u(s), tr * ts};
}

}  // namespace

double dephasing_weight(const Configuration &n, const Configuration &n_prime, double p) {
    check_strength(p);
    return std::pow(1.0 - 2.0 * p, hamming_distance(n, n_prime));
}

MomentEstimate moment_dephasing_diagonal(const MomentRequest &req, const SamplePool &pool,
                                         const JastrowModel &model) {
    check_strength(req.channel.p);
    if (!req.op.is_diagonal()) {
        throw Error(ErrorCode::NotDiagonal, "this estimator needs a diagonal operator");
    }
    if (req.r < 1 || req.s < 0) {
        throw Error(ErrorCode::BadConfig, "dephasing estimator needs r >= 1 and s >= 0");
    }
    int L = model.num_sites();
    int P = req.r + req.s;
    int second = req.r % P;
    DiagonalOperator dop = diagonal_operator(req.op, L);
    std::vector<double> qpow = power_table(1.0 - 2.0 * req.channel.p, L);
    auto make_kernel = [&]() {
        return [&](const std::uint64_t *t, std::mt19937_64 &) {
            double f = 1.0;
            for (int a = 0; a + 1 < P; a++) {
                f *= qpow[std::popcount(t[a] ^ t[a + 1])];
            }
            f *= qpow[std::popcount(t[P - 1] ^ t[0])];
            if (f == 0.0) {
                return 0.0;
            }
            return f * dop.value_bits(t[0]) * dop.value_bits(t[second]);
        };
    };
    return run_grouped(pool, P, req.n_tuples, req.seed, req.threads, req.r, req.s, make_kernel);
}

MomentEstimate moment_dephasing_ox(int m, const SamplePool &pool, const JastrowModel &model, double p,
                                   std::int64_t n_tuples, std::uint64_t seed, int threads) {
    check_strength(p);
    if (m < 1) {
        throw Error(ErrorCode::BadConfig, "m must be positive");
    }
    int L = model.num_sites();
    std::vector<double> qpow = power_table(1.0 - 2.0 * p, L);
    auto make_kernel = [&]() {
        return [&, field = OccupationField(model, pool.bits(0))](const std::uint64_t *t,
                                                                 std::mt19937_64 &) mutable {
            double f = 1.0;
            for (int a = 0; a + 1 < m; a++) {
                f *= qpow[std::popcount(t[a] ^ t[a + 1])];
            }
            if (f == 0.0) {
                return 0.0;
            }
            std::uint64_t n1 = t[0];
            std::uint64_t last = t[m - 1];
            double sum = 0.25 * L * qpow[std::popcount(last ^ n1)];
            bool have_field = false;
            for (std::uint64_t ob = n1; ob; ob &= ob - 1) {
                int i = std::countr_zero(ob);
                for (std::uint64_t eb = ~n1 & site_mask(L); eb; eb &= eb - 1) {
                    int l = std::countr_zero(eb);
                    std::uint64_t target = n1 ^ ((std::uint64_t{1} << i) | (std::uint64_t{1} << l));
                    double fw = qpow[std::popcount(last ^ target)];
                    if (fw == 0.0) {
                        continue;
                    }
                    if (!have_field) {
                        field.reset(n1);
                        have_field = true;
                    }
                    double w = ((i + l) & 1) ? -0.5 : 0.5;
                    sum += fw * w * field.move_ratio(i, l);
                }
            }
            return f * sum;
        };
    };
    return run_grouped(pool, m, n_tuples, seed, threads, m, 0, make_kernel);
}

DampingWeights damping_weights(int N, int P, double p) {
    check_strength(p);
    DampingWeights dw;
    dw.w.resize(N + 1);
    for (int k = 0; k <= N; k++) {
        double single = binomial(N, k) * std::pow(p, k) * std::pow(1.0 - p, N - k);
        dw.w[k] = std::pow(single, P);
        dw.Z += dw.w[k];
    }
    for (double &w : dw.w) {
        w /= dw.Z;
    }
    return dw;
}

std::vector<DampingProfile> damping_profiles(int N, int r, int s, bool off_diagonal, double p) {
    check_strength(p);
    if (r < 0 || s < 0 || r + s < 1) {
        throw Error(ErrorCode::BadConfig, "moment needs r + s >= 1");
    }
    if (r == 0) {
        std::swap(r, s);
    }
    auto out = enumerate_profiles(N, ring_links(r, s, off_diagonal), p);
    if (out.empty()) {
        throw Error(ErrorCode::ProfileSetEmpty, "no particle-loss profile is compatible with this moment");
    }
    return out;
}

MomentEstimate moment_damping_diagonal(const MomentRequest &req, const SamplePool &pool,
                                       const JastrowModel &model) {
    if (!req.op.is_diagonal()) {
        throw Error(ErrorCode::NotDiagonal, "this estimator needs a diagonal operator");
    }
    return damping_ring(req, pool, model, false);
}

MomentEstimate moment_damping_ox(const MomentRequest &req, const SamplePool &pool, const JastrowModel &model) {
    if (req.op.kind != OperatorKind::OX) {
        throw Error(ErrorCode::BadConfig, "this estimator is specific to O_X");
    }
    return damping_ring(req, pool, model, true);
}

double operator_trace_square(const OperatorSpec &op, int L) {
    double per_state = op.is_diagonal() ? diagonal_operator(op, L).mean_square_trace() : 0.25 * L;
    return std::ldexp(per_state, L);
}

double moment_depolarizing(int r, int s, double pure_mean, double pure_second, double trace_O2, int L,
                           double p) {
    check_strength(p);
    DepolarizingCoefficients c = depolarizing_coefficients(r, s, L, p);
    return c.second * pure_second + c.mean_sq * pure_mean * pure_mean + c.trace * trace_O2;
}

namespace {

struct PureParts {
    MomentEstimate second;
    MomentEstimate mean_sq;
};

PureParts pure_parts(const OperatorSpec &op, const SamplePool &pool, const JastrowModel &model,
                     std::int64_t n_tuples, std::uint64_t seed, int threads) {
    PureParts parts;
    if (op.is_diagonal()) {
        MomentRequest req;
        req.op = op;
        req.channel = ChannelSpec{ChannelKind::Dephasing, 0.0};
        req.n_tuples = n_tuples;
        req.threads = threads;
        req.r = 1;
        req.s = 0;
        req.seed = stream_seed(seed, 11);
        parts.second = moment_dephasing_diagonal(req, pool, model);
        req.s = 1;
        req.seed = stream_seed(seed, 12);
        parts.mean_sq = moment_dephasing_diagonal(req, pool, model);
    } else {
        parts.second = moment_dephasing_ox(1, pool, model, 0.0, n_tuples, stream_seed(seed, 11), threads);
        parts.mean_sq = zero_estimate(pool, 1, 1, n_tuples);
    }
    return parts;
}

MomentEstimate depolarizing_from_parts(const PureParts &parts, int r, int s, const OperatorSpec &op, int L,
                                       double p) {
    DepolarizingCoefficients c = depolarizing_coefficients(r, s, L, p);
    double tr2 = c.trace == 0.0 ? 0.0 : c.trace * operator_trace_square(op, L);
    MomentEstimate est;
    est.r = r;
    est.s = s;
    est.n_tuples = parts.second.n_tuples;
    size_t G = parts.second.group_means.size();
    est.group_means.resize(G);
    for (size_t g = 0; g < G; g++) {
        est.group_means[g] = c.second * parts.second.group_means[g] + c.mean_sq * parts.mean_sq.group_means[g] + tr2;
    }
    ValueWithError ve = mean_and_error(est.group_means);
    est.value = ve.value;
    est.std_error = ve.error;
    return est;
}

}  // namespace

MomentEstimate moment_depolarizing_mc(const MomentRequest &req, const SamplePool &pool,
                                      const JastrowModel &model) {
    check_strength(req.channel.p);
    PureParts parts = pure_parts(req.op, pool, model, req.n_tuples, req.seed, req.threads);
    return depolarizing_from_parts(parts, req.r, req.s, req.op, model.num_sites(), req.channel.p);
}

MomentEstimate estimate_moment(const MomentRequest &req, const SamplePool &pool, const JastrowModel &model) {
    switch (req.channel.kind) {
        case ChannelKind::Dephasing:
            if (req.op.is_diagonal()) {
                MomentRequest q = req;
                if (q.r == 0) {
                    std::swap(q.r, q.s);
                }
                MomentEstimate e = moment_dephasing_diagonal(q, pool, model);
                e.r = req.r;
                e.s = req.s;
                return e;
            }
            if (req.r > 0 && req.s > 0) {
                return zero_estimate(pool, req.r, req.s, req.n_tuples);
            } else {
                MomentEstimate e = moment_dephasing_ox(req.r + req.s, pool, model, req.channel.p, req.n_tuples,
                                                       req.seed, req.threads);
                e.r = req.r;
                e.s = req.s;
                return e;
            }
        case ChannelKind::AmplitudeDamping:
            return req.op.is_diagonal() ? moment_damping_diagonal(req, pool, model)
                                        : moment_damping_ox(req, pool, model);
        case ChannelKind::Depolarizing:
            return moment_depolarizing_mc(req, pool, model);
    }
    throw Error(ErrorCode::BadConfig, "unknown channel");
}

MomentTable estimate_moment_table(const ChannelSpec &channel, const OperatorSpec &op, const SamplePool &pool,
                                  const JastrowModel &model, int max_k, std::int64_t n_tuples,
                                  std::uint64_t seed, int threads) {
    MomentTable table;
    std::optional<PureParts> parts;
    if (channel.kind == ChannelKind::Depolarizing) {
        check_strength(channel.p);
        parts = pure_parts(op, pool, model, n_tuples, seed, threads);
    }
    for (auto [r, s] : required_traces(max_k)) {
        if (parts) {
            table.set(depolarizing_from_parts(*parts, r, s, op, model.num_sites(), channel.p));
            continue;
        }
        MomentRequest req;
        req.r = r;
        req.s = s;
        req.channel = channel;
        req.op = op;
        req.n_tuples = n_tuples;
        req.seed = stream_seed(seed, 1000 + 64 * r + s);
        req.threads = threads;
        table.set(estimate_moment(req, pool, model));
    }
    return table;
}

std::vector<ValueWithError> correlator_zz(const SamplePool &pool, const JastrowModel &model, int rmax,
                                          int threads) {
    int L = model.num_sites();
    if (rmax < 1 || rmax >= L) {
        throw Error(ErrorCode::BadConfig, "rmax must lie in [1, L)");
    }
    if (pool.empty()) {
        throw Error(ErrorCode::EmptyPool, "correlators need a nonempty pool");
    }
    int G = pool.num_groups();
    std::uint64_t mask = site_mask(L);
    std::vector<std::vector<double>> means(rmax, std::vector<double>(G));
    parallel_for(G, resolve_threads(threads), [&](std::int64_t g) {
        auto [b, e] = pool.group_range(static_cast<int>(g));
        std::vector<double> acc(rmax, 0.0);
        for (std::int64_t i = b; i < e; i++) {
            std::uint64_t x = pool.bits(i);
            for (int r = 1; r <= rmax; r++) {
                std::uint64_t rot = ((x >> r) | (x << (L - r))) & mask;
                acc[r - 1] += L - 2 * std::popcount(x ^ rot);
            }
        }
        for (int r = 0; r < rmax; r++) {
            means[r][g] = acc[r] / (static_cast<double>(L) * (e - b));
        }
    });
    std::vector<ValueWithError> out;
    for (int r = 0; r < rmax; r++) {
        out.push_back(mean_and_error(means[r]));
    }
    return out;
}

std::vector<ValueWithError> correlator_xx(const SamplePool &pool, const JastrowModel &model, int rmax,
                                          int threads) {
    int L = model.num_sites();
    if (rmax < 1 || rmax >= L) {
        throw Error(ErrorCode::BadConfig, "rmax must lie in [1, L)");
    }
    if (pool.empty()) {
        throw Error(ErrorCode::EmptyPool, "correlators need a nonempty pool");
    }
    int G = pool.num_groups();
    std::vector<std::vector<double>> means(rmax, std::vector<double>(G));
    parallel_for(G, resolve_threads(threads), [&](std::int64_t g) {
        auto [b, e] = pool.group_range(static_cast<int>(g));
        std::vector<double> acc(rmax, 0.0);
        OccupationField field(model, pool.bits(b));
        for (std::int64_t i = b; i < e; i++) {
            std::uint64_t x = pool.bits(i);
            field.reset(x);
            for (int r = 1; r <= rmax; r++) {
                double sum = 0.0;
                for (int j = 0; j < L; j++) {
                    int l = (j + r) % L;
                    int nj = (x >> j) & 1;
                    int nl = (x >> l) & 1;
                    if (nj == nl) {
                        continue;
                    }
                    sum += nj ? field.move_ratio(j, l) : field.move_ratio(l, j);
                }
                acc[r - 1] += sum / L;
            }
        }
        for (int r = 0; r < rmax; r++) {
            means[r][g] = acc[r] / static_cast<double>(e - b);
        }
    });
    std::vector<ValueWithError> out;
    for (int r = 0; r < rmax; r++) {
        out.push_back(mean_and_error(means[r]));
    }
    return out;
}

ValueWithError variance_pure(const SamplePool &pool, const JastrowModel &model, const OperatorSpec &op,
                             int threads) {
    if (pool.empty()) {
        throw Error(ErrorCode::EmptyPool, "variance needs a nonempty pool");
    }
    int L = model.num_sites();
    int G = pool.num_groups();
    std::vector<double> means(G);
    if (op.is_diagonal()) {
        DiagonalOperator dop = diagonal_operator(op, L);
        parallel_for(G, resolve_threads(threads), [&](std::int64_t g) {
            auto [b, e] = pool.group_range(static_cast<int>(g));
            double s1 = 0.0, s2 = 0.0;
            for (std::int64_t i = b; i < e; i++) {
                double v = dop.value_bits(pool.bits(i));
                s1 += v;
                s2 += v * v;
            }
            double n = static_cast<double>(e - b);
            means[g] = n > 1 ? (s2 - s1 * s1 / n) / (n - 1) : 0.0;
        });
    } else {
        parallel_for(G, resolve_threads(threads), [&](std::int64_t g) {
            auto [b, e] = pool.group_range(static_cast<int>(g));
            OccupationField field(model, pool.bits(b));
            double acc = 0.0;
            for (std::int64_t i = b; i < e; i++) {
                std::uint64_t x = pool.bits(i);
                field.reset(x);
                double loc = 0.25 * L;
                for (std::uint64_t ob = x; ob; ob &= ob - 1) {
                    int a = std::countr_zero(ob);
                    for (std::uint64_t eb = ~x & site_mask(L); eb; eb &= eb - 1) {
                        int c = std::countr_zero(eb);
                        loc += (((a + c) & 1) ? -0.5 : 0.5) * field.move_ratio(a, c);
                    }
                }
                acc += loc;
            }
            means[g] = acc / static_cast<double>(e - b);
        });
    }
    return mean_and_error(means);
}

PowerLawFit fit_power_law(const std::vector<int> &r, const std::vector<double> &values, bool staggered,
                          const FitOptions &options) {
    if (r.size() != values.size()) {
        throw Error(ErrorCode::BadConfig, "distance and value lists differ in length");
    }
    if (options.errors && options.errors->size() != values.size()) {
        throw Error(ErrorCode::BadConfig, "error list length differs from values");
    }
    int r_max = options.r_max;
    if (r_max < 0) {
        r_max = r.empty() ? 0 : *std::max_element(r.begin(), r.end());
    }
    std::vector<double> xs, ys, ws;
    for (size_t i = 0; i < r.size(); i++) {
        if (r[i] < options.r_min || r[i] > r_max || r[i] <= 0) {
            continue;
        }
        if (options.odd_only && r[i] % 2 == 0) {
            continue;
        }
        double v = values[i];
        if (staggered && (r[i] % 2)) {
            v = -v;
        }
        double mag = std::abs(v);
        if (!(mag > 0.0) || !std::isfinite(mag)) {
            throw Error(ErrorCode::NonPositiveValues, "zero value inside the fit window at r = " + std::to_string(r[i]));
        }
        double dist = r[i];
        if (options.chord_L > 0) {
            dist = options.chord_L / std::numbers::pi * std::sin(std::numbers::pi * r[i] / options.chord_L);
        }
        xs.push_back(std::log(dist));
        ys.push_back(std::log(mag));
        double w = 1.0;
        if (options.errors) {
            double rel = (*options.errors)[i] / mag;
            w = rel > 0.0 ? 1.0 / (rel * rel) : 1.0;
        }
        ws.push_back(w);
    }
    if (xs.size() < 4) {
        throw Error(ErrorCode::TooFewPoints, "power-law fit needs at least 4 points in the window");
    }
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < xs.size(); i++) {
        sw += ws[i];
        sx += ws[i] * xs[i];
        sy += ws[i] * ys[i];
        sxx += ws[i] * xs[i] * xs[i];
        sxy += ws[i] * xs[i] * ys[i];
    }
    double denom = sw * sxx - sx * sx;
    if (denom <= 0.0) {
        throw Error(ErrorCode::TooFewPoints, "fit window has no spread in r");
    }
    double slope = (sw * sxy - sx * sy) / denom;
    double icpt = (sy - slope * sx) / sw;
    double chi2 = 0.0;
    for (size_t i = 0; i < xs.size(); i++) {
        double d = ys[i] - icpt - slope * xs[i];
        chi2 += ws[i] * d * d;
    }
    double dof = static_cast<double>(xs.size()) - 2.0;
    double var_slope = sw / denom;
    if (!options.errors) {
        var_slope *= chi2 / dof;
    }
    PowerLawFit fit;
    fit.exponent = -slope;
    fit.prefactor = std::exp(icpt);
    fit.stderr_exponent = std::sqrt(std::max(var_slope, 0.0));
    fit.points = static_cast<int>(xs.size());
    return fit;
}

}  // namespace qfi
