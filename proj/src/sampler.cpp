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

#include "qfi/sampler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>

#include "qfi/parallel.hpp"

namespace qfi {

namespace {

inline std::uint64_t bounded(std::mt19937_64 &rng, std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

inline double unit(std::mt19937_64 &rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Single swap-move Metropolis chain on the half-filled sector.
class MetropolisChain {
   public:
    MetropolisChain(const JastrowModel &model, std::uint64_t seed)
        : model_(model), rng_(seed), field_(model, initial_bits(model, rng_)) {
        int L = model.num_sites();
        for (int x = 0; x < L; x++) {
            if ((field_.bits() >> x) & 1) {
                occ_.push_back(x);
            } else {
                emp_.push_back(x);
            }
        }
    }

    void step() {
        int L = model_.num_sites();
        if (bounded(rng_, L) == 0) {
            translate(1 + static_cast<int>(bounded(rng_, L - 1)));
            return;
        }
        std::uint64_t i = bounded(rng_, occ_.size());
        std::uint64_t k = bounded(rng_, emp_.size());
        int r = occ_[i];
        int a = emp_[k];
        steps_++;
        double lpr = 2.0 * field_.move_log_ratio(r, a);
        if (lpr >= 0.0 || unit(rng_) < std::exp(lpr)) {
            field_.apply_move(r, a);
            occ_[i] = a;
            emp_[k] = r;
            accepted_++;
        }
    }

    std::uint64_t bits() const {
        return field_.bits();
    }
    std::int64_t steps() const {
        return steps_;
    }
    std::int64_t accepted() const {
        return accepted_;
    }
    void reset_counters() {
        steps_ = 0;
        accepted_ = 0;
    }

   private:
    // Cyclic shift of the whole configuration. |c_n| is translation invariant, so this is
    // accepted almost always and connects the peaks that swap moves cannot cross at large alpha.
    void translate(int shift) {
        int L = model_.num_sites();
        std::uint64_t b = field_.bits();
        std::uint64_t t = ((b << shift) | (b >> (L - shift))) & site_mask(L);
        double lpr = 2.0 * (model_.log_mag_bits(t) - model_.log_mag_bits(b));
        if (lpr >= 0.0 || unit(rng_) < std::exp(lpr)) {
            field_.reset(t);
            for (auto &x : occ_) {
                x = (x + shift) % L;
            }
            for (auto &x : emp_) {
                x = (x + shift) % L;
            }
        }
    }

    static std::uint64_t initial_bits(const JastrowModel &model, std::mt19937_64 &rng) {
        int L = model.num_sites();
        std::vector<int> sites(L);
        std::iota(sites.begin(), sites.end(), 0);
        for (int i = L - 1; i > 0; i--) {
            std::swap(sites[i], sites[bounded(rng, i + 1)]);
        }
        std::uint64_t bits = 0;
        for (int i = 0; i < model.num_particles(); i++) {
            bits |= std::uint64_t{1} << sites[i];
        }
        return bits;
    }

    const JastrowModel &model_;
    std::mt19937_64 rng_;
    OccupationField field_;
    std::vector<int> occ_;
    std::vector<int> emp_;
    std::int64_t steps_ = 0;
    std::int64_t accepted_ = 0;
};

void check_enumerable(int L) {
    if (L > 20) {
        throw Error(ErrorCode::SectorTooLarge, "exact sector enumeration is limited to L <= 20");
    }
}

double tv_from_counts(const std::vector<std::int64_t> &counts, std::int64_t total,
                      const std::vector<double> &probs) {
    double acc = 0.0;
    double inv = 1.0 / static_cast<double>(total);
    for (size_t i = 0; i < probs.size(); i++) {
        acc += std::abs(counts[i] * inv - probs[i]);
    }
    return 0.5 * acc;
}

}  // namespace

SamplerConfig resolve_sampler_config(const SamplerConfig &cfg, int L) {
    SamplerConfig out = cfg;
    if (out.burn_in_steps < 0) {
        out.burn_in_steps = 100LL * L;
    }
    if (out.thin_stride <= 0) {
        out.thin_stride = L;
    }
    if (out.n_samples <= 0 || out.n_chains <= 0 || out.n_blocks <= 0) {
        throw Error(ErrorCode::BadConfig, "sample count, chain count and block count must be positive");
    }
    if (out.n_samples % out.n_chains != 0) {
        throw Error(ErrorCode::BadConfig, "n_samples must be divisible by n_chains");
    }
    if ((out.n_samples / out.n_chains) % out.n_blocks != 0) {
        throw Error(ErrorCode::BadConfig, "n_blocks must divide the samples retained per chain");
    }
    return out;
}

std::uint64_t chain_seed(std::uint64_t master, int chain_id) {
    return stream_seed(master, static_cast<std::uint64_t>(chain_id));
}

SamplePool::SamplePool(SystemParams params, std::vector<std::uint64_t> samples, int n_chains, int n_blocks)
    : params_(params), samples_(std::move(samples)), n_chains_(n_chains), n_blocks_(n_blocks) {
    if (n_chains_ <= 0 || n_blocks_ <= 0 || samples_.size() % n_chains_ != 0 ||
        (samples_.size() / n_chains_) % n_blocks_ != 0) {
        throw Error(ErrorCode::BadConfig, "pool layout does not divide into chains and blocks");
    }
}

int SamplePool::chain_id(std::int64_t i) const {
    return static_cast<int>(i / per_chain());
}

int SamplePool::block_id(std::int64_t i) const {
    std::int64_t pc = per_chain();
    std::int64_t local = i % pc;
    return chain_id(i) * n_blocks_ + static_cast<int>(local / (pc / n_blocks_));
}

std::pair<std::int64_t, std::int64_t> SamplePool::group_range(int g) const {
    std::int64_t len = per_chain() / n_blocks_;
    return {g * len, (g + 1) * len};
}

SamplePool run_chain(const JastrowModel &model, const SamplerConfig &cfg_in) {
    SamplerConfig cfg = resolve_sampler_config(cfg_in, model.num_sites());
    std::int64_t per_chain = cfg.n_samples / cfg.n_chains;
    std::vector<std::uint64_t> samples(cfg.n_samples);
    std::vector<double> acceptance(cfg.n_chains, 0.0);
    std::vector<std::int64_t> steps(cfg.n_chains, 0), accepted(cfg.n_chains, 0);

    parallel_for(cfg.n_chains, resolve_threads(cfg.threads), [&](std::int64_t c) {
        MetropolisChain chain(model, chain_seed(cfg.seed, static_cast<int>(c)));
        for (std::int64_t s = 0; s < cfg.burn_in_steps; s++) {
            chain.step();
        }
        chain.reset_counters();
        std::uint64_t *out = samples.data() + c * per_chain;
        for (std::int64_t i = 0; i < per_chain; i++) {
            for (int t = 0; t < cfg.thin_stride; t++) {
                chain.step();
            }
            out[i] = chain.bits();
        }
        steps[c] = chain.steps();
        accepted[c] = chain.accepted();
        acceptance[c] = chain.steps() ? static_cast<double>(chain.accepted()) / chain.steps() : 0.0;
    });

    SamplePool pool(model.params(), std::move(samples), cfg.n_chains, cfg.n_blocks);
    pool.chain_acceptance = acceptance;
    std::int64_t total_steps = std::accumulate(steps.begin(), steps.end(), std::int64_t{0});
    std::int64_t total_acc = std::accumulate(accepted.begin(), accepted.end(), std::int64_t{0});
    pool.acceptance_rate = total_steps ? static_cast<double>(total_acc) / total_steps : 0.0;
    pool.seed = cfg.seed;
    pool.thin_stride = cfg.thin_stride;
    pool.burn_in_steps = cfg.burn_in_steps;
    return pool;
}

TupleStream::TupleStream(const SamplePool &pool, int tuple_size, std::int64_t n_tuples, std::uint64_t seed,
                         std::int64_t begin, std::int64_t end)
    : pool_(&pool), tuple_size_(tuple_size), remaining_(n_tuples), begin_(begin), rng_(seed) {
    if (end < 0) {
        end = pool.size();
    }
    if (pool.empty() || end <= begin) {
        throw Error(ErrorCode::EmptyPool, "cannot draw tuples from an empty pool");
    }
    if (tuple_size <= 0 || n_tuples < 0) {
        throw Error(ErrorCode::BadConfig, "tuple size must be positive");
    }
    span_ = static_cast<std::uint64_t>(end - begin);
}

bool TupleStream::next(std::uint64_t *out) {
    if (remaining_ <= 0) {
        return false;
    }
    remaining_--;
    for (int i = 0; i < tuple_size_; i++) {
        out[i] = pool_->bits(begin_ + static_cast<std::int64_t>(bounded(rng_, span_)));
    }
    return true;
}

bool TupleStream::next(std::vector<Configuration> &out) {
    std::uint64_t buf[64];
    if (tuple_size_ > 64 || !next(buf)) {
        return false;
    }
    out.resize(tuple_size_);
    for (int i = 0; i < tuple_size_; i++) {
        out[i] = Configuration(pool_->num_sites(), buf[i]);
    }
    return true;
}

TupleStream bootstrap_tuples(const SamplePool &pool, int tuple_size, std::int64_t n_tuples,
                             std::uint64_t seed) {
    return TupleStream(pool, tuple_size, n_tuples, seed);
}

SectorDistribution exact_distribution(const JastrowModel &model) {
    check_enumerable(model.num_sites());
    SectorDistribution d;
    d.configs = sector_masks(model.num_sites(), model.num_particles());
    d.probs.resize(d.configs.size());
    double top = -INFINITY;
    for (size_t i = 0; i < d.configs.size(); i++) {
        d.probs[i] = 2.0 * model.log_mag_bits(d.configs[i]);
        top = std::max(top, d.probs[i]);
    }
    double z = 0.0;
    for (double &v : d.probs) {
        v = std::exp(v - top);
        z += v;
    }
    for (double &v : d.probs) {
        v /= z;
    }
    return d;
}

double tv_distance(const std::vector<std::uint64_t> &samples, const SectorDistribution &target) {
    if (samples.empty()) {
        throw Error(ErrorCode::EmptyPool, "cannot compare an empty pool");
    }
    std::vector<std::int64_t> counts(target.configs.size(), 0);
    std::int64_t outside = 0;
    for (std::uint64_t b : samples) {
        auto it = std::lower_bound(target.configs.begin(), target.configs.end(), b);
        if (it == target.configs.end() || *it != b) {
            outside++;
        } else {
            counts[it - target.configs.begin()]++;
        }
    }
    double tv = tv_from_counts(counts, static_cast<std::int64_t>(samples.size()), target.probs);
    return tv + 0.5 * static_cast<double>(outside) / samples.size();
}

double tv_distance(const SamplePool &pool, const JastrowModel &model) {
    return tv_distance(pool.raw(), exact_distribution(model));
}

ExpFit required_samples_fit(const std::vector<int> &L_values, const std::vector<double> &M_at_threshold) {
    if (L_values.size() != M_at_threshold.size()) {
        throw Error(ErrorCode::BadConfig, "L and M lists differ in length");
    }
    if (L_values.size() < 3) {
        throw Error(ErrorCode::TooFewPoints, "an exponential fit needs at least 3 points");
    }
    double n = static_cast<double>(L_values.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < L_values.size(); i++) {
        if (!(M_at_threshold[i] > 0)) {
            throw Error(ErrorCode::NonPositiveValues, "sample counts must be positive");
        }
        double x = L_values[i];
        double y = std::log(M_at_threshold[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double denom = n * sxx - sx * sx;
    if (denom == 0.0) {
        throw Error(ErrorCode::TooFewPoints, "fit needs at least two distinct L values");
    }
    double b = (n * sxy - sx * sy) / denom;
    double ln_a = (sy - b * sx) / n;
    return ExpFit{std::exp(ln_a), b};
}

std::int64_t required_samples(const JastrowModel &model, const SamplerConfig &base, double threshold,
                              double growth, std::int64_t max_samples) {
    int L = model.num_sites();
    check_enumerable(L);
    SamplerConfig cfg = base;
    cfg.n_samples = 1;
    cfg.n_chains = 1;
    cfg.n_blocks = 1;
    cfg = resolve_sampler_config(cfg, L);

    SectorDistribution target = exact_distribution(model);
    SectorIndex ranker(L, model.num_particles());
    std::vector<std::int64_t> counts(target.configs.size(), 0);

    MetropolisChain chain(model, chain_seed(cfg.seed, 0));
    for (std::int64_t s = 0; s < cfg.burn_in_steps; s++) {
        chain.step();
    }
    std::int64_t m = 0;
    double next_check = 16.0;
    while (m < max_samples) {
        for (int t = 0; t < cfg.thin_stride; t++) {
            chain.step();
        }
        counts[ranker.rank(chain.bits())]++;
        m++;
        if (m >= static_cast<std::int64_t>(next_check)) {
            if (tv_from_counts(counts, m, target.probs) < threshold) {
                return m;
            }
            next_check = std::max(next_check * growth, next_check + 1.0);
        }
    }
    return -1;
}

ValueWithError mean_and_error(const std::vector<double> &group_means) {
    size_t g = group_means.size();
    if (g == 0) {
        return {};
    }
    double mean = std::accumulate(group_means.begin(), group_means.end(), 0.0) / g;
    if (g < 2) {
        return {mean, 0.0};
    }
    double ss = 0.0;
    for (double v : group_means) {
        ss += (v - mean) * (v - mean);
    }
    return {mean, std::sqrt(ss / (g - 1) / g)};
}

double probe_observable(std::uint64_t bits, int L) {
    // O_Z = #(occupied odd sites) - #(occupied even sites)
    std::uint64_t mask = site_mask(L);
    double oz = std::popcount(bits & mask & 0x5555555555555555ULL) -
                std::popcount(bits & mask & 0xAAAAAAAAAAAAAAAAULL);
    double m = 2.0 * oz / L;
    return m * m;
}

namespace {

void put_u64(std::ostream &out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; i++) {
        b[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    out.write(reinterpret_cast<const char *>(b), 8);
}

std::uint64_t get_u64(std::istream &in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char *>(b), 8);
    if (!in) {
        throw Error(ErrorCode::Io, "truncated pool file");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < 8; i++) {
        v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    }
    return v;
}

}  // namespace

void write_pool(const std::string &path, const SamplePool &pool) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
    }
    put_u64(out, static_cast<std::uint64_t>(pool.params().L));
    put_u64(out, static_cast<std::uint64_t>(pool.params().N));
    put_u64(out, std::bit_cast<std::uint64_t>(pool.params().alpha));
    put_u64(out, static_cast<std::uint64_t>(pool.size()));
    put_u64(out, pool.seed);
    put_u64(out, static_cast<std::uint64_t>(pool.thin_stride));
    put_u64(out, static_cast<std::uint64_t>(pool.burn_in_steps));
    for (std::uint64_t b : pool.raw()) {
        put_u64(out, b);
    }
    if (!out) {
        throw Error(ErrorCode::Io, "failed writing " + path);
    }
}

SamplePool read_pool(const std::string &path, int n_blocks) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + path);
    }
    SystemParams params;
    params.L = static_cast<int>(get_u64(in));
    params.N = static_cast<int>(get_u64(in));
    params.alpha = std::bit_cast<double>(get_u64(in));
    validate_system(params);
    std::uint64_t m = get_u64(in);
    std::uint64_t seed = get_u64(in);
    std::uint64_t thin = get_u64(in);
    std::uint64_t burn = get_u64(in);
    if (m == 0 || m > (std::uint64_t{1} << 40)) {
        throw Error(ErrorCode::Io, "implausible sample count in " + path);
    }
    std::vector<std::uint64_t> samples(m);
    for (auto &b : samples) {
        b = get_u64(in);
        if (std::popcount(b) != params.N || (b & ~site_mask(params.L))) {
            throw Error(ErrorCode::WrongSector, "pool file holds a configuration off half filling");
        }
    }
    int blocks = std::max(1, std::min<int>(n_blocks, static_cast<int>(std::min<std::uint64_t>(m, 1 << 20))));
    while (m % blocks != 0) {
        blocks--;
    }
    SamplePool pool(params, std::move(samples), 1, blocks);
    pool.seed = seed;
    pool.thin_stride = static_cast<std::int64_t>(thin);
    pool.burn_in_steps = static_cast<std::int64_t>(burn);
    return pool;
}

void write_diagnostics_csv(const std::string &path, const SamplePool &pool) {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
    }
    out << "chain_id,block_id,acceptance_rate,probe_mean\n";
    out.precision(12);
    for (int g = 0; g < pool.num_groups(); g++) {
        auto [b, e] = pool.group_range(g);
        double acc = 0.0;
        for (std::int64_t i = b; i < e; i++) {
            acc += probe_observable(pool.bits(i), pool.num_sites());
        }
        int c = pool.chain_id(b);
        double rate = c < static_cast<int>(pool.chain_acceptance.size()) ? pool.chain_acceptance[c] : NAN;
        out << c << ',' << g << ',' << rate << ',' << acc / (e - b) << '\n';
    }
}

}  // namespace qfi
