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

#ifndef QFI_SAMPLER_HPP
#define QFI_SAMPLER_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qfi/core.hpp"
#include "qfi/jastrow.hpp"

namespace qfi {

constexpr double kTvThreshold = 0.1;

struct SamplerConfig {
    std::int64_t n_samples = 100000;
    std::int64_t burn_in_steps = -1;  // < 0 selects 100 L
    int thin_stride = 0;              // 0 selects L
    int n_chains = 1;
    std::uint64_t seed = 0;
    int n_blocks = 50;  // per chain
    int threads = 0;
};

/// Fills defaults for L and checks the divisibility invariants.
SamplerConfig resolve_sampler_config(const SamplerConfig &cfg, int L);

/// Seed of chain `chain_id`: splitmix-derived from the master seed.
std::uint64_t chain_seed(std::uint64_t master, int chain_id);

class SamplePool {
   public:
    SamplePool() = default;
    SamplePool(SystemParams params, std::vector<std::uint64_t> samples, int n_chains, int n_blocks);

    const SystemParams &params() const {
        return params_;
    }
    int num_sites() const {
        return params_.L;
    }
    std::int64_t size() const {
        return static_cast<std::int64_t>(samples_.size());
    }
    bool empty() const {
        return samples_.empty();
    }
    std::uint64_t bits(std::int64_t i) const {
        return samples_[i];
    }
    Configuration operator[](std::int64_t i) const {
        return Configuration(params_.L, samples_[i]);
    }
    const std::vector<std::uint64_t> &raw() const {
        return samples_;
    }

    int n_chains() const {
        return n_chains_;
    }
    int blocks_per_chain() const {
        return n_blocks_;
    }
    int num_groups() const {
        return n_chains_ * n_blocks_;
    }
    std::int64_t per_chain() const {
        return size() / n_chains_;
    }
    int chain_id(std::int64_t i) const;
    int block_id(std::int64_t i) const;
    /// [begin, end) of global block g (chain-major).
    std::pair<std::int64_t, std::int64_t> group_range(int g) const;

    std::vector<double> chain_acceptance;
    double acceptance_rate = 0.0;
    std::uint64_t seed = 0;
    std::int64_t thin_stride = 0;
    std::int64_t burn_in_steps = 0;

   private:
    SystemParams params_;
    std::vector<std::uint64_t> samples_;
    int n_chains_ = 1;
    int n_blocks_ = 1;
};

SamplePool run_chain(const JastrowModel &model, const SamplerConfig &cfg);

/// Streams tuples of pool entries drawn uniformly with replacement from
/// [begin, end) of the pool.
class TupleStream {
   public:
    TupleStream(const SamplePool &pool, int tuple_size, std::int64_t n_tuples, std::uint64_t seed,
                std::int64_t begin = 0, std::int64_t end = -1);

    /// Writes tuple_size configurations (as bit masks) into out; false when exhausted.
    bool next(std::uint64_t *out);
    bool next(std::vector<Configuration> &out);

    int tuple_size() const {
        return tuple_size_;
    }
    std::int64_t remaining() const {
        return remaining_;
    }

   private:
    const SamplePool *pool_;
    int tuple_size_;
    std::int64_t remaining_;
    std::int64_t begin_;
    std::uint64_t span_;
    std::mt19937_64 rng_;
};

TupleStream bootstrap_tuples(const SamplePool &pool, int tuple_size, std::int64_t n_tuples,
                             std::uint64_t seed);

/// Exact c_n^2 over the half-filled sector, normalized, in sorted-mask order.
struct SectorDistribution {
    std::vector<std::uint64_t> configs;
    std::vector<double> probs;
};
SectorDistribution exact_distribution(const JastrowModel &model);

double tv_distance(const SamplePool &pool, const JastrowModel &model);
double tv_distance(const std::vector<std::uint64_t> &samples, const SectorDistribution &target);

struct ExpFit {
    double a = 0.0;
    double b = 0.0;
};

/// Least squares of ln M = ln a + b L.
ExpFit required_samples_fit(const std::vector<int> &L_values, const std::vector<double> &M_at_threshold);

/// Smallest M on a geometric ladder (ratio `growth`) whose pool reaches
/// TV < threshold, with every other setting taken from `base`.
std::int64_t required_samples(const JastrowModel &model, const SamplerConfig &base,
                              double threshold = kTvThreshold, double growth = 1.25,
                              std::int64_t max_samples = 50000000);

/// Mean of group values and sd / sqrt(G).
ValueWithError mean_and_error(const std::vector<double> &group_means);

/// Probe observable used in diagnostics: squared staggered magnetization (2 O_Z / L)^2.
double probe_observable(std::uint64_t bits, int L);

void write_pool(const std::string &path, const SamplePool &pool);
SamplePool read_pool(const std::string &path, int n_blocks = 50);
void write_diagnostics_csv(const std::string &path, const SamplePool &pool);

}  // namespace qfi

#endif
