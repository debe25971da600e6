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

#ifndef QFI_CORE_HPP
#define QFI_CORE_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace qfi {

enum class ErrorCode {
    OddL,
    TooManySites,
    BadStrength,
    BadCoefficients,
    BadConfig,
    WrongSector,
    RemoveNotOccupied,
    EmptyPool,
    SectorTooLarge,
    SpaceTooLarge,
    TooFewPoints,
    NotDiagonal,
    ProfileSetEmpty,
    MissingTrace,
    MissingTk,
    SingularMatrix,
    NonPositiveValues,
    DegenerateP,
    Io,
};

const char *error_code_name(ErrorCode code);

class Error : public std::runtime_error {
   public:
    Error(ErrorCode code, const std::string &message);
    ErrorCode code() const noexcept {
        return code_;
    }

   private:
    ErrorCode code_;
};

constexpr int kMaxSites = 64;

/// Mask with the low L bits set.
constexpr std::uint64_t site_mask(int L) {
    return L >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << L) - 1);
}

/// Occupation bitstring. Site j (1-indexed) lives in bit j-1.
class Configuration {
   public:
    Configuration() = default;
    Configuration(int num_sites, std::uint64_t bits);

    static Configuration from_string(std::string_view occupations);
    static Configuration from_sites(int num_sites, const std::vector<int> &occupied_sites);

    int num_sites() const {
        return num_sites_;
    }
    std::uint64_t bits() const {
        return bits_;
    }
    int particle_count() const {
        return count_;
    }
    bool occupied(int site) const {
        return (bits_ >> (site - 1)) & 1;
    }
    Configuration flipped(int site) const;
    std::vector<int> occupied_sites() const;
    std::string str() const;

    bool operator==(const Configuration &other) const = default;

   private:
    std::uint64_t bits_ = 0;
    std::uint8_t num_sites_ = 0;
    std::uint8_t count_ = 0;
};

int hamming_distance(const Configuration &a, const Configuration &b);

struct SystemParams {
    int L = 0;
    int N = 0;
    double alpha = 0.0;

    bool operator==(const SystemParams &) const = default;
};

/// Half-filled parameters, N = L/2.
SystemParams make_params(int L, double alpha);

enum class ChannelKind { Dephasing, AmplitudeDamping, Depolarizing };

struct ChannelSpec {
    ChannelKind kind = ChannelKind::Dephasing;
    double p = 0.0;

    bool operator==(const ChannelSpec &) const = default;
};

enum class OperatorKind { OZ, OX, OStar, CustomDiagonal };

struct OperatorSpec {
    OperatorKind kind = OperatorKind::OZ;
    std::optional<std::vector<double>> coefficients;

    bool is_diagonal() const {
        return kind != OperatorKind::OX;
    }
    bool operator==(const OperatorSpec &) const = default;
};

struct ValueWithError {
    double value = 0.0;
    double error = 0.0;
};

/// One Tr(rho^r O rho^s O) estimate. group_means holds the per-group values
/// the error bar was computed from; they feed the joint bootstrap in bounds.
struct MomentEstimate {
    int r = 0;
    int s = 0;
    double value = 0.0;
    double std_error = 0.0;
    std::int64_t n_tuples = 1;
    std::vector<double> group_means;
};

struct KrylovEntry {
    int n = 0;
    double value = 0.0;
    double error = 0.0;
    double condition = 0.0;
    bool stable = true;
};

struct BoundReport {
    std::vector<ValueWithError> T;  // indexed by k
    std::vector<ValueWithError> F;  // indexed by n
    std::vector<KrylovEntry> B;     // B[i] holds order n = i + 1
    std::vector<double> krylov_condition;
    int stable_orders = 0;
};

struct ParamBundle {
    SystemParams params;
    ChannelSpec channel;
    OperatorSpec op;
    std::uint64_t seed = 0;

    bool operator==(const ParamBundle &) const = default;
};

/// Checks all invariants; returns the bundle unchanged.
ParamBundle validate_params(const ParamBundle &bundle);
void validate_system(const SystemParams &params);

std::string to_string(ChannelKind kind);
std::string to_string(OperatorKind kind);
ChannelKind parse_channel_kind(std::string_view name);
OperatorKind parse_operator_kind(std::string_view name);

/// All L-bit masks with k set bits, ascending.
std::vector<std::uint64_t> sector_masks(int L, int k);
double binomial(int n, int k);

/// Position of a k-particle mask inside sector_masks(L, k).
class SectorIndex {
   public:
    SectorIndex(int L, int k);
    std::uint64_t rank(std::uint64_t bits) const;
    int particles() const {
        return k_;
    }

   private:
    int k_;
    std::vector<std::uint64_t> table_;
};

nlohmann::json to_json(const ParamBundle &bundle);
ParamBundle bundle_from_json(const nlohmann::json &j);

}  // namespace qfi

#endif
