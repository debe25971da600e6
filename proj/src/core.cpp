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

#include "qfi/core.hpp"

#include <bit>
#include <algorithm>
#include <cmath>

namespace qfi {

const char *error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::OddL:
            return "OddL";
        case ErrorCode::TooManySites:
            return "TooManySites";
        case ErrorCode::BadStrength:
            return "BadStrength";
        case ErrorCode::BadCoefficients:
            return "BadCoefficients";
        case ErrorCode::BadConfig:
            return "BadConfig";
        case ErrorCode::WrongSector:
            return "WrongSector";
        case ErrorCode::RemoveNotOccupied:
            return "RemoveNotOccupied";
        case ErrorCode::EmptyPool:
            return "EmptyPool";
        case ErrorCode::SectorTooLarge:
            return "SectorTooLarge";
        case ErrorCode::SpaceTooLarge:
            return "SpaceTooLarge";
        case ErrorCode::TooFewPoints:
            return "TooFewPoints";
        case ErrorCode::NotDiagonal:
            return "NotDiagonal";
        case ErrorCode::ProfileSetEmpty:
            return "ProfileSetEmpty";
        case ErrorCode::MissingTrace:
            return "MissingTrace";
        case ErrorCode::MissingTk:
            return "MissingTk";
        case ErrorCode::SingularMatrix:
            return "SingularMatrix";
        case ErrorCode::NonPositiveValues:
            return "NonPositiveValues";
        case ErrorCode::DegenerateP:
            return "DegenerateP";
        case ErrorCode::Io:
            return "Io";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string &message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {
}

Configuration::Configuration(int num_sites, std::uint64_t bits) {
    if (num_sites < 0 || num_sites > kMaxSites) {
        throw Error(ErrorCode::TooManySites, "at most 64 sites are supported");
    }
    bits_ = bits & site_mask(num_sites);
    num_sites_ = static_cast<std::uint8_t>(num_sites);
    count_ = static_cast<std::uint8_t>(std::popcount(bits_));
}

Configuration Configuration::from_string(std::string_view occupations) {
    std::uint64_t bits = 0;
    int L = static_cast<int>(occupations.size());
    if (L > kMaxSites) {
        throw Error(ErrorCode::TooManySites, "at most 64 sites are supported");
    }
    for (int j = 0; j < L; j++) {
        char c = occupations[j];
        if (c == '1') {
            bits |= std::uint64_t{1} << j;
        } else if (c != '0') {
            throw Error(ErrorCode::BadConfig, "occupation strings contain only 0 and 1");
        }
    }
    return Configuration(L, bits);
}

Configuration Configuration::from_sites(int num_sites, const std::vector<int> &occupied_sites) {
    std::uint64_t bits = 0;
    for (int j : occupied_sites) {
        if (j < 1 || j > num_sites) {
            throw Error(ErrorCode::BadConfig, "site index out of range");
        }
        bits |= std::uint64_t{1} << (j - 1);
    }
    return Configuration(num_sites, bits);
}

Configuration Configuration::flipped(int site) const {
    return Configuration(num_sites_, bits_ ^ (std::uint64_t{1} << (site - 1)));
}

std::vector<int> Configuration::occupied_sites() const {
    std::vector<int> out;
    out.reserve(count_);
    for (std::uint64_t b = bits_; b; b &= b - 1) {
        out.push_back(std::countr_zero(b) + 1);
    }
    return out;
}

std::string Configuration::str() const {
    std::string s(num_sites_, '0');
    for (int j = 0; j < num_sites_; j++) {
        if ((bits_ >> j) & 1) {
            s[j] = '1';
        }
    }
    return s;
}

int hamming_distance(const Configuration &a, const Configuration &b) {
    return std::popcount(a.bits() ^ b.bits());
}

void validate_system(const SystemParams &params) {
    if (params.L < 2 || params.L % 2 != 0) {
        throw Error(ErrorCode::OddL, "L must be even");
    }
    if (params.L > kMaxSites) {
        throw Error(ErrorCode::TooManySites, "L must be at most 64");
    }
    if (params.N != params.L / 2) {
        throw Error(ErrorCode::WrongSector, "N must equal L/2");
    }
    if (!std::isfinite(params.alpha)) {
        throw Error(ErrorCode::BadConfig, "alpha must be finite");
    }
}

SystemParams make_params(int L, double alpha) {
    SystemParams params{L, L / 2, alpha};
    validate_system(params);
    return params;
}

ParamBundle validate_params(const ParamBundle &bundle) {
    validate_system(bundle.params);
    if (!(bundle.channel.p >= 0.0 && bundle.channel.p <= 1.0)) {
        throw Error(ErrorCode::BadStrength, "p must lie in [0, 1]");
    }
    const auto &op = bundle.op;
    if (op.kind == OperatorKind::CustomDiagonal) {
        if (!op.coefficients || static_cast<int>(op.coefficients->size()) != bundle.params.L) {
            throw Error(ErrorCode::BadCoefficients, "custom operator needs exactly L coefficients");
        }
    } else if (op.coefficients && static_cast<int>(op.coefficients->size()) != bundle.params.L) {
        throw Error(ErrorCode::BadCoefficients, "coefficient vector must have length L");
    }
    return bundle;
}

std::string to_string(ChannelKind kind) {
    switch (kind) {
        case ChannelKind::Dephasing:
            return "dephasing";
        case ChannelKind::AmplitudeDamping:
            return "damping";
        case ChannelKind::Depolarizing:
            return "depolarizing";
    }
    return "?";
}

std::string to_string(OperatorKind kind) {
    switch (kind) {
        case OperatorKind::OZ:
            return "oz";
        case OperatorKind::OX:
            return "ox";
        case OperatorKind::OStar:
            return "ostar";
        case OperatorKind::CustomDiagonal:
            return "custom";
    }
    return "?";
}

ChannelKind parse_channel_kind(std::string_view name) {
    if (name == "dephasing") {
        return ChannelKind::Dephasing;
    }
    if (name == "damping" || name == "amplitude_damping") {
        return ChannelKind::AmplitudeDamping;
    }
    if (name == "depolarizing") {
        return ChannelKind::Depolarizing;
    }
    throw Error(ErrorCode::BadConfig, "unknown channel '" + std::string(name) + "'");
}

OperatorKind parse_operator_kind(std::string_view name) {
    if (name == "oz") {
        return OperatorKind::OZ;
    }
    if (name == "ox") {
        return OperatorKind::OX;
    }
    if (name == "ostar") {
        return OperatorKind::OStar;
    }
    if (name == "custom") {
        return OperatorKind::CustomDiagonal;
    }
    throw Error(ErrorCode::BadConfig, "unknown operator '" + std::string(name) + "'");
}

std::vector<std::uint64_t> sector_masks(int L, int k) {
    std::vector<std::uint64_t> out;
    if (k < 0 || k > L) {
        return out;
    }
    out.reserve(static_cast<size_t>(binomial(L, k)));
    if (k == 0) {
        out.push_back(0);
        return out;
    }
    std::uint64_t limit = site_mask(L);
    std::uint64_t v = site_mask(k);
    while (true) {
        out.push_back(v);
        if (v == (limit & ~site_mask(L - k))) {
            break;
        }
        std::uint64_t t = v | (v - 1);
        v = (t + 1) | (((~t & -~t) - 1) >> (std::countr_zero(v) + 1));
    }
    return out;
}

double binomial(int n, int k) {
    if (k < 0 || k > n) {
        return 0.0;
    }
    k = std::min(k, n - k);
    double r = 1.0;
    for (int i = 1; i <= k; i++) {
        r = r * (n - k + i) / i;
    }
    return std::round(r);
}

SectorIndex::SectorIndex(int L, int k) : k_(k), table_(static_cast<size_t>(L + 1) * (k + 2), 0) {
    for (int n = 0; n <= L; n++) {
        for (int j = 0; j <= k + 1; j++) {
            table_[n * (k + 2) + j] = static_cast<std::uint64_t>(binomial(n, j));
        }
    }
}

std::uint64_t SectorIndex::rank(std::uint64_t bits) const {
    std::uint64_t r = 0;
    int i = 1;
    for (std::uint64_t b = bits; b; b &= b - 1, i++) {
        r += table_[std::countr_zero(b) * (k_ + 2) + i];
    }
    return r;
}

nlohmann::json to_json(const ParamBundle &bundle) {
    nlohmann::json j;
    j["L"] = bundle.params.L;
    j["N"] = bundle.params.N;
    j["alpha"] = bundle.params.alpha;
    j["channel"] = {{"kind", to_string(bundle.channel.kind)}, {"p", bundle.channel.p}};
    j["operator"]["kind"] = to_string(bundle.op.kind);
    if (bundle.op.coefficients) {
        j["operator"]["coefficients"] = *bundle.op.coefficients;
    } else {
        j["operator"]["coefficients"] = nullptr;
    }
    j["seed"] = bundle.seed;
    return j;
}

ParamBundle bundle_from_json(const nlohmann::json &j) {
    ParamBundle b;
    try {
        b.params.L = j.at("L").get<int>();
        b.params.N = j.contains("N") ? j.at("N").get<int>() : b.params.L / 2;
        b.params.alpha = j.at("alpha").get<double>();
        b.channel.kind = parse_channel_kind(j.at("channel").at("kind").get<std::string>());
        b.channel.p = j.at("channel").at("p").get<double>();
        b.op.kind = parse_operator_kind(j.at("operator").at("kind").get<std::string>());
        const auto &op = j.at("operator");
        if (op.contains("coefficients") && !op.at("coefficients").is_null()) {
            b.op.coefficients = op.at("coefficients").get<std::vector<double>>();
        }
        b.seed = j.value("seed", std::uint64_t{0});
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCode::BadConfig, std::string("malformed parameter bundle: ") + e.what());
    }
    return validate_params(b);
}

}  // namespace qfi
