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

#include "qfi/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>

#include "qfi/analytics.hpp"
#include "qfi/bounds.hpp"
#include "qfi/estimators.hpp"
#include "qfi/exact.hpp"
#include "qfi/jastrow.hpp"
#include "qfi/parallel.hpp"
#include "qfi/sampler.hpp"

#ifndef QFI_BUILD_ID
#define QFI_BUILD_ID "unknown"
#endif

namespace qfi {

namespace {

using json = nlohmann::json;

constexpr int kMaxT = 5;
constexpr int kMaxFColumn = 5;
constexpr int kMaxBColumn = 3;
const double kNan = std::numeric_limits<double>::quiet_NaN();

struct CommonArgs {
    std::string config;
    std::string L = "";
    std::string alpha = "1";
    std::string p = "0";
    std::string channel = "dephasing";
    std::string op = "oz";
    std::string coefficients;
    std::uint64_t seed = 1;
    int threads = 0;
    std::string out;
};

struct SamplingArgs {
    std::string samples = "1e5";
    int chains = 1;
    int blocks = 50;
    std::int64_t burn_in = -1;
    int thin = 0;
    std::string pool;
};

struct BoundArgs {
    std::string tuples = "2e5";
    std::string orders;
    int bootstrap = 400;
    double condition_limit = kDefaultConditionLimit;
};

std::int64_t parse_count(const std::string &text, const std::string &what) {
    double v = 0.0;
    try {
        size_t used = 0;
        v = std::stod(text, &used);
        if (used != text.size()) {
            throw std::invalid_argument(text);
        }
    } catch (const std::exception &) {
        throw Error(ErrorCode::BadConfig, what + " is not a number: " + text);
    }
    if (!std::isfinite(v) || v < 1 || v != std::floor(v) || v > 9e15) {
        throw Error(ErrorCode::BadConfig, what + " must be a positive integer: " + text);
    }
    return static_cast<std::int64_t>(v);
}

double parse_real(const std::string &text, const std::string &what) {
    try {
        size_t used = 0;
        double v = std::stod(text, &used);
        if (used == text.size()) {
            return v;
        }
    } catch (const std::exception &) {
    }
    throw Error(ErrorCode::BadConfig, what + " is not a number: " + text);
}

std::vector<double> parse_list(const std::string &text, const std::string &what) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        values.push_back(parse_real(item, what));
    }
    return values;
}

double single_value(const std::string &text, const std::string &what) {
    auto grid = parse_grid(text);
    if (grid.size() != 1) {
        throw Error(ErrorCode::BadConfig, what + " takes a single value outside scan");
    }
    return grid[0];
}

int as_int(double v, const std::string &what) {
    if (v != std::floor(v) || std::abs(v) > 1e6) {
        throw Error(ErrorCode::BadConfig, what + " must be an integer");
    }
    return static_cast<int>(v);
}

struct BoundSelection {
    std::set<int> F;
    std::set<int> B;

    int max_F() const {
        return F.empty() ? -1 : *F.rbegin();
    }
    int max_B() const {
        return B.empty() ? 0 : *B.rbegin();
    }
    int max_k() const {
        return std::max(max_F(), 2 * max_B() - 1);
    }
    std::string str() const {
        std::string s;
        for (int n : F) {
            s += (s.empty() ? "F" : "+F") + std::to_string(n);
        }
        for (int n : B) {
            s += (s.empty() ? "B" : "+B") + std::to_string(n);
        }
        return s;
    }
};

BoundSelection parse_orders(const std::string &text, ChannelKind kind) {
    std::string spec = text;
    if (spec.empty()) {
        switch (kind) {
            case ChannelKind::Dephasing:
                spec = "F1,F3,F5,B1,B2";
                break;
            case ChannelKind::AmplitudeDamping:
                spec = "F0,F1,B1";
                break;
            case ChannelKind::Depolarizing:
                spec = "F1,B1";
                break;
        }
    }
    BoundSelection sel;
    std::replace(spec.begin(), spec.end(), '+', ',');
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.size() < 2 || (item[0] != 'F' && item[0] != 'B')) {
            throw Error(ErrorCode::BadConfig, "bad bound order: " + item);
        }
        int n = as_int(parse_real(item.substr(1), "bound order"), "bound order");
        if (item[0] == 'F') {
            if (n < 0 || n > kMaxFColumn) {
                throw Error(ErrorCode::BadConfig, "F orders must lie in 0..5");
            }
            sel.F.insert(n);
        } else {
            if (n < 1 || n > kMaxBColumn) {
                throw Error(ErrorCode::BadConfig, "B orders must lie in 1..3");
            }
            sel.B.insert(n);
        }
    }
    if (sel.max_k() > kMaxT) {
        throw Error(ErrorCode::BadConfig, "requested orders need T_k beyond k = 5");
    }
    return sel;
}

/// Base bundle from --config and explicit flags. L, alpha and p may be overridden per grid point.
ParamBundle base_bundle(const CommonArgs &args, const CLI::App &cmd) {
    ParamBundle b;
    bool from_config = !args.config.empty();
    if (from_config) {
        std::ifstream in(args.config);
        if (!in) {
            throw Error(ErrorCode::Io, "cannot open config " + args.config);
        }
        json j;
        try {
            in >> j;
        } catch (const json::exception &e) {
            throw Error(ErrorCode::BadConfig, std::string("config is not valid JSON: ") + e.what());
        }
        b = bundle_from_json(j);
    }
    auto given = [&](const char *name) { return !from_config || cmd.count(name) > 0; };
    if (given("--channel")) {
        b.channel.kind = parse_channel_kind(args.channel);
    }
    if (given("--operator")) {
        b.op.kind = parse_operator_kind(args.op);
    }
    if (given("--coefficients") && !args.coefficients.empty()) {
        b.op.coefficients = parse_list(args.coefficients, "coefficients");
    }
    if (given("--seed")) {
        b.seed = args.seed;
    }
    return b;
}

struct GridPoint {
    int L;
    double alpha;
    double p;
};

std::vector<GridPoint> grid_points(const CommonArgs &args, const CLI::App &cmd, const ParamBundle &base,
                                   bool allow_grid) {
    bool from_config = !args.config.empty();
    auto values = [&](const char *flag, const std::string &text, double fallback) {
        if (from_config && cmd.count(flag) == 0) {
            return std::vector<double>{fallback};
        }
        auto g = parse_grid(text);
        if (!allow_grid && g.size() != 1) {
            throw Error(ErrorCode::BadConfig, std::string(flag) + " takes a single value outside scan");
        }
        return g;
    };
    if (!from_config && args.L.empty()) {
        throw Error(ErrorCode::BadConfig, "--L is required");
    }
    auto Ls = values("--L", args.L, base.params.L);
    auto alphas = values("--alpha", args.alpha, base.params.alpha);
    auto ps = values("--p", args.p, base.channel.p);
    std::vector<GridPoint> pts;
    for (double L : Ls) {
        for (double a : alphas) {
            for (double p : ps) {
                pts.push_back({as_int(L, "L"), a, p});
            }
        }
    }
    return pts;
}

ParamBundle bundle_at(const ParamBundle &base, const GridPoint &pt) {
    ParamBundle b = base;
    validate_system(SystemParams{pt.L, pt.L / 2, pt.alpha});
    b.params = make_params(pt.L, pt.alpha);
    b.channel.p = pt.p;
    return validate_params(b);
}

SamplerConfig sampler_config(const SamplingArgs &s, std::uint64_t seed, int threads) {
    SamplerConfig cfg;
    cfg.n_samples = parse_count(s.samples, "--samples");
    cfg.n_chains = s.chains;
    cfg.n_blocks = s.blocks;
    cfg.burn_in_steps = s.burn_in;
    cfg.thin_stride = s.thin;
    cfg.seed = seed;
    cfg.threads = threads;
    if (cfg.n_chains < 1 || cfg.n_blocks < 1) {
        throw Error(ErrorCode::BadConfig, "--chains and --blocks must be positive");
    }
    return cfg;
}

json sampler_json(const SamplerConfig &cfg) {
    return json{{"n_samples", cfg.n_samples},       {"n_chains", cfg.n_chains},
                {"n_blocks", cfg.n_blocks},         {"burn_in_steps", cfg.burn_in_steps},
                {"thin_stride", cfg.thin_stride},   {"seed", cfg.seed}};
}

void write_manifest(const std::string &data_path, const json &manifest) {
    std::ofstream out(data_path + ".json");
    if (!out) {
        throw Error(ErrorCode::Io, "cannot write manifest for " + data_path);
    }
    out << manifest.dump(2) << "\n";
}

json manifest_base(const std::string &command, const std::vector<std::string> &args, int threads) {
    return json{{"command", command}, {"argv", args}, {"build_id", QFI_BUILD_ID}, {"threads", threads}};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string join(const std::vector<std::string> &cells) {
    std::string line;
    for (size_t i = 0; i < cells.size(); i++) {
        if (i) {
            line += ',';
        }
        line += cells[i];
    }
    return line;
}

std::string row_key(const std::string &mode, const ParamBundle &b, const std::string &extra) {
    std::string key = "mode=" + mode + ";L=" + std::to_string(b.params.L) + ";alpha=" + csv_number(b.params.alpha) +
                      ";channel=" + to_string(b.channel.kind) + ";p=" + csv_number(b.channel.p) +
                      ";operator=" + to_string(b.op.kind) + ";seed=" + std::to_string(b.seed);
    if (b.op.coefficients) {
        std::string c;
        for (double v : *b.op.coefficients) {
            c += (c.empty() ? "" : " ") + csv_number(v);
        }
        key += ";coefficients=" + c;
    }
    return key + extra;
}

double witness_of(const std::vector<double> &bounds, int L) {
    for (double v : bounds) {
        if (std::isfinite(v) && v > sql_threshold(L)) {
            return 1.0;
        }
    }
    return 0.0;
}

template <class F>
double guarded(F fn) {
    try {
        return fn();
    } catch (const Error &) {
        return kNan;
    }
}

// ---------------------------------------------------------------- row layouts

std::vector<std::string> bounds_header() {
    std::vector<std::string> h = {"L", "alpha", "channel", "p", "operator", "seed", "samples", "chains", "tuples"};
    for (int k = 0; k <= kMaxT; k++) {
        h.push_back("T" + std::to_string(k));
        h.push_back("T" + std::to_string(k) + "_err");
    }
    for (int n = 0; n <= kMaxFColumn; n++) {
        h.push_back("F" + std::to_string(n));
        h.push_back("F" + std::to_string(n) + "_err");
    }
    for (int n = 1; n <= kMaxBColumn; n++) {
        std::string b = "B" + std::to_string(n);
        h.insert(h.end(), {b, b + "_err", b + "_cond", b + "_stable"});
    }
    h.insert(h.end(), {"stable_orders", "SQL", "witness", "ghz_dephasing", "ghz_damping", "dephasing_ox",
                       "dephasing_ox_err", "depolarizing", "depolarizing_err", "dicke", "acceptance_rate", "tv",
                       "status", "row_key"});
    return h;
}

std::vector<std::string> exact_header() {
    std::vector<std::string> h = {"L", "alpha", "channel", "p", "operator", "state", "qfi", "effective_rank",
                                  "var_pure"};
    for (int k = 0; k <= kMaxT; k++) {
        h.push_back("T" + std::to_string(k));
    }
    for (int n = 0; n <= kMaxFColumn; n++) {
        h.push_back("F" + std::to_string(n));
    }
    for (int n = 1; n <= kMaxBColumn; n++) {
        std::string b = "B" + std::to_string(n);
        h.insert(h.end(), {b, b + "_cond", b + "_stable"});
    }
    h.insert(h.end(), {"stable_orders", "SQL", "witness", "ghz_dephasing", "ghz_damping", "dephasing_ox",
                       "depolarizing", "dicke", "status", "row_key"});
    return h;
}

struct Overlays {
    double ghz_dephasing = kNan;
    double ghz_damping = kNan;
    double dephasing_ox = kNan;
    double dephasing_ox_err = kNan;
    double depolarizing = kNan;
    double depolarizing_err = kNan;
    double dicke = kNan;
};

Overlays overlays_for(const ParamBundle &b, std::optional<ValueWithError> var) {
    Overlays o;
    int L = b.params.L;
    double p = b.channel.p;
    auto kind = b.channel.kind;
    if (kind == ChannelKind::Dephasing && b.op.kind == OperatorKind::OZ) {
        o.ghz_dephasing = guarded([&] { return ghz_dephasing_qfi(L, p); });
    }
    if (kind == ChannelKind::AmplitudeDamping && b.op.kind == OperatorKind::OZ) {
        o.ghz_damping = guarded([&] { return ghz_damping_qfi(L, p); });
    }
    if (kind == ChannelKind::Dephasing && b.op.kind == OperatorKind::OX && var) {
        o.dephasing_ox = guarded([&] { return dephasing_ox_qfi(var->value, L, p); });
        o.dephasing_ox_err = std::abs(guarded([&] { return dephasing_ox_qfi(var->error, L, p); }));
    }
    if (kind == ChannelKind::Depolarizing && var) {
        o.depolarizing = guarded([&] { return depolarizing_qfi(var->value, L, p); });
        o.depolarizing_err = std::abs(guarded([&] { return depolarizing_qfi(var->error, L, p); }));
    }
    if (kind == ChannelKind::Dephasing && b.op.kind == OperatorKind::OStar && L % 4 == 0) {
        o.dicke = guarded([&] { return dicke_qfi(L, p); });
    }
    return o;
}

struct RowResult {
    std::vector<std::string> cells;
    json summary;
};

std::vector<double> selected_values(const BoundReport &report, const BoundSelection &sel) {
    std::vector<double> v;
    for (int n : sel.F) {
        if (n < static_cast<int>(report.F.size())) {
            v.push_back(report.F[n].value);
        }
    }
    for (int n : sel.B) {
        if (n - 1 < static_cast<int>(report.B.size())) {
            v.push_back(report.B[n - 1].value);
        }
    }
    return v;
}

void append_bounds(std::vector<std::string> &c, const BoundReport *report, const BoundSelection &sel, bool errors) {
    auto num = [&](double v) { c.push_back(csv_number(v)); };
    for (int k = 0; k <= kMaxT; k++) {
        bool ok = report && k < static_cast<int>(report->T.size()) && k <= sel.max_k();
        num(ok ? report->T[k].value : kNan);
        if (errors) {
            num(ok ? report->T[k].error : kNan);
        }
    }
    for (int n = 0; n <= kMaxFColumn; n++) {
        bool ok = report && sel.F.count(n) && n < static_cast<int>(report->F.size());
        num(ok ? report->F[n].value : kNan);
        if (errors) {
            num(ok ? report->F[n].error : kNan);
        }
    }
    for (int n = 1; n <= kMaxBColumn; n++) {
        bool ok = report && sel.B.count(n) && n - 1 < static_cast<int>(report->B.size());
        const KrylovEntry *e = ok ? &report->B[n - 1] : nullptr;
        num(e ? e->value : kNan);
        if (errors) {
            num(e ? e->error : kNan);
        }
        num(e ? e->condition : kNan);
        c.push_back(e ? (e->stable ? "1" : "0") : "nan");
    }
    if (report) {
        c.push_back(std::to_string(std::min(report->stable_orders, sel.max_B())));
    } else {
        c.push_back("nan");
    }
}

struct McInputs {
    SamplingArgs sampling;
    BoundArgs bounds;
    int threads = 0;
};

/// One bounds row from Monte Carlo. Sampling happens inline unless a pool is supplied.
RowResult bounds_row(const ParamBundle &b, const McInputs &in, const SamplePool *given_pool) {
    const int L = b.params.L;
    BoundSelection sel = parse_orders(in.bounds.orders, b.channel.kind);
    std::int64_t n_tuples = parse_count(in.bounds.tuples, "--tuples");
    JastrowModel model(b.params);
    SamplerConfig cfg = sampler_config(in.sampling, b.seed, in.threads);
    SamplePool local;
    const SamplePool *pool = given_pool;
    if (!pool) {
        local = run_chain(model, cfg);
        pool = &local;
    }
    MomentTable table =
        estimate_moment_table(b.channel, b.op, *pool, model, sel.max_k(), n_tuples, stream_seed(b.seed, 101), in.threads);
    BoundOptions opts;
    opts.max_F = std::max(sel.max_F(), 0);
    opts.max_B = sel.max_B();
    opts.condition_limit = in.bounds.condition_limit;
    opts.n_bootstrap = in.bounds.bootstrap;
    opts.seed = stream_seed(b.seed, 202);
    BoundReport report = assemble_bounds(table, opts);

    std::optional<ValueWithError> var;
    bool need_var = (b.channel.kind == ChannelKind::Dephasing && b.op.kind == OperatorKind::OX) ||
                    b.channel.kind == ChannelKind::Depolarizing;
    if (need_var) {
        var = variance_pure(*pool, model, b.op, in.threads);
    }
    Overlays o = overlays_for(b, var);
    double tv = kNan;
    if (L <= 20) {
        tv = guarded([&] { return tv_distance(*pool, model); });
    }

    std::vector<std::string> c = {std::to_string(L), csv_number(b.params.alpha), to_string(b.channel.kind),
                                  csv_number(b.channel.p), to_string(b.op.kind), std::to_string(b.seed),
                                  std::to_string(pool->size()), std::to_string(pool->n_chains()),
                                  std::to_string(n_tuples)};
    append_bounds(c, &report, sel, true);
    for (double v : {sql_threshold(L), witness_of(selected_values(report, sel), L), o.ghz_dephasing, o.ghz_damping,
                     o.dephasing_ox, o.dephasing_ox_err, o.depolarizing, o.depolarizing_err, o.dicke,
                     pool->acceptance_rate, tv}) {
        c.push_back(csv_number(v));
    }
    c.push_back("ok");
    RowResult r;
    r.cells = std::move(c);
    r.summary = json{{"acceptance_rate", pool->acceptance_rate}, {"tv", tv}, {"bounds", sel.str()}};
    return r;
}

std::string bounds_key(const ParamBundle &b, const McInputs &in) {
    BoundSelection sel = parse_orders(in.bounds.orders, b.channel.kind);
    return row_key("mc", b, ";samples=" + in.sampling.samples + ";chains=" + std::to_string(in.sampling.chains) +
                                ";blocks=" + std::to_string(in.sampling.blocks) + ";burn_in=" +
                                std::to_string(in.sampling.burn_in) + ";thin=" + std::to_string(in.sampling.thin) +
                                ";tuples=" + in.bounds.tuples + ";orders=" + sel.str());
}

std::vector<std::string> failed_bounds_row(const ParamBundle &b, const McInputs &in, const std::string &status) {
    std::vector<std::string> c = {std::to_string(b.params.L), csv_number(b.params.alpha), to_string(b.channel.kind),
                                  csv_number(b.channel.p), to_string(b.op.kind), std::to_string(b.seed),
                                  "nan", std::to_string(in.sampling.chains), "nan"};
    BoundSelection sel = parse_orders(in.bounds.orders, b.channel.kind);
    append_bounds(c, nullptr, sel, true);
    for (int i = 0; i < 11; i++) {
        c.push_back("nan");
    }
    c.push_back(status);
    return c;
}

struct ExactInputs {
    std::string state = "jg";
    std::string orders;
};

DenseState exact_state(const ParamBundle &b, const std::string &state) {
    const int L = b.params.L;
    if (b.channel.kind == ChannelKind::AmplitudeDamping && L > 12 && b.channel.p > 0.0) {
        throw Error(ErrorCode::SpaceTooLarge, "amplitude damping oracle supports L <= 12");
    }
    if (state == "jg") {
        return build_jg_density(JastrowModel(b.params));
    }
    if (state == "ghz") {
        return ghz_state(L);
    }
    if (state == "dicke") {
        return dicke_state(L);
    }
    throw Error(ErrorCode::BadConfig, "unknown state: " + state);
}

RowResult exact_row(const ParamBundle &b, const ExactInputs &in) {
    const int L = b.params.L;
    BoundSelection sel = parse_orders(in.orders, b.channel.kind);
    DenseState rho = apply_channel(exact_state(b, in.state), b.channel);
    ExactOracle oracle(rho, b.op);
    double qfi = oracle.qfi();
    MomentTable table = moment_table_from([&](int r, int s) { return oracle.moment(r, s); }, sel.max_k());
    BoundOptions opts;
    opts.max_F = std::max(sel.max_F(), 0);
    opts.max_B = sel.max_B();
    BoundReport report = assemble_bounds(table, opts);

    std::optional<ValueWithError> var;
    if (in.state == "jg") {
        var = ValueWithError{exact_variance(JastrowModel(b.params), b.op), 0.0};
    } else {
        DenseState pure = exact_state(b, in.state);
        var = ValueWithError{spectral_qfi(pure, b.op) / 4.0, 0.0};
    }
    Overlays o = overlays_for(b, var);

    std::vector<std::string> c = {std::to_string(L), csv_number(b.params.alpha), to_string(b.channel.kind),
                                  csv_number(b.channel.p), to_string(b.op.kind), in.state, csv_number(qfi),
                                  csv_number(oracle.effective_rank()), csv_number(var->value)};
    append_bounds(c, &report, sel, false);
    for (double v : {sql_threshold(L), witness_of(selected_values(report, sel), L), o.ghz_dephasing, o.ghz_damping,
                     o.dephasing_ox, o.depolarizing, o.dicke}) {
        c.push_back(csv_number(v));
    }
    c.push_back("ok");
    RowResult r;
    r.cells = std::move(c);
    r.summary = json{{"qfi", qfi}, {"effective_rank", oracle.effective_rank()}};
    return r;
}

std::string exact_key(const ParamBundle &b, const ExactInputs &in) {
    return row_key("exact", b, ";state=" + in.state + ";orders=" + parse_orders(in.orders, b.channel.kind).str());
}

std::vector<std::string> failed_exact_row(const ParamBundle &b, const ExactInputs &in, const std::string &status) {
    std::vector<std::string> c = {std::to_string(b.params.L), csv_number(b.params.alpha), to_string(b.channel.kind),
                                  csv_number(b.channel.p), to_string(b.op.kind), in.state, "nan", "nan", "nan"};
    append_bounds(c, nullptr, parse_orders(in.orders, b.channel.kind), false);
    for (int i = 0; i < 7; i++) {
        c.push_back("nan");
    }
    c.push_back(status);
    return c;
}

// ---------------------------------------------------------------- table output

class TableWriter {
   public:
    TableWriter(const std::string &path, std::vector<std::string> header, std::ostream &fallback, bool resume)
        : header_(std::move(header)) {
        if (path.empty()) {
            stream_ = &fallback;
            *stream_ << join(header_) << "\n";
            return;
        }
        std::vector<std::string> kept;
        if (resume && std::filesystem::exists(path)) {
            std::ifstream in(path);
            std::string line;
            std::getline(in, line);
            if (line != join(header_)) {
                throw Error(ErrorCode::BadConfig, "existing " + path + " has different columns; refusing to resume");
            }
            size_t status_col = header_.size() - 2;
            while (std::getline(in, line)) {
                std::vector<std::string> cells;
                std::stringstream ss(line);
                std::string cell;
                while (std::getline(ss, cell, ',')) {
                    cells.push_back(cell);
                }
                if (cells.size() == header_.size() && cells[status_col] == "ok") {
                    done_.insert(cells.back());
                    kept.push_back(line);
                }
            }
        }
        file_.open(path, std::ios::trunc);
        if (!file_) {
            throw Error(ErrorCode::Io, "cannot write " + path);
        }
        stream_ = &file_;
        *stream_ << join(header_) << "\n";
        for (const auto &line : kept) {
            *stream_ << line << "\n";
        }
        stream_->flush();
    }

    bool done(const std::string &key) const {
        return done_.count(key) > 0;
    }
    size_t resumed() const {
        return done_.size();
    }

    void write(std::vector<std::string> cells, const std::string &key) {
        cells.push_back(key);
        *stream_ << join(cells) << "\n";
        stream_->flush();
    }

   private:
    std::vector<std::string> header_;
    std::ofstream file_;
    std::ostream *stream_ = nullptr;
    std::set<std::string> done_;
};

// ---------------------------------------------------------------- options

void add_common(CLI::App *cmd, CommonArgs &a, bool grid) {
    std::string suffix = grid ? " (value, list a,b,c or start:stop:step)" : "";
    cmd->add_option("--config", a.config, "parameter bundle JSON; explicit flags override it");
    cmd->add_option("--L", a.L, "number of sites" + suffix);
    cmd->add_option("--alpha", a.alpha, "Jastrow exponent" + suffix);
    cmd->add_option("--p", a.p, "channel strength" + suffix);
    cmd->add_option("--channel", a.channel, "dephasing | damping | depolarizing");
    cmd->add_option("--operator", a.op, "oz | ox | ostar | custom");
    cmd->add_option("--coefficients", a.coefficients, "comma separated weights for --operator custom");
    cmd->add_option("--seed", a.seed, "master seed");
    cmd->add_option("--threads", a.threads, "worker threads (default QFI_LAB_THREADS or all cores)");
    cmd->add_option("--out", a.out, "output path");
}

void add_sampling(CLI::App *cmd, SamplingArgs &s, bool with_pool) {
    cmd->add_option("--samples", s.samples, "total retained samples, e.g. 1e6");
    cmd->add_option("--chains", s.chains, "independent Markov chains");
    cmd->add_option("--blocks", s.blocks, "blocks per chain for error estimates");
    cmd->add_option("--burn-in", s.burn_in, "burn-in steps (default 100 L)");
    cmd->add_option("--thin", s.thin, "thinning stride (default L)");
    if (with_pool) {
        cmd->add_option("--pool", s.pool, "read samples from a pool file instead of sampling");
    }
}

void add_bound_opts(CLI::App *cmd, BoundArgs &b) {
    cmd->add_option("--tuples", b.tuples, "bootstrap tuples per moment, e.g. 1e6");
    cmd->add_option("--bounds", b.orders, "orders to report, e.g. F1,F3,B1 (default depends on channel)");
    cmd->add_option("--bootstrap", b.bootstrap, "bootstrap replicas for bound errors");
    cmd->add_option("--condition-limit", b.condition_limit, "Hankel condition number above which B_n is unstable");
}

SamplePool load_pool(const std::string &path, const SystemParams &expected, int blocks, bool check) {
    SamplePool pool = read_pool(path, blocks);
    if (check && (pool.params().L != expected.L || pool.params().alpha != expected.alpha)) {
        throw Error(ErrorCode::BadConfig, "pool was sampled at L=" + std::to_string(pool.params().L) +
                                              ", alpha=" + csv_number(pool.params().alpha) +
                                              " which differs from the requested parameters");
    }
    return pool;
}

}  // namespace

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::SectorTooLarge:
        case ErrorCode::SpaceTooLarge:
            return kExitResource;
        case ErrorCode::SingularMatrix:
        case ErrorCode::NonPositiveValues:
        case ErrorCode::DegenerateP:
        case ErrorCode::ProfileSetEmpty:
            return kExitNumerical;
        default:
            return kExitValidation;
    }
}

std::vector<double> parse_grid(const std::string &spec) {
    if (spec.find(':') == std::string::npos) {
        auto v = parse_list(spec, "grid value");
        if (v.empty()) {
            throw Error(ErrorCode::BadConfig, "empty grid");
        }
        return v;
    }
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':')) {
        parts.push_back(item);
    }
    if (parts.size() != 3) {
        throw Error(ErrorCode::BadConfig, "grid must be start:stop:step, got " + spec);
    }
    double start = parse_real(parts[0], "grid start");
    double stop = parse_real(parts[1], "grid stop");
    double step = parse_real(parts[2], "grid step");
    if (!(step > 0.0) || stop < start) {
        throw Error(ErrorCode::BadConfig, "grid needs step > 0 and stop >= start: " + spec);
    }
    std::vector<double> v;
    long n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long i = 0; i <= n; i++) {
        v.push_back(start + static_cast<double>(i) * step);
    }
    return v;
}

std::string csv_number(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"qfi_lab: quantum Fisher information bounds for Jastrow-Gutzwiller states"};
    app.require_subcommand(1);

    CommonArgs common;
    SamplingArgs sampling;
    BoundArgs bound_args;
    ExactInputs exact_in;
    std::string diagnostics;
    std::string rmax_text;
    std::string scan_mode = "mc";

    auto *sample = app.add_subcommand("sample", "run the Metropolis sampler and dump a sample pool");
    add_common(sample, common, false);
    add_sampling(sample, sampling, false);
    sample->add_option("--diagnostics", diagnostics, "diagnostics CSV (default <out>.diag.csv)");

    auto *bounds = app.add_subcommand("bounds", "Monte Carlo moments and QFI lower bounds");
    add_common(bounds, common, false);
    add_sampling(bounds, sampling, true);
    add_bound_opts(bounds, bound_args);

    auto *exact = app.add_subcommand("exact", "exact spectral QFI and moments for small L");
    add_common(exact, common, false);
    exact->add_option("--state", exact_in.state, "jg | ghz | dicke");
    exact->add_option("--bounds", exact_in.orders, "orders to report (default depends on channel)");

    auto *scan = app.add_subcommand("scan", "bounds over a grid in L, alpha and p; resumable");
    add_common(scan, common, true);
    add_sampling(scan, sampling, false);
    add_bound_opts(scan, bound_args);
    scan->add_option("--mode", scan_mode, "mc | exact");
    scan->add_option("--state", exact_in.state, "state for --mode exact: jg | ghz | dicke");

    auto *corr = app.add_subcommand("correlations", "ZZ and XX correlators with power-law fits");
    add_common(corr, common, false);
    add_sampling(corr, sampling, true);
    corr->add_option("--rmax", rmax_text, "largest distance (default L/2)");

    std::vector<std::string> argv_store = {"qfi_lab"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char *> argv;
    for (auto &s : argv_store) {
        argv.push_back(s.data());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp &e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    auto t0 = std::chrono::steady_clock::now();
    try {
        int threads = resolve_threads(common.threads);
        if (common.threads < 0) {
            throw Error(ErrorCode::BadConfig, "--threads must be non-negative");
        }
        McInputs mc{sampling, bound_args, common.threads};

        if (sample->parsed()) {
            ParamBundle base = base_bundle(common, *sample);
            ParamBundle b = bundle_at(base, grid_points(common, *sample, base, false)[0]);
            SamplerConfig cfg = sampler_config(sampling, b.seed, common.threads);
            std::string path = common.out.empty() ? "pool.bin" : common.out;
            std::string diag = diagnostics.empty() ? path + ".diag.csv" : diagnostics;
            JastrowModel model(b.params);
            SamplePool pool = run_chain(model, cfg);
            write_pool(path, pool);
            write_diagnostics_csv(diag, pool);
            double tv = b.params.L <= 20 ? tv_distance(pool, model) : kNan;
            json summary = {{"pool", path},
                            {"diagnostics", diag},
                            {"samples", pool.size()},
                            {"acceptance_rate", pool.acceptance_rate},
                            {"tv", tv <= 1.0 ? json(tv) : json(nullptr)}};
            json m = manifest_base("sample", args, threads);
            m["params"] = to_json(b);
            m["sampler"] = sampler_json(resolve_sampler_config(cfg, b.params.L));
            m["seed"] = b.seed;
            m["result"] = summary;
            m["wall_time_s"] = seconds_since(t0);
            write_manifest(path, m);
            write_manifest(diag, m);
            out << summary.dump() << "\n";
            return kExitOk;
        }

        if (bounds->parsed()) {
            ParamBundle base = base_bundle(common, *bounds);
            ParamBundle b = bundle_at(base, grid_points(common, *bounds, base, false)[0]);
            std::optional<SamplePool> pool;
            if (!sampling.pool.empty()) {
                pool = load_pool(sampling.pool, b.params, sampling.blocks, true);
            }
            RowResult row = bounds_row(b, mc, pool ? &*pool : nullptr);
            TableWriter writer(common.out, bounds_header(), out, false);
            writer.write(row.cells, bounds_key(b, mc));
            if (!common.out.empty()) {
                json m = manifest_base("bounds", args, threads);
                m["params"] = to_json(b);
                m["sampler"] = sampler_json(sampler_config(sampling, b.seed, common.threads));
                if (pool) {
                    m["pool"] = sampling.pool;
                }
                m["seed"] = b.seed;
                m["result"] = row.summary;
                m["wall_time_s"] = seconds_since(t0);
                write_manifest(common.out, m);
            }
            return kExitOk;
        }

        if (exact->parsed()) {
            ParamBundle base = base_bundle(common, *exact);
            ParamBundle b = bundle_at(base, grid_points(common, *exact, base, false)[0]);
            RowResult row = exact_row(b, exact_in);
            TableWriter writer(common.out, exact_header(), out, false);
            writer.write(row.cells, exact_key(b, exact_in));
            if (!common.out.empty()) {
                json m = manifest_base("exact", args, threads);
                m["params"] = to_json(b);
                m["seed"] = b.seed;
                m["result"] = row.summary;
                m["wall_time_s"] = seconds_since(t0);
                write_manifest(common.out, m);
            }
            return kExitOk;
        }

        if (scan->parsed()) {
            if (scan_mode != "mc" && scan_mode != "exact") {
                throw Error(ErrorCode::BadConfig, "--mode must be mc or exact");
            }
            bool is_exact = scan_mode == "exact";
            ParamBundle base = base_bundle(common, *scan);
            auto points = grid_points(common, *scan, base, true);
            std::vector<ParamBundle> bundles;
            for (const auto &pt : points) {
                bundles.push_back(bundle_at(base, pt));
            }
            TableWriter writer(common.out, is_exact ? exact_header() : bounds_header(), out, true);
            int computed = 0, failed = 0;
            for (const auto &b : bundles) {
                std::string key = is_exact ? exact_key(b, exact_in) : bounds_key(b, mc);
                if (writer.done(key)) {
                    continue;
                }
                try {
                    RowResult row = is_exact ? exact_row(b, exact_in) : bounds_row(b, mc, nullptr);
                    writer.write(row.cells, key);
                    computed++;
                } catch (const Error &e) {
                    std::string status = error_code_name(e.code());
                    writer.write(is_exact ? failed_exact_row(b, exact_in, status) : failed_bounds_row(b, mc, status),
                                 key);
                    err << "row " << key << ": " << e.what() << "\n";
                    failed++;
                }
            }
            if (!common.out.empty()) {
                json m = manifest_base("scan", args, threads);
                m["params"] = to_json(base);
                for (const char *k : {"L", "N", "alpha"}) {
                    m["params"].erase(k);
                }
                m["params"]["channel"].erase("p");
                m["grid"] = {{"L", common.L}, {"alpha", common.alpha}, {"p", common.p}};
                m["mode"] = scan_mode;
                if (!is_exact) {
                    m["sampler"] = sampler_json(sampler_config(sampling, base.seed, common.threads));
                }
                m["seed"] = base.seed;
                m["result"] = {{"rows", bundles.size()},
                               {"computed", computed},
                               {"failed", failed},
                               {"resumed", writer.resumed()}};
                m["wall_time_s"] = seconds_since(t0);
                write_manifest(common.out, m);
            }
            return failed ? kExitNumerical : kExitOk;
        }

        if (corr->parsed()) {
            ParamBundle base = base_bundle(common, *corr);
            ParamBundle b = bundle_at(base, grid_points(common, *corr, base, false)[0]);
            const int L = b.params.L;
            int rmax = rmax_text.empty() ? L / 2 : static_cast<int>(parse_count(rmax_text, "--rmax"));
            if (rmax > L / 2) {
                throw Error(ErrorCode::BadConfig, "--rmax cannot exceed L/2");
            }
            JastrowModel model(b.params);
            SamplePool pool = sampling.pool.empty()
                                  ? run_chain(model, sampler_config(sampling, b.seed, common.threads))
                                  : load_pool(sampling.pool, b.params, sampling.blocks, true);
            auto zz = correlator_zz(pool, model, rmax, common.threads);
            auto xx = correlator_xx(pool, model, rmax, common.threads);

            TableWriter writer(common.out, {"r", "corr_zz", "corr_zz_err", "corr_xx", "corr_xx_err", "status",
                                            "row_key"},
                               out, false);
            std::vector<int> rs;
            std::vector<double> vz, ez, vx, ex;
            for (int r = 1; r <= rmax; r++) {
                const auto &z = zz[r - 1];
                const auto &x = xx[r - 1];
                rs.push_back(r);
                vz.push_back(z.value);
                ez.push_back(z.error);
                vx.push_back(x.value);
                ex.push_back(x.error);
                writer.write({std::to_string(r), csv_number(z.value), csv_number(z.error), csv_number(x.value),
                              csv_number(x.error), "ok"},
                             row_key("correlations", b, ";r=" + std::to_string(r)));
            }
            json fits;
            std::string fit_error;
            auto fit = [&](const std::vector<double> &v, const std::vector<double> &e, bool odd) {
                FitOptions opts;
                opts.r_min = 2;
                opts.odd_only = odd;
                opts.chord_L = L;
                opts.errors = e;
                try {
                    PowerLawFit f = fit_power_law(rs, v, true, opts);
                    return json{{"exponent", f.exponent},
                                {"exponent_err", f.stderr_exponent},
                                {"prefactor", f.prefactor},
                                {"points", f.points}};
                } catch (const Error &ex_) {
                    if (ex_.code() == ErrorCode::NonPositiveValues && fit_error.empty()) {
                        fit_error = ex_.what();
                    }
                    return json{{"error", ex_.what()}, {"code", error_code_name(ex_.code())}};
                }
            };
            fits["zz"] = fit(vz, ez, true);
            fits["xx"] = fit(vx, ex, false);
            if (!common.out.empty()) {
                json m = manifest_base("correlations", args, threads);
                m["params"] = to_json(b);
                m["sampler"] = sampler_json(sampler_config(sampling, b.seed, common.threads));
                m["seed"] = b.seed;
                m["result"] = {{"fits", fits}, {"acceptance_rate", pool.acceptance_rate}};
                m["wall_time_s"] = seconds_since(t0);
                write_manifest(common.out, m);
                out << fits.dump() << "\n";
            } else {
                err << fits.dump() << "\n";
            }
            if (!fit_error.empty()) {
                err << "fit failed: " << fit_error << "\n";
                return kExitNumerical;
            }
            return kExitOk;
        }
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitValidation;
}

}  // namespace qfi
