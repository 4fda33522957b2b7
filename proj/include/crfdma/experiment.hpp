/*
   Copyright 2026 The crfdma Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

// Experiment configuration and capacity sweeps.
//
// Config schema (one key per line, '#' starts a comment):
//
//   users = 4            states = 1000        seed = 1
//   variance = 1         w = 1
//   p_pk = 10            p_av = 10            q_pk = 1         q_av = 1
//   combinations = ptp+pip, ptp+aip
//   ebpa = false         step = 0.3           max_iters = 2000  tol = 1e-3
//
//   [sweep]
//   var = p_pk           range = 1:1:10

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "crfdma/fading.hpp"
#include "crfdma/montecarlo.hpp"
#include "crfdma/types.hpp"

namespace crfdma {

inline ConstraintSet parse_combination(const std::string& name, std::size_t n_users, double p_pk, double p_av,
                                       double q_pk, double q_av, double bandwidth) {
    ConstraintSet cs;
    cs.bandwidth = bandwidth;
    std::size_t pos = 0;
    detail::require(!name.empty(), ErrorCode::InvalidArgument, "empty combination name");
    while (pos <= name.size()) {
        const std::size_t next = std::min(name.find('+', pos), name.size());
        const std::string tok = name.substr(pos, next - pos);
        bool dup = false;
        if (tok == "ptp") {
            dup = cs.has_ptp();
            cs.ptp = std::vector<double>(n_users, p_pk);
        } else if (tok == "atp") {
            dup = cs.has_atp();
            cs.atp = std::vector<double>(n_users, p_av);
        } else if (tok == "pip") {
            dup = cs.has_pip();
            cs.pip = q_pk;
        } else if (tok == "aip") {
            dup = cs.has_aip();
            cs.aip = q_av;
        } else {
            throw Error(ErrorCode::InvalidArgument, "unknown combination name: " + name);
        }
        detail::require(!dup, ErrorCode::InvalidArgument, "repeated constraint in combination name");
        pos = next + 1;
    }
    cs.validate(n_users);
    return cs;
}

enum class SweepVar { PPk, PAv, QPk, QAv, W };

inline const char* to_string(SweepVar v) {
    switch (v) {
    case SweepVar::PPk: return "p_pk";
    case SweepVar::PAv: return "p_av";
    case SweepVar::QPk: return "q_pk";
    case SweepVar::QAv: return "q_av";
    case SweepVar::W: return "w";
    }
    return "?";
}

struct ExperimentConfig {
    FadingModel fading;
    double bandwidth = 1.0;
    double p_pk = 10.0;
    double p_av = 10.0;
    double q_pk = 1.0;
    double q_av = 1.0;
    std::vector<std::string> combinations{"ptp+pip"};
    bool ebpa = false;
    SubgradientConfig subgradient;
    SweepVar sweep_var = SweepVar::PPk;
    double range_start = 10.0;
    double range_step = 1.0;
    double range_stop = 10.0;

    std::vector<double> sweep_values() const {
        detail::require(range_step > 0.0 && range_stop >= range_start, ErrorCode::InvalidArgument,
                        "range must be start:step:stop with step > 0 and stop >= start");
        const auto count = static_cast<std::size_t>(std::floor((range_stop - range_start) / range_step + 1e-9)) + 1;
        std::vector<double> v(count);
        for (std::size_t i = 0; i < count; ++i) v[i] = range_start + static_cast<double>(i) * range_step;
        return v;
    }

    ConstraintSet constraints_at(const std::string& combination, double value) const {
        double ppk = p_pk, pav = p_av, qpk = q_pk, qav = q_av, w = bandwidth;
        switch (sweep_var) {
        case SweepVar::PPk: ppk = value; break;
        case SweepVar::PAv: pav = value; break;
        case SweepVar::QPk: qpk = value; break;
        case SweepVar::QAv: qav = value; break;
        case SweepVar::W: w = value; break;
        }
        return parse_combination(combination, fading.n_users, ppk, pav, qpk, qav, w);
    }

    void validate() const {
        fading.validate();
        subgradient.validate();
        detail::require(!combinations.empty(), ErrorCode::InvalidArgument, "no combinations given");
        for (const auto& c : combinations) (void)constraints_at(c, sweep_values().front());
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || !std::isfinite(x))
        throw Error(ErrorCode::InvalidArgument, "bad number for '" + key + "': " + v);
    return x;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    unsigned long long x = 0;
    try {
        if (!v.empty() && v[0] != '-') x = std::stoull(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) throw Error(ErrorCode::InvalidArgument, "bad integer for '" + key + "': " + v);
    return x;
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

} // namespace detail

inline SweepVar parse_sweep_var(const std::string& v) {
    for (SweepVar s : {SweepVar::PPk, SweepVar::PAv, SweepVar::QPk, SweepVar::QAv, SweepVar::W})
        if (v == to_string(s)) return s;
    throw Error(ErrorCode::InvalidArgument, "unknown sweep variable: " + v);
}

inline ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        if (line.front() == '[') {
            detail::require(line.back() == ']', ErrorCode::InvalidArgument, "unterminated section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section != "sweep") throw Error(ErrorCode::InvalidArgument, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (section == "sweep") {
            if (key == "var") {
                cfg.sweep_var = parse_sweep_var(val);
            } else if (key == "range") {
                const auto a = val.find(':');
                const auto b = a == std::string::npos ? a : val.find(':', a + 1);
                if (b == std::string::npos) throw Error(ErrorCode::InvalidArgument, "range must be start:step:stop");
                cfg.range_start = detail::parse_double(key, detail::trim(val.substr(0, a)));
                cfg.range_step = detail::parse_double(key, detail::trim(val.substr(a + 1, b - a - 1)));
                cfg.range_stop = detail::parse_double(key, detail::trim(val.substr(b + 1)));
            } else {
                throw Error(ErrorCode::InvalidArgument, "unknown sweep key: " + key);
            }
            continue;
        }
        if (key == "users") cfg.fading.n_users = detail::parse_u64(key, val);
        else if (key == "states") cfg.fading.n_states = detail::parse_u64(key, val);
        else if (key == "seed") cfg.fading.seed = detail::parse_u64(key, val);
        else if (key == "variance") cfg.fading.variance = detail::parse_double(key, val);
        else if (key == "w") cfg.bandwidth = detail::parse_double(key, val);
        else if (key == "p_pk") cfg.p_pk = detail::parse_double(key, val);
        else if (key == "p_av") cfg.p_av = detail::parse_double(key, val);
        else if (key == "q_pk") cfg.q_pk = detail::parse_double(key, val);
        else if (key == "q_av") cfg.q_av = detail::parse_double(key, val);
        else if (key == "combinations") cfg.combinations = detail::split_list(val);
        else if (key == "ebpa") {
            if (val != "true" && val != "false") throw Error(ErrorCode::InvalidArgument, "ebpa must be true or false");
            cfg.ebpa = val == "true";
        } else if (key == "step") cfg.subgradient.step = detail::parse_double(key, val);
        else if (key == "max_iters") cfg.subgradient.max_iters = static_cast<int>(detail::parse_u64(key, val));
        else if (key == "tol") cfg.subgradient.tol_gap = detail::parse_double(key, val);
        else throw Error(ErrorCode::InvalidArgument, "unknown config key: " + key);
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open config: " + path);
    return parse_config(in);
}

struct SweepRow {
    SweepVar var;
    double value;
    std::string combination;
    ExperimentPoint point;
    bool ebpa;
    std::uint64_t seed;

    double capacity() const { return ebpa ? *point.capacity_ebpa : point.capacity_obpa; }
};

/// Largest relative excess of an average power over its limit, 0 if none.
inline double max_atp_violation(const ExperimentPoint& pt) {
    if (!pt.cs.atp) return 0.0;
    double v = 0.0;
    for (std::size_t i = 0; i < pt.cs.atp->size(); ++i)
        v = std::max(v, (pt.diagnostics.avg_power[i] - (*pt.cs.atp)[i]) / (*pt.cs.atp)[i]);
    return v;
}

/// Points are computed on one common sample, so curves differ only through
/// the limits.
inline std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto states = generate_states(cfg.fading);
    std::vector<SweepRow> rows;
    SubgradientConfig sub = cfg.subgradient;
    sub.seed = cfg.fading.seed;
    for (double value : cfg.sweep_values()) {
        for (const auto& combo : cfg.combinations) {
            const ConstraintSet cs = cfg.constraints_at(combo, value);
            rows.push_back({cfg.sweep_var, value, cs.name(), solve_point(states, cs, sub), false, cfg.fading.seed});
            if (cfg.ebpa && !cs.has_average())
                rows.push_back({cfg.sweep_var, value, "ebpa:" + cs.name(), ebpa_baseline(states, cs), true,
                                cfg.fading.seed});
        }
    }
    return rows;
}

inline std::string format_g12(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

inline constexpr const char* kCsvHeader =
    "sweep_var,value,combination,capacity_nats,capacity_bits,avg_interference,max_atp_violation,dual_mu,"
    "iterations,seed";

inline std::string to_csv(const std::vector<SweepRow>& rows) {
    std::string out = std::string(kCsvHeader) + "\n";
    for (const auto& r : rows) {
        const double c = r.capacity();
        const double mu = r.point.duals ? r.point.duals->mu : 0.0;
        out += std::string(to_string(r.var)) + "," + format_g12(r.value) + "," + r.combination + "," +
               format_g12(c) + "," + format_g12(c / std::log(2.0)) + "," +
               format_g12(r.point.diagnostics.avg_interference) + "," + format_g12(max_atp_violation(r.point)) +
               "," + format_g12(mu) + "," + std::to_string(r.point.iterations) + "," + std::to_string(r.seed) +
               "\n";
    }
    return out;
}

} // namespace crfdma
