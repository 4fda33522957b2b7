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


// Command-line front end: capacity sweeps, single-state solves and
// solver-versus-oracle verification.

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "crfdma.hpp"

namespace {

using namespace crfdma;

constexpr int kExitOk = 0;
constexpr int kExitSolver = 1;
constexpr int kExitUsage = 2;

int exit_code_for(ErrorCode c) {
    switch (c) {
    case ErrorCode::DimensionMismatch:
    case ErrorCode::InvalidArgument:
    case ErrorCode::UnsupportedCombination: return kExitUsage;
    default: return kExitSolver;
    }
}

std::vector<double> parse_list(const std::string& what, const std::string& text) {
    std::vector<double> out;
    for (const auto& item : detail::split_list(text)) out.push_back(detail::parse_double(what, item));
    return out;
}

std::string fmt_vec(const std::vector<double>& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_g12(v[i]);
    return s + ")";
}

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> states;
    std::optional<std::size_t> users;
    std::string output;
    std::string combinations;
    bool bits = false;
};

void write_output(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
    out << text;
}

int run_sweep_cmd(const CommonFlags& f) {
    ExperimentConfig cfg = load_config(f.config);
    if (f.seed) cfg.fading.seed = *f.seed;
    if (f.states) cfg.fading.n_states = *f.states;
    if (f.users) cfg.fading.n_users = *f.users;
    if (!f.combinations.empty()) cfg.combinations = detail::split_list(f.combinations);
    const auto rows = run_sweep(cfg);
    for (const auto& r : rows)
        if (!r.point.converged)
            std::cerr << "warning: " << r.combination << " at " << to_string(r.var) << "=" << format_g12(r.value)
                      << " stopped after " << r.point.iterations << " iterations without meeting the tolerance\n";
    write_output(f.output, to_csv(rows));
    if (!f.output.empty()) {
        const char* unit = f.bits ? "bits*Hz" : "nats*Hz";
        std::printf("%-8s %-22s %16s\n", to_string(cfg.sweep_var), "combination", unit);
        for (const auto& r : rows) {
            const double c = f.bits ? r.capacity() / std::log(2.0) : r.capacity();
            std::printf("%-8s %-22s %16.9f\n", format_g12(r.value).c_str(), r.combination.c_str(), c);
        }
    }
    return kExitOk;
}

struct SolveFlags {
    std::string h, g, state_file, combination = "ptp+pip", lambda;
    double p_pk = 10.0, p_av = 10.0, q_pk = 1.0, q_av = 1.0, w = 1.0, mu = 0.0;
};

void read_state_file(SolveFlags& s) {
    std::ifstream in(s.state_file);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open state file " + s.state_file);
    for (std::string line; std::getline(in, line);) {
        line = detail::trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, "state file lines are h = ... or g = ...");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key == "h")
            s.h = val;
        else if (key == "g")
            s.g = val;
        else
            throw Error(ErrorCode::InvalidArgument, "unknown state file key: " + key);
    }
}

int run_solve_one(SolveFlags s, const CommonFlags& f) {
    if (!s.state_file.empty()) read_state_file(s);
    if (s.h.empty() || s.g.empty()) throw Error(ErrorCode::InvalidArgument, "both --h and --g are required");
    const auto h = parse_list("h", s.h);
    const auto g = parse_list("g", s.g);
    detail::require(h.size() == g.size(), ErrorCode::DimensionMismatch, "h and g must have the same length");
    const FadingState state(h, g);
    const ConstraintSet cs = parse_combination(s.combination, h.size(), s.p_pk, s.p_av, s.q_pk, s.q_av, s.w);
    DualVariables duals;
    duals.lambda = s.lambda.empty() ? std::vector<double>(h.size(), 0.0) : parse_list("lambda", s.lambda);
    detail::require(duals.lambda.size() == h.size(), ErrorCode::DimensionMismatch, "lambda must have one entry per user");
    duals.mu = s.mu;

    const SolveOutcome out = dispatch(state, cs, duals);
    const auto price = price_vector(state, cs, duals);
    const auto w = optimal_bandwidth(state, out.p, cs.bandwidth);
    const double rate = reduced_rate(state, out.p, cs.bandwidth);
    const double scale = f.bits ? 1.0 / std::log(2.0) : 1.0;
    std::printf("combination = %s\n", cs.name().c_str());
    std::printf("case        = %s\n", to_string(out.tag));
    std::printf("p           = %s\n", fmt_vec(out.p).c_str());
    std::printf("w           = %s\n", fmt_vec(w).c_str());
    if (out.pivot) std::printf("k           = %zu\n", *out.pivot);
    if (out.inner_dual) std::printf("inner_dual  = %s\n", format_g12(*out.inner_dual).c_str());
    std::printf("objective   = %s\n", format_g12(subproblem_value(state, out.p, price, cs.bandwidth) * scale).c_str());
    std::printf("rate        = %s %s\n", format_g12(rate * scale).c_str(), f.bits ? "bits*Hz" : "nats*Hz");
    return kExitOk;
}

int run_verify(const CommonFlags& f, bool inject_fault) {
    VerifyOptions opt;
    if (!f.config.empty()) {
        const ExperimentConfig cfg = load_config(f.config);
        opt.seed = cfg.fading.seed;
        opt.n_states = cfg.fading.n_states;
        opt.n_users = cfg.fading.n_users;
        opt.combinations = cfg.combinations;
        opt.p_pk = cfg.p_pk;
        opt.p_av = cfg.p_av;
        opt.q_pk = cfg.q_pk;
        opt.q_av = cfg.q_av;
        opt.bandwidth = cfg.bandwidth;
    }
    if (f.seed) opt.seed = *f.seed;
    if (f.states) opt.n_states = *f.states;
    if (f.users) opt.n_users = *f.users;
    if (!f.combinations.empty()) opt.combinations = detail::split_list(f.combinations);
    opt.inject_fault = inject_fault;

    const VerifyReport rep = run_verification(opt);
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof line, "%-18s %8s %8s %8s %8s %12s\n", "combination", "checked", "oracle", "kkt",
                  "struct", "worst_gap");
    out << line;
    for (const auto& [name, t] : rep.per_combination) {
        std::snprintf(line, sizeof line, "%-18s %8zu %8zu %8zu %8zu %12.3e\n", name.c_str(), t.comparisons,
                      t.oracle_failures, t.kkt_failures, t.structure_failures, t.worst_gap);
        out << line;
    }
    std::snprintf(line, sizeof line, "comparisons=%zu passed=%zu failed=%zu worst_gap=%.3e worst_kkt=%.3e\n",
                  rep.comparisons, rep.comparisons - rep.failures, rep.failures, rep.worst_gap, rep.worst_kkt);
    out << line << (rep.passed() ? "PASS\n" : "FAIL\n");
    write_output(f.output, out.str());
    if (!f.output.empty()) std::cout << out.str();
    return rep.passed() ? kExitOk : kExitSolver;
}

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required) {
    auto* c = cmd->add_option("--config", f.config, "Experiment config file");
    if (config_required) c->required();
    c->check(CLI::ExistingFile);
    cmd->add_option("--seed", f.seed, "RNG seed");
    cmd->add_option("--states", f.states, "Number of fading states");
    cmd->add_option("--users", f.users, "Number of secondary users");
    cmd->add_option("--output", f.output, "Write output to PATH instead of stdout");
    cmd->add_option("--combinations", f.combinations, "Comma-separated list, e.g. ptp+pip,atp+aip");
    cmd->add_flag("--bits", f.bits, "Report capacity in bits*Hz");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"FDMA cognitive-radio bandwidth and power allocation"};
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);

    CommonFlags sweep_flags, solve_common, verify_flags;
    auto* sweep = app.add_subcommand("sweep", "Capacity sweep from a config file, CSV output");
    add_common(sweep, sweep_flags, true);

    SolveFlags solve;
    auto* one = app.add_subcommand("solve-one", "Solve a single fading state");
    one->add_flag("--bits", solve_common.bits, "Report values in bits*Hz");
    one->add_option("--h", solve.h, "Channel gains to the secondary receiver, comma-separated");
    one->add_option("--g", solve.g, "Channel gains to the primary receiver, comma-separated");
    one->add_option("--state-file", solve.state_file, "File with lines h = ... and g = ...")->check(CLI::ExistingFile);
    one->add_option("--combination", solve.combination, "Constraint combination")->capture_default_str();
    one->add_option("--p-pk", solve.p_pk, "Peak transmit power per user")->capture_default_str();
    one->add_option("--p-av", solve.p_av, "Average transmit power per user")->capture_default_str();
    one->add_option("--q-pk", solve.q_pk, "Peak interference power")->capture_default_str();
    one->add_option("--q-av", solve.q_av, "Average interference power")->capture_default_str();
    one->add_option("--w", solve.w, "Total bandwidth")->capture_default_str();
    one->add_option("--lambda", solve.lambda, "Transmit-power prices, comma-separated (default 0)");
    one->add_option("--mu", solve.mu, "Interference price")->capture_default_str();

    bool inject_fault = false;
    auto* verify = app.add_subcommand("verify", "Check solvers against the projected-gradient oracle");
    add_common(verify, verify_flags, false);
    verify->add_flag("--inject-fault", inject_fault, "Perturb solver outputs (test hook)")->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*sweep) return run_sweep_cmd(sweep_flags);
        if (*one) return run_solve_one(solve, solve_common);
        if (*verify) return run_verify(verify_flags, inject_fault);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    }
    return kExitUsage;
}
