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

// Solver-versus-oracle verification over random fading states.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "crfdma/experiment.hpp"
#include "crfdma/fading.hpp"
#include "crfdma/rng.hpp"
#include "crfdma/oracle.hpp"
#include "crfdma/state_solvers.hpp"
#include "crfdma/types.hpp"

namespace crfdma {

/// Structure of the optimum implied by the constraint combination: how many
/// users may sit strictly between zero and their peak, and whether the
/// transmitting users must form a prefix of the ratio order.
inline bool structure_holds(const FadingState& s, const ConstraintSet& cs, const DualVariables& duals,
                            const SolveOutcome& out) {
    const std::size_t n = s.size();
    const double inf = std::numeric_limits<double>::infinity();
    auto peak_of = [&](std::size_t i) { return cs.ptp ? (*cs.ptp)[i] : inf; };
    auto at_zero = [&](std::size_t i) { return out.p[i] <= 1e-12; };
    auto at_peak = [&](std::size_t i) { return cs.ptp && out.p[i] >= peak_of(i) * (1.0 - 1e-12); };
    std::size_t interior = 0, active = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!at_zero(i)) ++active;
        if (!at_zero(i) && !at_peak(i)) ++interior;
    }
    const bool avg = cs.has_average();
    if (!cs.has_ptp() && !cs.has_pip()) return active <= 1; // single water-filling user
    if (cs.has_pip() && (!cs.has_ptp() || avg)) return interior <= 2;

    // Peak-prefix structures: at most one fractional user, and in ratio
    // order every transmitting user above it is at peak, none below.
    if (interior > 1) return false;
    std::vector<double> keys(n);
    const auto price = price_vector(s, cs, duals);
    for (std::size_t i = 0; i < n; ++i) {
        if (cs.has_pip() && !avg)
            keys[i] = s.h(i) / s.g(i);
        else
            keys[i] = price[i] > 0.0 ? s.h(i) / price[i] : inf;
    }
    const RatioOrder order = make_ratio_order(keys);
    bool seen_below_peak = false;
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t u = order.perm[r];
        if (seen_below_peak && !at_zero(u)) return false;
        if (!at_peak(u)) seen_below_peak = true;
    }
    return true;
}

struct VerifyOptions {
    std::uint64_t seed = 42;
    std::size_t n_states = 200;
    std::size_t n_users = 4;
    std::vector<std::string> combinations{"ptp+pip", "ptp+aip", "atp+pip", "atp+aip", "ptp+atp+pip+aip"};
    double p_pk = 10.0;
    double p_av = 10.0;
    double q_pk = 1.0;
    double q_av = 1.0;
    double bandwidth = 1.0;
    double rel_tol = 1e-6;
    /// Test hook: perturb every solver output before checking.
    bool inject_fault = false;
};

struct ComboTally {
    std::size_t comparisons = 0;
    std::size_t oracle_failures = 0;
    std::size_t kkt_failures = 0;
    std::size_t structure_failures = 0;
    double worst_gap = 0.0;
    std::map<std::string, std::size_t> cases;
};

struct VerifyReport {
    std::map<std::string, ComboTally> per_combination;
    std::size_t comparisons = 0;
    std::size_t failures = 0;
    double worst_gap = 0.0;
    double worst_kkt = 0.0;

    bool passed() const { return failures == 0; }
};

/// Relative objective gap, measured against max(1, |oracle|) so that
/// zero-valued optima compare absolutely.
inline double relative_gap(double solver, double oracle) {
    return (oracle - solver) / std::max(1.0, std::abs(oracle));
}

/// Multipliers for a verification draw: lambda_i uniform on [0, 1/2), mu on
/// [0, 1), drawn from the state's own counter stream.
inline DualVariables verification_duals(std::uint64_t seed, std::uint64_t index, std::size_t n) {
    const Philox4x32 gen(seed ^ 0x5DEECE66DULL);
    DualVariables d;
    d.lambda.resize(n);
    for (std::uint32_t i = 0; i <= n; ++i) {
        const auto out = gen({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), i, 7U});
        const double u = to_unit_open(join(out[0], out[1]));
        if (i < n)
            d.lambda[i] = 0.5 * u;
        else
            d.mu = u;
    }
    return d;
}

inline VerifyReport run_verification(const VerifyOptions& opt) {
    detail::require(opt.n_states >= 1, ErrorCode::InvalidArgument, "need at least one state");
    detail::require(opt.n_users >= 1 && opt.n_users <= kOracleMaxUsers, ErrorCode::InvalidArgument,
                    "verification supports 1 to 8 users");
    FadingModel model;
    model.n_users = opt.n_users;
    model.n_states = opt.n_states;
    model.seed = opt.seed;
    const auto states = generate_states(model);

    VerifyReport rep;
    for (const auto& name : opt.combinations) {
        const ConstraintSet cs =
            parse_combination(name, opt.n_users, opt.p_pk, opt.p_av, opt.q_pk, opt.q_av, opt.bandwidth);
        ComboTally& tally = rep.per_combination[cs.name()];
        for (std::size_t t = 0; t < states.size(); ++t) {
            const auto& s = states[t];
            DualVariables duals = verification_duals(opt.seed, t, opt.n_users);
            if (!cs.has_atp()) std::fill(duals.lambda.begin(), duals.lambda.end(), 0.0);
            if (!cs.has_aip()) duals.mu = 0.0;
            SolveOutcome out = dispatch(s, cs, duals);
            if (opt.inject_fault) out.p[t % out.p.size()] += 1e-3;
            ++tally.cases[to_string(out.tag)];

            const OracleProblem prob = oracle_problem_for(s, cs, duals);
            OracleOptions oo;
            oo.seed = opt.seed + t;
            const OracleResult ref = oracle_solve(s, prob, oo);
            const double mine = subproblem_value(s, out.p, prob.price, cs.bandwidth);
            const double gap = std::abs(relative_gap(mine, ref.value));
            const KktReport kkt = kkt_check(s, out, cs, duals);

            ++tally.comparisons;
            tally.worst_gap = std::max(tally.worst_gap, gap);
            rep.worst_kkt = std::max(rep.worst_kkt, kkt.worst_residual);
            bool ok = true;
            if (gap > opt.rel_tol) {
                ++tally.oracle_failures;
                ok = false;
            }
            if (!kkt.passed()) {
                ++tally.kkt_failures;
                ok = false;
            }
            if (!structure_holds(s, cs, duals, out)) {
                ++tally.structure_failures;
                ok = false;
            }
            ++rep.comparisons;
            if (!ok) ++rep.failures;
        }
        rep.worst_gap = std::max(rep.worst_gap, tally.worst_gap);
    }
    return rep;
}

} // namespace crfdma
