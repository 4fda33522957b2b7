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

// Ergodic-capacity estimation over a sample of fading states.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "crfdma/bandwidth.hpp"
#include "crfdma/dual_outer.hpp"
#include "crfdma/rate.hpp"
#include "crfdma/state_solvers.hpp"
#include "crfdma/types.hpp"

namespace crfdma {

/// One point of a capacity curve.
struct ExperimentPoint {
    ConstraintSet cs;
    double capacity_obpa = 0.0;
    std::optional<double> capacity_ebpa;
    std::optional<DualVariables> duals;
    /// Lowest sample dual value seen; an upper bound on the optimum.
    std::optional<double> dual_bound;
    CapacityReport diagnostics;
    int iterations = 0;
    bool converged = true;
};

/// Sample-mean capacity and constraint slacks of a given per-state power
/// allocation, with bandwidth split optimally in every state.
inline CapacityReport capacity_report(std::span<const FadingState> states, const ConstraintSet& cs,
                                      std::span<const std::vector<double>> powers) {
    detail::require(powers.size() == states.size(), ErrorCode::DimensionMismatch, "one power row per state");
    const std::size_t n = states.front().size();
    const std::size_t m = states.size();
    std::vector<double> rate(m), interference(m);
    std::vector<std::vector<double>> cols(n, std::vector<double>(m));
    double min_bw = std::numeric_limits<double>::infinity();
    double min_ptp = std::numeric_limits<double>::infinity();
    double min_pip = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < m; ++t) {
        const auto& s = states[t];
        const auto& p = powers[t];
        Allocation a{p, optimal_bandwidth(s, p, cs.bandwidth)};
        rate[t] = reduced_rate(s, p, cs.bandwidth);
        const SlackReport slack = check_feasible(s, a, cs);
        min_bw = std::min(min_bw, slack.bandwidth);
        if (slack.ptp)
            for (double x : *slack.ptp) min_ptp = std::min(min_ptp, x);
        if (slack.pip) min_pip = std::min(min_pip, *slack.pip);
        double q = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            cols[i][t] = p[i];
            q += s.g(i) * p[i];
        }
        interference[t] = q;
    }
    const double inv = 1.0 / static_cast<double>(m);
    CapacityReport r;
    r.sum_ergodic_capacity = detail::pairwise_sum(rate) * inv;
    r.avg_interference = detail::pairwise_sum(interference) * inv;
    r.avg_power.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.avg_power[i] = detail::pairwise_sum(cols[i]) * inv;
    r.per_constraint_slack["bandwidth"] = min_bw;
    if (cs.ptp) r.per_constraint_slack["ptp"] = min_ptp;
    if (cs.pip) r.per_constraint_slack["pip"] = min_pip;
    if (cs.atp) {
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) worst = std::min(worst, (*cs.atp)[i] - r.avg_power[i]);
        r.per_constraint_slack["atp"] = worst;
    }
    if (cs.aip) r.per_constraint_slack["aip"] = *cs.aip - r.avg_interference;
    return r;
}

/// Solves every state at fixed multipliers and reports the sample-mean
/// capacity. Multipliers are required exactly when the combination has an
/// average constraint.
inline ExperimentPoint estimate_capacity(std::span<const FadingState> states, const ConstraintSet& cs,
                                         const std::optional<DualVariables>& duals = std::nullopt) {
    detail::check_sample(states, cs);
    detail::require(duals.has_value() == cs.has_average(), ErrorCode::InvalidArgument,
                    "multipliers must be given exactly for average constraints");
    const DualVariables d = duals.value_or(DualVariables{});
    std::vector<std::vector<double>> powers;
    powers.reserve(states.size());
    for (const auto& s : states) powers.push_back(dispatch(s, cs, d).p);
    ExperimentPoint pt;
    pt.cs = cs;
    pt.diagnostics = capacity_report(states, cs, powers);
    pt.capacity_obpa = pt.diagnostics.sum_ergodic_capacity;
    pt.duals = duals;
    return pt;
}

/// Equal bandwidth W/N for every user, and equal share of the peak
/// interference budget: p_i = min(Ppk_i, Qpk / (N g_i)). Only per-state
/// combinations are supported. The returned point carries the optimal
/// capacity on the same sample next to the baseline (NaN if a state has tied
/// ratios, where the optimal solvers are undefined); diagnostics describe
/// the baseline allocation.
inline ExperimentPoint ebpa_baseline(std::span<const FadingState> states, const ConstraintSet& cs) {
    detail::check_sample(states, cs);
    detail::require(!cs.has_average() && (cs.has_ptp() || cs.has_pip()), ErrorCode::UnsupportedCombination,
                    "equal allocation baseline needs per-state constraints only");
    const std::size_t n = states.front().size();
    std::vector<double> rate(states.size());
    std::vector<std::vector<double>> powers;
    powers.reserve(states.size());
    for (std::size_t t = 0; t < states.size(); ++t) {
        const auto& s = states[t];
        Allocation a;
        a.w.assign(n, cs.bandwidth / static_cast<double>(n));
        a.p.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            double p = std::numeric_limits<double>::infinity();
            if (cs.ptp) p = std::min(p, (*cs.ptp)[i]);
            if (cs.pip) p = std::min(p, *cs.pip / (static_cast<double>(n) * s.g(i)));
            a.p[i] = p;
        }
        rate[t] = state_rate(s, a);
        powers.push_back(std::move(a.p));
    }
    ExperimentPoint pt;
    pt.cs = cs;
    pt.capacity_obpa = std::numeric_limits<double>::quiet_NaN();
    try {
        pt.capacity_obpa = estimate_capacity(states, cs).capacity_obpa;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateState) throw;
    }
    pt.diagnostics = capacity_report(states, cs, powers);
    // capacity_report assumes the optimal split; the baseline uses equal shares
    pt.diagnostics.sum_ergodic_capacity = detail::pairwise_sum(rate) / static_cast<double>(states.size());
    pt.capacity_ebpa = pt.diagnostics.sum_ergodic_capacity;
    return pt;
}

/// Optimal capacity for any combination: direct per-state solve when all
/// constraints are per-state, otherwise a dual solve with averaged primal
/// recovery.
inline ExperimentPoint solve_point(std::span<const FadingState> states, const ConstraintSet& cs,
                                   const SubgradientConfig& config = {}) {
    if (!cs.has_average()) return estimate_capacity(states, cs);
    const DualSolveResult dual = solve_dual(states, cs, config);
    ExperimentPoint pt;
    pt.cs = cs;
    pt.diagnostics = capacity_report(states, cs, dual.allocation);
    pt.capacity_obpa = pt.diagnostics.sum_ergodic_capacity;
    pt.duals = dual.duals;
    pt.dual_bound = dual.dual_value;
    pt.iterations = dual.iterations;
    pt.converged = dual.converged;
    return pt;
}

} // namespace crfdma
