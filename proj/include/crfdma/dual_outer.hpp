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

// Outer dual problem for combinations with average constraints.
//
// The expectation over fading is replaced by the mean over a fixed sample
// of states. The multipliers (lambda, mu) are driven by projected
// subgradient steps; the primal allocation is recovered by averaging the
// per-state solutions over a window of recent iterates (restarted at every
// power of two). Averaging is what splits power between users whose ratio
// keys tie at the dual optimum of the sample problem, which a single
// iterate cannot do.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "crfdma/rate.hpp"
#include "crfdma/state_solvers.hpp"
#include "crfdma/types.hpp"

namespace crfdma {

enum class StepRule { Constant, Diminishing };

struct SubgradientConfig {
    StepRule step_rule = StepRule::Diminishing;
    /// Step constant c in normalized multiplier units (lambda_i * Pav_i,
    /// mu * Qav); step t is c or c / sqrt(t).
    double step = 0.3;
    int max_iters = 2000;
    double tol_gap = 1e-3;
    std::uint64_t seed = 1;

    void validate() const {
        detail::require(step > 0.0, ErrorCode::InvalidArgument, "step constant must be positive");
        detail::require(max_iters >= 1, ErrorCode::InvalidArgument, "max_iters must be at least 1");
        detail::require(tol_gap > 0.0, ErrorCode::InvalidArgument, "tol_gap must be positive");
    }
};

/// Sample averages of the per-state powers and interference.
struct Realized {
    std::vector<double> avg_power;
    double avg_interference = 0.0;
};

struct DualSolveResult {
    DualVariables duals;
    double primal_capacity = 0.0;
    double dual_value = 0.0; ///< lowest dual value seen
    double constraint_violation = 0.0;
    double complementary_residual = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> dual_value_trace;
    /// Recovered per-state powers, one row per state.
    std::vector<std::vector<double>> allocation;
    Realized realized;
};

namespace detail {

inline void check_sample(std::span<const FadingState> states, const ConstraintSet& cs) {
    require(!states.empty(), ErrorCode::InvalidArgument, "empty state sample");
    for (const auto& s : states)
        require(s.size() == states.front().size(), ErrorCode::DimensionMismatch, "states differ in size");
    cs.validate(states.front().size());
}

struct SampleEval {
    double mean_value = 0.0;
    double mean_rate = 0.0;
    Realized realized;
    std::vector<std::vector<double>> powers;
};

inline SampleEval evaluate_sample(std::span<const FadingState> states, const ConstraintSet& cs,
                                  const DualVariables& duals, bool keep_powers) {
    const std::size_t n = states.front().size();
    const std::size_t m = states.size();
    std::vector<double> value(m), rate(m), interference(m);
    std::vector<std::vector<double>> power_cols(n, std::vector<double>(m));
    SampleEval ev;
    if (keep_powers) ev.powers.resize(m);
    for (std::size_t t = 0; t < m; ++t) {
        const auto& s = states[t];
        SolveOutcome out = dispatch(s, cs, duals);
        const auto price = price_vector(s, cs, duals);
        value[t] = subproblem_value(s, out.p, price, cs.bandwidth);
        rate[t] = reduced_rate(s, out.p, cs.bandwidth);
        double q = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            power_cols[i][t] = out.p[i];
            q += s.g(i) * out.p[i];
        }
        interference[t] = q;
        if (keep_powers) ev.powers[t] = std::move(out.p);
    }
    const double inv = 1.0 / static_cast<double>(m);
    ev.mean_value = pairwise_sum(value) * inv;
    ev.mean_rate = pairwise_sum(rate) * inv;
    ev.realized.avg_interference = pairwise_sum(interference) * inv;
    ev.realized.avg_power.resize(n);
    for (std::size_t i = 0; i < n; ++i) ev.realized.avg_power[i] = pairwise_sum(power_cols[i]) * inv;
    return ev;
}

inline double dual_offset(const ConstraintSet& cs, const DualVariables& duals) {
    double off = 0.0;
    if (cs.atp)
        for (std::size_t i = 0; i < cs.atp->size(); ++i) off += duals.lambda[i] * (*cs.atp)[i];
    if (cs.aip) off += duals.mu * *cs.aip;
    return off;
}

/// Largest relative excess of the realized averages over their limits
/// (zero when all hold).
inline double max_violation(const ConstraintSet& cs, const Realized& r) {
    double v = 0.0;
    if (cs.atp)
        for (std::size_t i = 0; i < cs.atp->size(); ++i)
            v = std::max(v, (r.avg_power[i] - (*cs.atp)[i]) / (*cs.atp)[i]);
    if (cs.aip) v = std::max(v, (r.avg_interference - *cs.aip) / *cs.aip);
    return v;
}

/// Largest |multiplier * slack| relative to the limit.
inline double complementary_residual(const ConstraintSet& cs, const DualVariables& d, const Realized& r) {
    double v = 0.0;
    if (cs.atp)
        for (std::size_t i = 0; i < cs.atp->size(); ++i)
            v = std::max(v, std::abs(d.lambda[i] * ((*cs.atp)[i] - r.avg_power[i])) / (*cs.atp)[i]);
    if (cs.aip) v = std::max(v, std::abs(d.mu * (*cs.aip - r.avg_interference)) / *cs.aip);
    return v;
}

} // namespace detail

/// Sample-average dual function: mean per-state subproblem optimum plus
/// sum_i lambda_i Pav_i + mu Qav (terms present in the combination).
inline double dual_value(std::span<const FadingState> states, const ConstraintSet& cs, const DualVariables& duals) {
    detail::check_sample(states, cs);
    const auto ev = detail::evaluate_sample(states, cs, duals, false);
    return ev.mean_value + detail::dual_offset(cs, duals);
}

/// One projected subgradient step on the multipliers of the average
/// constraints present in `limits`.
inline DualVariables subgradient_step(const DualVariables& duals, const Realized& realized,
                                      const ConstraintSet& limits, double step) {
    detail::require(step > 0.0, ErrorCode::InvalidArgument, "step must be positive");
    DualVariables next = duals;
    if (limits.atp) {
        detail::require(next.lambda.size() == limits.atp->size() && realized.avg_power.size() == limits.atp->size(),
                        ErrorCode::DimensionMismatch, "lambda size");
        for (std::size_t i = 0; i < next.lambda.size(); ++i)
            next.lambda[i] = std::max(0.0, next.lambda[i] - step * ((*limits.atp)[i] - realized.avg_power[i]));
    }
    if (limits.aip) next.mu = std::max(0.0, next.mu - step * (*limits.aip - realized.avg_interference));
    return next;
}

/// Minimizes the sample dual function by projected subgradient and
/// recovers a feasible primal allocation. Stops once the recovered
/// allocation meets complementary slackness and the duality gap to within
/// tol_gap (relative), or after max_iters with converged = false.
inline DualSolveResult solve_dual(std::span<const FadingState> states, const ConstraintSet& cs,
                                  const SubgradientConfig& config = {}) {
    detail::check_sample(states, cs);
    config.validate();
    detail::require(cs.has_average(), ErrorCode::UnsupportedCombination,
                    "dual solve needs an average constraint");
    const std::size_t n = states.front().size();
    const std::size_t m = states.size();

    // Work in normalized multipliers (lambda_i Pav_i, mu Qav) so that one
    // step constant suits limits of any scale.
    ConstraintSet unit = cs;
    if (unit.atp) unit.atp = std::vector<double>(n, 1.0);
    if (unit.aip) unit.aip = 1.0;
    auto to_natural = [&](const DualVariables& z) {
        DualVariables d;
        d.lambda.assign(n, 0.0);
        if (cs.atp)
            for (std::size_t i = 0; i < n; ++i) d.lambda[i] = z.lambda[i] / (*cs.atp)[i];
        if (cs.aip) d.mu = z.mu / *cs.aip;
        return d;
    };
    auto normalize = [&](const Realized& r) {
        Realized out = r;
        if (cs.atp)
            for (std::size_t i = 0; i < n; ++i) out.avg_power[i] /= (*cs.atp)[i];
        if (cs.aip) out.avg_interference /= *cs.aip;
        return out;
    };
    // Without a per-state constraint the subproblem is unbounded once every
    // price vanishes; keep the relevant multipliers off zero.
    const bool needs_floor = !cs.has_ptp() && !cs.has_pip();
    constexpr double kFloor = 1e-9;
    auto floor_duals = [&](DualVariables& z) {
        if (!needs_floor) return;
        if (cs.aip)
            z.mu = std::max(z.mu, kFloor);
        else
            for (double& l : z.lambda) l = std::max(l, kFloor);
    };

    DualVariables z;
    z.lambda.assign(n, cs.atp ? 1.0 : 0.0);
    z.mu = cs.aip ? 1.0 : 0.0;

    DualSolveResult res;
    res.dual_value = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> window(m, std::vector<double>(n, 0.0));
    std::size_t window_len = 0;
    double best_merit = std::numeric_limits<double>::infinity();

    for (int t = 1; t <= config.max_iters; ++t) {
        const DualVariables duals = to_natural(z);
        auto ev = detail::evaluate_sample(states, cs, duals, true);
        const double f = ev.mean_value + detail::dual_offset(cs, duals);
        res.dual_value_trace.push_back(f);
        res.dual_value = std::min(res.dual_value, f);

        if ((t & (t - 1)) == 0) {
            for (auto& row : window) std::fill(row.begin(), row.end(), 0.0);
            window_len = 0;
        }
        ++window_len;
        for (std::size_t s = 0; s < m; ++s)
            for (std::size_t i = 0; i < n; ++i) window[s][i] += ev.powers[s][i];

        // Averaged allocation, scaled down where it overshoots an average
        // limit. Shrinking powers keeps every per-state constraint, so the
        // recovered allocation is feasible and its rate a valid lower bound.
        const double inv_len = 1.0 / static_cast<double>(window_len);
        const double inv_m = 1.0 / static_cast<double>(m);
        std::vector<std::vector<double>> cols(n, std::vector<double>(m)), icols(n, std::vector<double>(m));
        for (std::size_t s = 0; s < m; ++s)
            for (std::size_t i = 0; i < n; ++i) {
                cols[i][s] = window[s][i] * inv_len;
                icols[i][s] = states[s].g(i) * cols[i][s];
            }
        std::vector<double> scale(n, 1.0);
        double scaled_interference = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double avg_p = detail::pairwise_sum(cols[i]) * inv_m;
            if (cs.atp && avg_p > (*cs.atp)[i]) scale[i] = (*cs.atp)[i] / avg_p;
            scaled_interference += scale[i] * detail::pairwise_sum(icols[i]) * inv_m;
        }
        if (cs.aip && scaled_interference > *cs.aip)
            for (double& a : scale) a *= *cs.aip / scaled_interference;

        std::vector<double> rate(m), interference(m), avg(n);
        for (std::size_t s = 0; s < m; ++s) {
            double q = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                cols[i][s] *= scale[i];
                avg[i] = cols[i][s];
                q += states[s].g(i) * avg[i];
            }
            interference[s] = q;
            rate[s] = reduced_rate(states[s], avg, cs.bandwidth);
        }
        Realized averaged;
        averaged.avg_interference = detail::pairwise_sum(interference) * inv_m;
        averaged.avg_power.resize(n);
        for (std::size_t i = 0; i < n; ++i) averaged.avg_power[i] = detail::pairwise_sum(cols[i]) * inv_m;
        const double primal = detail::pairwise_sum(rate) * inv_m;

        const double violation = detail::max_violation(cs, averaged);
        const double slackness = detail::complementary_residual(cs, duals, averaged);
        const double gap = (res.dual_value - primal) / std::max(1.0, std::abs(res.dual_value));
        const double merit = std::max({violation, slackness, gap});
        const bool done = violation <= config.tol_gap && slackness <= config.tol_gap && gap <= config.tol_gap;

        if (merit < best_merit || done) {
            best_merit = merit;
            res.duals = duals;
            res.primal_capacity = primal;
            res.constraint_violation = violation;
            res.complementary_residual = slackness;
            res.realized = averaged;
            res.allocation.resize(m);
            for (std::size_t s = 0; s < m; ++s) {
                res.allocation[s].resize(n);
                for (std::size_t i = 0; i < n; ++i) res.allocation[s][i] = cols[i][s];
            }
        }
        res.iterations = t;
        if (done) {
            res.converged = true;
            break;
        }

        const double step = config.step_rule == StepRule::Constant ? config.step
                                                                    : config.step / std::sqrt(static_cast<double>(t));
        z = subgradient_step(z, normalize(ev.realized), unit, step);
        floor_duals(z);
    }
    return res;
}

} // namespace crfdma
