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

// Slow reference solver and KKT checker for the per-state subproblems.
// Neither uses the ratio-ordering structure of the closed-form solvers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "crfdma/state_solvers.hpp"
#include "crfdma/types.hpp"

namespace crfdma {

/// max W ln(1 + h.p / W) - price.p over 0 <= p <= peak, g.p <= q_pk.
/// An empty price means the plain reduced rate.
struct OracleProblem {
    std::vector<double> price;
    std::optional<std::vector<double>> peak;
    std::optional<double> q_pk;
    double bandwidth = 1.0;
};

struct OracleOptions {
    std::uint64_t seed = 1;
    int starts = 3;
    int max_iters = 200000;
    double step_tol = 1e-15;
};

struct OracleResult {
    std::vector<double> p;
    double value = 0.0;
    int iterations = 0;
};

inline constexpr std::size_t kOracleMaxUsers = 8;

namespace detail {

/// Euclidean projection onto {0 <= p <= upper, g.p <= q}. The minimizer is
/// clamp(y - tau g, 0, upper) for the smallest tau >= 0 meeting the
/// halfspace; g.p(tau) is piecewise linear in tau, so tau is found exactly
/// between consecutive breakpoints.
inline void project_box_halfspace(std::span<double> y, std::span<const double> upper,
                                  std::span<const double> g, std::optional<double> q) {
    const std::size_t n = y.size();
    auto clamp_at = [&](double tau, std::size_t i) { return std::clamp(y[i] - tau * g[i], 0.0, upper[i]); };
    auto load = [&](double tau) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += g[i] * clamp_at(tau, i);
        return s;
    };
    if (!q || load(0.0) <= *q) {
        for (std::size_t i = 0; i < n; ++i) y[i] = clamp_at(0.0, i);
        return;
    }
    std::vector<double> bp{0.0};
    for (std::size_t i = 0; i < n; ++i) {
        const double lo = y[i] / g[i];
        if (lo > 0.0) bp.push_back(lo);
        if (std::isfinite(upper[i])) {
            const double hi = (y[i] - upper[i]) / g[i];
            if (hi > 0.0) bp.push_back(hi);
        }
    }
    std::sort(bp.begin(), bp.end());
    double a = 0.0, la = load(0.0);
    double tau = bp.back();
    for (std::size_t t = 1; t < bp.size(); ++t) {
        const double b = bp[t];
        const double lb = load(b);
        if (lb <= *q) {
            tau = (la == lb) ? b : a + (la - *q) * (b - a) / (la - lb);
            break;
        }
        a = b;
        la = lb;
    }
    for (std::size_t i = 0; i < n; ++i) y[i] = clamp_at(tau, i);
}

} // namespace detail

/// Accelerated projected-gradient ascent with adaptive restart, run from
/// several starting points; the best point found is returned.
inline OracleResult oracle_solve(const FadingState& s, const OracleProblem& prob, const OracleOptions& opt = {}) {
    const std::size_t n = s.size();
    detail::require(n <= kOracleMaxUsers, ErrorCode::InvalidArgument, "oracle limited to 8 users");
    detail::require(prob.bandwidth > 0.0, ErrorCode::InvalidArgument, "bandwidth must be positive");
    std::vector<double> price = prob.price.empty() ? std::vector<double>(n, 0.0) : prob.price;
    detail::require(price.size() == n, ErrorCode::DimensionMismatch, "price size");
    std::vector<double> upper(n, std::numeric_limits<double>::infinity());
    if (prob.peak) {
        detail::require(prob.peak->size() == n, ErrorCode::DimensionMismatch, "peak size");
        upper = *prob.peak;
    }
    if (!prob.peak && !prob.q_pk)
        for (double c : price)
            detail::require(c > 0.0, ErrorCode::Unbounded, "oracle problem has no bounded optimum");

    const double w = prob.bandwidth;
    double lip = 0.0;
    for (double h : s.h()) lip += h * h;
    lip /= w;
    const double step = 1.0 / lip;

    auto value = [&](std::span<const double> p) { return subproblem_value(s, p, price, w); };
    auto ascend = [&](std::span<const double> from, std::span<double> to) {
        double snr = 0.0;
        for (std::size_t i = 0; i < n; ++i) snr += s.h(i) * from[i];
        const double scale = 1.0 / (1.0 + snr / w);
        for (std::size_t i = 0; i < n; ++i) to[i] = from[i] + step * (s.h(i) * scale - price[i]);
        detail::project_box_halfspace(to, upper, s.g(), prob.q_pk);
    };

    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    OracleResult best;
    best.value = -std::numeric_limits<double>::infinity();
    int total_iters = 0;

    for (int start = 0; start < opt.starts; ++start) {
        std::vector<double> x(n, 0.0);
        if (start > 0) {
            for (std::size_t i = 0; i < n; ++i) {
                const double span_i = std::isfinite(upper[i]) ? upper[i]
                                      : price[i] > 0.0        ? w / price[i]
                                                              : 1.0;
                x[i] = unit(rng) * span_i;
            }
            detail::project_box_halfspace(x, upper, s.g(), prob.q_pk);
        }
        std::vector<double> y = x, next(n);
        double fx = value(x);
        double t = 1.0;
        int quiet = 0;
        int it = 0;
        for (; it < opt.max_iters; ++it) {
            ascend(y, next);
            double fn = value(next);
            if (fn < fx) { // restart momentum
                t = 1.0;
                y = x;
                ascend(y, next);
                fn = value(next);
            }
            double move = 0.0, mag = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                move = std::max(move, std::abs(next[i] - x[i]));
                mag = std::max(mag, std::abs(x[i]));
            }
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            for (std::size_t i = 0; i < n; ++i) y[i] = next[i] + ((t - 1.0) / t_next) * (next[i] - x[i]);
            detail::project_box_halfspace(y, upper, s.g(), prob.q_pk);
            t = t_next;
            x = next;
            fx = std::max(fx, fn);
            quiet = move <= opt.step_tol * (1.0 + mag) ? quiet + 1 : 0;
            if (quiet >= 5) break;
        }
        total_iters += it;
        const double fv = value(x);
        if (fv > best.value) {
            best.value = fv;
            best.p = x;
        }
    }
    best.iterations = total_iters;
    return best;
}

/// Builds the oracle problem matching one combination at fixed multipliers.
inline OracleProblem oracle_problem_for(const FadingState& s, const ConstraintSet& cs, const DualVariables& duals) {
    OracleProblem prob;
    prob.price = price_vector(s, cs, duals);
    prob.peak = cs.ptp;
    prob.q_pk = cs.pip;
    prob.bandwidth = cs.bandwidth;
    return prob;
}

/// Per-condition outcome of a KKT check, with the worst residual seen.
struct KktReport {
    bool stationarity = true;
    bool primal_feasibility = true;
    bool dual_feasibility = true;
    bool complementary_slackness = true;
    double worst_residual = 0.0;

    bool passed() const {
        return stationarity && primal_feasibility && dual_feasibility && complementary_slackness;
    }
};

inline constexpr double kKktTol = 1e-7;

/// Checks a per-state outcome against the optimality conditions of its
/// subproblem: the marginal h_i/(1 + h.p/W) - c_i - beta g_i vanishes for
/// interior users, is <= 0 for users off, and >= 0 for users at peak.
/// beta is the outcome's inner dual when the peak interference limit is
/// present.
inline KktReport kkt_check(const FadingState& s, const SolveOutcome& outcome, const ConstraintSet& cs,
                           const DualVariables& duals, double tol = kKktTol) {
    const std::size_t n = s.size();
    detail::require(outcome.p.size() == n, ErrorCode::DimensionMismatch, "outcome size");
    KktReport r;
    auto note = [&](bool& flag, double residual) {
        r.worst_residual = std::max(r.worst_residual, residual);
        if (residual > tol) flag = false;
    };
    const auto price = price_vector(s, cs, duals);
    const double beta = cs.has_pip() ? outcome.inner_dual.value_or(0.0) : 0.0;
    const double w = cs.bandwidth;

    double snr = 0.0, interference = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        snr += s.h(i) * outcome.p[i];
        interference += s.g(i) * outcome.p[i];
    }
    const double denom = 1.0 + snr / w;

    for (std::size_t i = 0; i < n; ++i) {
        const double p = outcome.p[i];
        const double peak = cs.ptp ? (*cs.ptp)[i] : std::numeric_limits<double>::infinity();
        note(r.primal_feasibility, -p);
        if (cs.ptp) note(r.primal_feasibility, p - peak);
        const double d = s.h(i) / denom - price[i] - beta * s.g(i);
        if (std::abs(p) <= 1e-12) {
            note(r.stationarity, d);
        } else if (cs.ptp && std::abs(p - peak) <= 1e-12 * peak) {
            note(r.stationarity, -d);
        } else {
            note(r.stationarity, std::abs(d));
        }
    }
    if (cs.pip) {
        note(r.primal_feasibility, interference - *cs.pip);
        note(r.dual_feasibility, -beta);
        note(r.complementary_slackness, std::abs(beta * (*cs.pip - interference)));
    }
    if (cs.has_atp())
        for (double l : duals.lambda) note(r.dual_feasibility, -l);
    if (cs.has_aip()) note(r.dual_feasibility, -duals.mu);
    return r;
}

} // namespace crfdma
