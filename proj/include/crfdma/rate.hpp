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

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "crfdma/types.hpp"

namespace crfdma {

namespace detail {

inline void check_allocation(const FadingState& s, const Allocation& a) {
    require(a.p.size() == s.size() && a.w.size() == s.size(), ErrorCode::DimensionMismatch,
            "allocation size differs from number of users");
    require_nonneg_finite(a.p, "powers must be nonnegative and finite");
    require_nonneg_finite(a.w, "bandwidths must be nonnegative and finite");
}

} // namespace detail

/// Sum rate of one fading state: sum_i w_i ln(1 + h_i p_i / w_i), in nats*Hz.
/// A user with w_i = 0 contributes nothing.
inline double state_rate(const FadingState& s, const Allocation& a) {
    detail::check_allocation(s, a);
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (a.w[i] == 0.0) continue;
        total += a.w[i] * std::log1p(s.h(i) * a.p[i] / a.w[i]);
    }
    return total;
}

/// Sum rate after eliminating bandwidth: W ln(1 + sum_i h_i p_i / W).
inline double reduced_rate(const FadingState& s, std::span<const double> p, double bandwidth) {
    detail::require(p.size() == s.size(), ErrorCode::DimensionMismatch, "power vector size");
    detail::require_nonneg_finite(p, "powers must be nonnegative and finite");
    detail::require(bandwidth > 0.0 && std::isfinite(bandwidth), ErrorCode::InvalidArgument,
                    "bandwidth must be positive");
    double snr = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) snr += s.h(i) * p[i];
    return bandwidth * std::log1p(snr / bandwidth);
}

/// Slacks of the per-state constraints; negative means violated.
/// Average constraints are accounted for over a sample, not here.
struct SlackReport {
    std::optional<std::vector<double>> ptp;
    std::optional<double> pip;
    double bandwidth = 0.0;

    bool feasible(double tol = kFeasTol) const {
        if (bandwidth < -tol) return false;
        if (pip && *pip < -tol) return false;
        if (ptp)
            for (double x : *ptp)
                if (x < -tol) return false;
        return true;
    }
};

inline SlackReport check_feasible(const FadingState& s, const Allocation& a, const ConstraintSet& cs) {
    detail::check_allocation(s, a);
    SlackReport r;
    double wsum = 0.0;
    for (double w : a.w) wsum += w;
    r.bandwidth = cs.bandwidth - wsum;
    if (cs.ptp) {
        detail::require(cs.ptp->size() == s.size(), ErrorCode::DimensionMismatch, "ptp limits");
        std::vector<double> slack(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) slack[i] = (*cs.ptp)[i] - a.p[i];
        r.ptp = std::move(slack);
    }
    if (cs.pip) {
        double q = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) q += s.g(i) * a.p[i];
        r.pip = *cs.pip - q;
    }
    return r;
}

} // namespace crfdma
