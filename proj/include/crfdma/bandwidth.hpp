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
#include <span>
#include <vector>

#include "crfdma/types.hpp"

namespace crfdma {

/// Y(x) = ln(1+x) - x/(1+x), the marginal rate of a user per unit bandwidth
/// at SNR-per-Hz x. Strictly increasing on x > 0 with Y(0) = 0.
inline double y_function(double x) {
    detail::require(x >= 0.0 && !std::isnan(x), ErrorCode::InvalidArgument, "Y needs x >= 0");
    return std::log1p(x) - x / (1.0 + x);
}

/// Rate-maximizing split of the bandwidth for fixed powers.
///
/// Each user gets bandwidth proportional to h_i p_i, which equalizes
/// h_i p_i / w_i across active users. The result is renormalized so it
/// sums to the bandwidth. With all powers zero every user gets zero.
inline std::vector<double> optimal_bandwidth(const FadingState& s, std::span<const double> p,
                                             double bandwidth) {
    detail::require(p.size() == s.size(), ErrorCode::DimensionMismatch, "power vector size");
    detail::require_nonneg_finite(p, "powers must be nonnegative and finite");
    detail::require(bandwidth > 0.0 && std::isfinite(bandwidth), ErrorCode::InvalidArgument,
                    "bandwidth must be positive");
    std::vector<double> w(s.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) total += s.h(i) * p[i];
    if (total <= 0.0) return w;
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        w[i] = bandwidth * (s.h(i) * p[i] / total);
        sum += w[i];
    }
    // drift correction, absorbed by the largest share
    std::size_t big = 0;
    for (std::size_t i = 1; i < w.size(); ++i)
        if (w[i] > w[big]) big = i;
    w[big] = std::max(0.0, w[big] + (bandwidth - sum));
    return w;
}

} // namespace crfdma
