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
#include <cstdint>
#include <vector>

#include "crfdma/rng.hpp"
#include "crfdma/types.hpp"

namespace crfdma {

enum class FadingKind { Rayleigh };

/// Rayleigh fading on every link: channel power gains are exponential with
/// mean `variance`.
struct FadingModel {
    FadingKind kind = FadingKind::Rayleigh;
    double variance = 1.0;
    std::size_t n_users = 4;
    std::size_t n_states = 1000;
    std::uint64_t seed = 1;

    void validate() const {
        detail::require(variance > 0.0 && std::isfinite(variance), ErrorCode::InvalidArgument,
                        "variance must be positive");
        detail::require(n_users >= 1, ErrorCode::InvalidArgument, "need at least one user");
        detail::require(n_states >= 1, ErrorCode::InvalidArgument, "need at least one state");
    }
};

/// Draws state `index` of the sample. Counter layout: (index lo, index hi,
/// attempt, block); each block yields two gains. A draw whose h/g ratios
/// tie is redrawn with the next attempt number.
inline FadingState draw_state(const FadingModel& model, std::uint64_t index) {
    const Philox4x32 gen(model.seed);
    const std::size_t n = model.n_users;
    for (std::uint32_t attempt = 0;; ++attempt) {
        std::vector<double> gains(2 * n);
        for (std::uint32_t block = 0; 2 * block < gains.size(); ++block) {
            const auto out = gen({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                                  attempt, block});
            const double u0 = to_unit_open(join(out[0], out[1]));
            const double u1 = to_unit_open(join(out[2], out[3]));
            gains[2 * block] = -model.variance * std::log(u0);
            if (2 * block + 1 < gains.size()) gains[2 * block + 1] = -model.variance * std::log(u1);
        }
        std::vector<double> h(gains.begin(), gains.begin() + static_cast<std::ptrdiff_t>(n));
        std::vector<double> g(gains.begin() + static_cast<std::ptrdiff_t>(n), gains.end());
        FadingState state(std::move(h), std::move(g));
        if (has_distinct_ratios(state)) return state;
    }
}

inline std::vector<FadingState> generate_states(const FadingModel& model) {
    model.validate();
    std::vector<FadingState> out;
    out.reserve(model.n_states);
    for (std::size_t i = 0; i < model.n_states; ++i) out.push_back(draw_state(model, i));
    return out;
}

} // namespace crfdma
