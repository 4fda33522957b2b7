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
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace crfdma {

/// Absolute tolerance on constraint slacks.
inline constexpr double kFeasTol = 1e-9;
/// Relative tolerance under which two ordering keys count as tied.
inline constexpr double kRatioTol = 1e-12;
/// Threshold used for the strict test "p > 0" in the structural cases.
inline constexpr double kPosTol = 1e-10;

enum class ErrorCode {
    DimensionMismatch,
    InvalidArgument,
    DegenerateState,
    Unbounded,
    NoCaseFound,
    UnsupportedCombination,
    NotConverged,
};

inline const char* to_string(ErrorCode c) {
    switch (c) {
    case ErrorCode::DimensionMismatch: return "dimension mismatch";
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::DegenerateState: return "degenerate state";
    case ErrorCode::Unbounded: return "unbounded subproblem";
    case ErrorCode::NoCaseFound: return "no structural case validated";
    case ErrorCode::UnsupportedCombination: return "unsupported constraint combination";
    case ErrorCode::NotConverged: return "iteration budget exhausted";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

namespace detail {

inline void require(bool ok, ErrorCode code, const char* what) {
    if (!ok) throw Error(code, what);
}

inline void require_nonneg_finite(std::span<const double> v, const char* what) {
    for (double x : v)
        require(std::isfinite(x) && x >= 0.0, ErrorCode::InvalidArgument, what);
}

inline void require_positive_finite(std::span<const double> v, const char* what) {
    for (double x : v)
        require(std::isfinite(x) && x > 0.0, ErrorCode::InvalidArgument, what);
}

/// Sum in a fixed pairwise order, independent of how terms were produced.
inline double pairwise_sum(std::span<const double> x) {
    if (x.size() <= 8) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t half = x.size() / 2;
    return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

inline bool nearly_equal(double a, double b, double rel) {
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

} // namespace detail

/// One realization of the channel power gains for all users.
///
/// h[i] is the gain from transmitter i to its own receiver, g[i] the gain
/// from transmitter i to the primary receiver. Both strictly positive.
class FadingState {
public:
    FadingState(std::vector<double> h, std::vector<double> g) : h_(std::move(h)), g_(std::move(g)) {
        detail::require(!h_.empty(), ErrorCode::InvalidArgument, "fading state needs at least one user");
        detail::require(h_.size() == g_.size(), ErrorCode::DimensionMismatch, "h and g differ in length");
        detail::require_positive_finite(h_, "h must be positive and finite");
        detail::require_positive_finite(g_, "g must be positive and finite");
    }

    std::size_t size() const noexcept { return h_.size(); }
    std::span<const double> h() const noexcept { return h_; }
    std::span<const double> g() const noexcept { return g_; }
    double h(std::size_t i) const { return h_[i]; }
    double g(std::size_t i) const { return g_[i]; }

    friend bool operator==(const FadingState&, const FadingState&) = default;

private:
    std::vector<double> h_;
    std::vector<double> g_;
};

/// True when no two keys coincide within kRatioTol (relative).
inline bool keys_distinct(std::span<const double> keys) {
    for (std::size_t i = 0; i < keys.size(); ++i)
        for (std::size_t j = i + 1; j < keys.size(); ++j)
            if (std::isfinite(keys[i]) && std::isfinite(keys[j]) &&
                detail::nearly_equal(keys[i], keys[j], kRatioTol))
                return false;
    return true;
}

/// The h_i/g_i ordering keys must be pairwise distinct.
inline bool has_distinct_ratios(const FadingState& s) {
    std::vector<double> r(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) r[i] = s.h(i) / s.g(i);
    return keys_distinct(r);
}

/// Which of the four power constraints are active, with their limits.
struct ConstraintSet {
    std::optional<std::vector<double>> ptp; ///< peak transmit power per user
    std::optional<std::vector<double>> atp; ///< average transmit power per user
    std::optional<double> pip;              ///< peak interference at the primary receiver
    std::optional<double> aip;              ///< average interference at the primary receiver
    double bandwidth = 1.0;

    bool has_ptp() const noexcept { return ptp.has_value(); }
    bool has_atp() const noexcept { return atp.has_value(); }
    bool has_pip() const noexcept { return pip.has_value(); }
    bool has_aip() const noexcept { return aip.has_value(); }
    bool has_average() const noexcept { return has_atp() || has_aip(); }

    /// Throws unless limits are positive, sizes match n_users and at least one
    /// power constraint is present.
    void validate(std::size_t n_users) const {
        detail::require(bandwidth > 0.0 && std::isfinite(bandwidth), ErrorCode::InvalidArgument,
                        "bandwidth must be positive");
        detail::require(has_ptp() || has_atp() || has_pip() || has_aip(),
                        ErrorCode::UnsupportedCombination, "no power constraint given");
        if (ptp) {
            detail::require(ptp->size() == n_users, ErrorCode::DimensionMismatch, "ptp limits");
            detail::require_positive_finite(*ptp, "ptp limits must be positive");
        }
        if (atp) {
            detail::require(atp->size() == n_users, ErrorCode::DimensionMismatch, "atp limits");
            detail::require_positive_finite(*atp, "atp limits must be positive");
        }
        if (pip)
            detail::require(*pip > 0.0 && std::isfinite(*pip), ErrorCode::InvalidArgument,
                            "pip limit must be positive");
        if (aip)
            detail::require(*aip > 0.0 && std::isfinite(*aip), ErrorCode::InvalidArgument,
                            "aip limit must be positive");
    }

    /// Lowercase plus-separated name in ptp, atp, pip, aip order.
    std::string name() const {
        std::string out;
        auto add = [&](bool on, const char* n) {
            if (!on) return;
            if (!out.empty()) out += '+';
            out += n;
        };
        add(has_ptp(), "ptp");
        add(has_atp(), "atp");
        add(has_pip(), "pip");
        add(has_aip(), "aip");
        return out;
    }
};

/// Per-user transmit powers and bandwidths for one fading state.
struct Allocation {
    std::vector<double> p;
    std::vector<double> w;
};

/// Multipliers of the average constraints: lambda for ATP, mu for AIP.
struct DualVariables {
    std::vector<double> lambda;
    double mu = 0.0;

    void validate() const {
        detail::require_nonneg_finite(lambda, "lambda must be nonnegative");
        detail::require(std::isfinite(mu) && mu >= 0.0, ErrorCode::InvalidArgument,
                        "mu must be nonnegative");
    }
};

/// Ergodic-capacity estimate with realized averages and constraint slacks.
struct CapacityReport {
    double sum_ergodic_capacity = 0.0; ///< nats*Hz
    std::vector<double> avg_power;
    double avg_interference = 0.0;
    std::map<std::string, double> per_constraint_slack;
};

} // namespace crfdma
