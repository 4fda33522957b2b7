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

// Per-fading-state power allocation.
//
// Every solver maximizes the bandwidth-eliminated rate
//     W ln(1 + sum_i h_i p_i / W) - sum_i c_i p_i
// over the per-state feasible set of its constraint combination, where the
// linear cost c_i collects the multipliers of the average constraints
// (c_i = lambda_i + mu g_i). The solutions are built from the structure of
// the optimum: users are ranked by a ratio key and all but at most one or
// two of them sit at zero or at their peak power.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crfdma/types.hpp"

namespace crfdma {

/// Structural branch that produced a per-state solution.
enum class CaseTag {
    PtpPip,          ///< peak prefix in h/g order, one fractional user
    AtpAipCase1,     ///< every user priced out, p = 0
    AtpAipCase2,     ///< single best user water-fills
    PtpAipCase1,     ///< p = 0
    PtpAipC1,        ///< peak prefix plus one interior user
    PtpAipC2,        ///< peak prefix only
    AtpPipCase1,     ///< p = 0
    AtpPipCase2,     ///< single user, interference limit slack
    AtpPipCase3_1,   ///< single user exhausting the interference limit
    AtpPipCase3_2,   ///< two users sharing the interference limit
    CombinedCase1,   ///< p = 0
    CombinedCase2C1, ///< interference slack, peak prefix plus one interior
    CombinedCase2C2, ///< interference slack, peak prefix only
    CombinedCase3_1, ///< interference tight, one fractional user
    CombinedCase3_2, ///< interference tight, two fractional users
};

inline const char* to_string(CaseTag t) {
    switch (t) {
    case CaseTag::PtpPip: return "PTP_PIP";
    case CaseTag::AtpAipCase1: return "ATP_AIP_case1";
    case CaseTag::AtpAipCase2: return "ATP_AIP_case2";
    case CaseTag::PtpAipCase1: return "PTP_AIP_case1";
    case CaseTag::PtpAipC1: return "PTP_AIP_c1";
    case CaseTag::PtpAipC2: return "PTP_AIP_c2";
    case CaseTag::AtpPipCase1: return "ATP_PIP_case1";
    case CaseTag::AtpPipCase2: return "ATP_PIP_case2";
    case CaseTag::AtpPipCase3_1: return "ATP_PIP_case3_1";
    case CaseTag::AtpPipCase3_2: return "ATP_PIP_case3_2";
    case CaseTag::CombinedCase1: return "COMBINED_case1";
    case CaseTag::CombinedCase2C1: return "COMBINED_case2_c1";
    case CaseTag::CombinedCase2C2: return "COMBINED_case2_c2";
    case CaseTag::CombinedCase3_1: return "COMBINED_case3_1";
    case CaseTag::CombinedCase3_2: return "COMBINED_case3_2";
    }
    return "?";
}

inline bool is_zero_case(CaseTag t) {
    return t == CaseTag::AtpAipCase1 || t == CaseTag::PtpAipCase1 || t == CaseTag::AtpPipCase1 ||
           t == CaseTag::CombinedCase1;
}

struct SolveOutcome {
    std::vector<double> p;
    CaseTag tag = CaseTag::PtpPip;
    /// Multiplier of the peak interference constraint when the solver
    /// determines one (zero when that constraint is slack).
    std::optional<double> inner_dual;
    /// 1-based rank of the last transmitting user in the ratio order, for
    /// the peak-prefix structures.
    std::optional<std::size_t> pivot;
};

/// Users sorted by descending key. Infinite keys (zero price) come first in
/// index order; finite keys must be pairwise distinct.
struct RatioOrder {
    std::vector<std::size_t> perm;
    std::vector<double> ratio;
};

inline RatioOrder make_ratio_order(std::span<const double> keys) {
    if (!keys_distinct(keys))
        throw Error(ErrorCode::DegenerateState, "tied ratio keys");
    RatioOrder o;
    o.perm.resize(keys.size());
    std::iota(o.perm.begin(), o.perm.end(), std::size_t{0});
    std::stable_sort(o.perm.begin(), o.perm.end(),
                     [&](std::size_t a, std::size_t b) { return keys[a] > keys[b]; });
    o.ratio.reserve(keys.size());
    for (std::size_t i : o.perm) o.ratio.push_back(keys[i]);
    return o;
}

/// W ln(1 + sum h p / W) - sum c p.
inline double subproblem_value(const FadingState& s, std::span<const double> p,
                               std::span<const double> cost, double bandwidth) {
    double snr = 0.0, price = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        snr += s.h(i) * p[i];
        price += cost[i] * p[i];
    }
    return bandwidth * std::log1p(snr / bandwidth) - price;
}

/// Linear price c_i = lambda_i [ATP] + mu g_i [AIP] of the combination.
inline std::vector<double> price_vector(const FadingState& s, const ConstraintSet& cs,
                                        const DualVariables& duals) {
    std::vector<double> c(s.size(), 0.0);
    if (cs.has_atp()) {
        detail::require(duals.lambda.size() == s.size(), ErrorCode::DimensionMismatch,
                        "lambda size differs from number of users");
        for (std::size_t i = 0; i < s.size(); ++i) c[i] += duals.lambda[i];
    }
    if (cs.has_aip())
        for (std::size_t i = 0; i < s.size(); ++i) c[i] += duals.mu * s.g(i);
    return c;
}

namespace detail {

inline double tol_for(double scale) { return 1e-9 * (1.0 + std::abs(scale)); }

inline bool all_priced_out(const FadingState& s, std::span<const double> c) {
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s.h(i) > c[i]) return false;
    return true;
}

inline std::vector<double> keys_h_over(const FadingState& s, std::span<const double> c) {
    std::vector<double> k(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        k[i] = c[i] > 0.0 ? s.h(i) / c[i] : std::numeric_limits<double>::infinity();
    return k;
}

inline void check_peaks(const FadingState& s, std::span<const double> peak) {
    require(peak.size() == s.size(), ErrorCode::DimensionMismatch, "peak power size");
    require_positive_finite(peak, "peak powers must be positive");
}

inline void check_bandwidth(double w) {
    require(w > 0.0 && std::isfinite(w), ErrorCode::InvalidArgument, "bandwidth must be positive");
}

inline void check_interference(double q) {
    require(q > 0.0 && std::isfinite(q), ErrorCode::InvalidArgument, "interference limit must be positive");
}

/// Every bitmask over n users, ordered by cardinality and then
/// lexicographically by member indices. Restricting the list to masks that
/// avoid some users keeps that order.
inline const std::vector<std::uint32_t>& ordered_masks(std::size_t n) {
    require(n <= 20, ErrorCode::InvalidArgument, "subset enumeration limited to 20 users");
    thread_local std::vector<std::vector<std::uint32_t>> cache;
    if (cache.size() <= n) cache.resize(n + 1);
    auto& masks = cache[n];
    if (!masks.empty()) return masks;
    const std::uint32_t count = std::uint32_t{1} << n;
    masks.resize(count);
    std::iota(masks.begin(), masks.end(), std::uint32_t{0});
    auto members_less = [](std::uint32_t a, std::uint32_t b) {
        const int pa = std::popcount(a), pb = std::popcount(b);
        if (pa != pb) return pa < pb;
        while (a && b) {
            const int la = std::countr_zero(a), lb = std::countr_zero(b);
            if (la != lb) return la < lb;
            a &= a - 1;
            b &= b - 1;
        }
        return false;
    };
    std::sort(masks.begin(), masks.end(), members_less);
    return masks;
}

/// Per-mask sums of x_i * peak_i, filled by lowest-bit recurrence.
inline std::vector<double> mask_sums(std::span<const double> x, std::span<const double> peak) {
    const std::size_t n = x.size();
    std::vector<double> out(std::size_t{1} << n, 0.0);
    for (std::size_t m = 1; m < out.size(); ++m) {
        const int low = std::countr_zero(static_cast<std::uint32_t>(m));
        out[m] = out[m & (m - 1)] + x[low] * peak[low];
    }
    return out;
}

/// max W ln(1 + sum h p / W) - sum c p  s.t. 0 <= p <= peak.
///
/// Users are ranked by h/c. With L_j the cumulative h*peak of the first j
/// users and M_j = W(h/c - 1) of the j-th, exactly one rank k satisfies
/// either L_{k-1} < M_k < L_k (user k interior) or M_{k+1} <= L_k <= M_k
/// (first k users at peak; only L_N <= M_N at k = N).
inline SolveOutcome peak_waterfill(const FadingState& s, std::span<const double> c,
                                   std::span<const double> peak, double bandwidth,
                                   CaseTag zero_tag, CaseTag c1_tag, CaseTag c2_tag) {
    const std::size_t n = s.size();
    SolveOutcome out;
    out.p.assign(n, 0.0);
    if (all_priced_out(s, c)) {
        out.tag = zero_tag;
        return out;
    }
    const auto keys = keys_h_over(s, c);
    const RatioOrder order = make_ratio_order(keys);

    auto level = [&](std::size_t rank) { // M_rank, rank is 1-based
        return bandwidth * (order.ratio[rank - 1] - 1.0);
    };
    std::vector<double> cum(n + 1, 0.0); // L_0..L_N
    for (std::size_t r = 1; r <= n; ++r) {
        const std::size_t u = order.perm[r - 1];
        cum[r] = cum[r - 1] + s.h(u) * peak[u];
    }

    for (std::size_t k = 1; k <= n; ++k) {
        const double m_k = level(k);
        if (cum[k - 1] < m_k && m_k < cum[k]) {
            for (std::size_t r = 1; r < k; ++r) out.p[order.perm[r - 1]] = peak[order.perm[r - 1]];
            const std::size_t u = order.perm[k - 1];
            out.p[u] = std::clamp((m_k - cum[k - 1]) / s.h(u), 0.0, peak[u]);
            out.tag = c1_tag;
            out.pivot = k;
            return out;
        }
        const bool prefix = (k <= n - 1 && level(k + 1) <= cum[k] && cum[k] <= m_k) ||
                            (k == n && cum[k] <= m_k);
        if (prefix) {
            for (std::size_t r = 1; r <= k; ++r) out.p[order.perm[r - 1]] = peak[order.perm[r - 1]];
            out.tag = c2_tag;
            out.pivot = k;
            return out;
        }
    }
    throw Error(ErrorCode::NoCaseFound, "peak water-filling found no rank");
}

/// max W ln(1 + sum h p / W) - sum c p  s.t. p >= 0. Only the best h/c user
/// transmits.
inline SolveOutcome single_waterfill(const FadingState& s, std::span<const double> c, double bandwidth,
                                     CaseTag zero_tag, CaseTag active_tag) {
    SolveOutcome out;
    out.p.assign(s.size(), 0.0);
    if (all_priced_out(s, c)) {
        out.tag = zero_tag;
        return out;
    }
    for (std::size_t i = 0; i < s.size(); ++i)
        if (c[i] <= 0.0)
            throw Error(ErrorCode::Unbounded, "zero price on a user with positive gain");
    const RatioOrder order = make_ratio_order(keys_h_over(s, c));
    const std::size_t top = order.perm.front();
    out.p[top] = bandwidth * (1.0 / c[top] - 1.0 / s.h(top));
    out.tag = active_tag;
    out.pivot = 1;
    return out;
}

struct Candidate {
    std::vector<double> p;
    double value = -std::numeric_limits<double>::infinity();
    double dual = 0.0;
};

/// Interference-limited single user: one user k at Q/g_k, all others off.
/// k maximizes the subproblem value; the implied multiplier must be
/// nonnegative and price every other user out.
inline std::optional<Candidate> pip_single_user(const FadingState& s, std::span<const double> c,
                                                double q_pk, double bandwidth) {
    const std::size_t n = s.size();
    std::size_t k = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double v = bandwidth * std::log1p(s.h(i) * q_pk / (s.g(i) * bandwidth)) - c[i] * q_pk / s.g(i);
        if (v > best) {
            best = v;
            k = i;
        }
    }
    const double mu = 1.0 / (s.g(k) / s.h(k) + q_pk / bandwidth) - c[k] / s.g(k);
    if (mu < -tol_for(mu)) return std::nullopt;
    const double denom = 1.0 + s.h(k) * q_pk / (s.g(k) * bandwidth);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == k) continue;
        const double bound = (s.h(i) / s.g(i)) / denom - c[i] / s.g(i);
        if (mu < bound - tol_for(bound)) return std::nullopt;
    }
    Candidate cand;
    cand.p.assign(n, 0.0);
    cand.p[k] = q_pk / s.g(k);
    cand.value = best;
    cand.dual = std::max(0.0, mu);
    return cand;
}

/// Marginal value of user i at total SNR level `denom` and interference
/// price `beta`: h_i/denom - c_i - beta g_i.
inline double marginal(const FadingState& s, std::span<const double> c, std::size_t i, double denom,
                       double beta) {
    return s.h(i) / denom - c[i] - beta * s.g(i);
}

/// Peak users of a candidate, as a bitmask with precomputed sums of
/// g*peak, h*peak and c*peak.
struct PeakSet {
    std::uint32_t mask = 0;
    double g = 0.0;
    double h = 0.0;
    double c = 0.0;
};

/// Two users j, k (plus a fixed set of peak users) share the interference
/// limit. Their common level fixes beta; the interference and SNR equations
/// fix the two powers. Returns nothing when beta < 0 or the pair would not
/// be strictly interior.
inline std::optional<Candidate> two_user_split(const FadingState& s, std::span<const double> c,
                                               std::span<const double> peak, double q_pk, double bandwidth,
                                               std::size_t j, std::size_t k, const PeakSet& at_peak) {
    const double hj = s.h(j), hk = s.h(k), gj = s.g(j), gk = s.g(k);
    const double beta = (c[j] / hj - c[k] / hk) / (gk / hk - gj / hj);
    if (!(beta >= 0.0) || !std::isfinite(beta)) return std::nullopt;
    const double price_j = c[j] + beta * gj;
    if (price_j <= 0.0) return std::nullopt;
    const double a = q_pk - at_peak.g;
    const double b = bandwidth * hj / price_j - bandwidth - at_peak.h;
    const double pj = (a / gk - b / hk) / (gj / gk - hj / hk);
    const double pk = (b / hj - a / gj) / (hk / hj - gk / gj);
    if (!(pj > kPosTol && pj < peak[j] && pk > kPosTol && pk < peak[k])) return std::nullopt;
    Candidate cand;
    cand.p.assign(s.size(), 0.0);
    for (std::size_t i = 0; i < s.size(); ++i)
        if (at_peak.mask >> i & 1U) cand.p[i] = peak[i];
    cand.p[j] = pj;
    cand.p[k] = pk;
    cand.value = bandwidth * std::log1p((hj * pj + hk * pk + at_peak.h) / bandwidth) - c[j] * pj - c[k] * pk -
                 at_peak.c;
    cand.dual = beta;
    return cand;
}

/// Every user outside {j, k} must satisfy its sign condition at the pair's
/// level: <= 0 when off, >= 0 when at peak.
inline bool pair_is_kkt(const FadingState& s, std::span<const double> c, const Candidate& cand,
                        std::size_t j, std::size_t k) {
    const double denom = s.h(j) / (c[j] + cand.dual * s.g(j));
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i == j || i == k) continue;
        const double d = marginal(s, c, i, denom, cand.dual);
        const double tol = tol_for(s.h(i) / denom);
        if (cand.p[i] > 0.0) {
            if (d < -tol) return false;
        } else if (d > tol) {
            return false;
        }
    }
    return true;
}

inline bool better(const std::optional<Candidate>& cur, const Candidate& next) {
    return !cur || next.value > cur->value;
}

} // namespace detail

/// Peak transmit power with peak interference power.
///
/// Sort users by h/g descending and fill them at peak while the cumulative
/// interference stays below the limit; the k-th user takes what is left,
/// capped by its peak. The returned inner_dual is the interference price
/// h_k / (g_k (1 + sum h p / W)) when the limit binds, else 0.
inline SolveOutcome solve_ptp_pip(const FadingState& s, std::span<const double> peak, double q_pk,
                                  double bandwidth) {
    detail::check_peaks(s, peak);
    detail::check_interference(q_pk);
    detail::check_bandwidth(bandwidth);
    const std::size_t n = s.size();
    std::vector<double> keys(n);
    for (std::size_t i = 0; i < n; ++i) keys[i] = s.h(i) / s.g(i);
    const RatioOrder order = make_ratio_order(keys);

    std::size_t k = 1;
    double used = s.g(order.perm[0]) * peak[order.perm[0]];
    while (used < q_pk && k <= n - 1) {
        ++k;
        const std::size_t u = order.perm[k - 1];
        used += s.g(u) * peak[u];
    }

    SolveOutcome out;
    out.p.assign(n, 0.0);
    double before = 0.0;
    for (std::size_t r = 1; r < k; ++r) {
        const std::size_t u = order.perm[r - 1];
        out.p[u] = peak[u];
        before += s.g(u) * peak[u];
    }
    const std::size_t uk = order.perm[k - 1];
    out.p[uk] = std::max(0.0, std::min(peak[uk], (q_pk - before) / s.g(uk)));
    out.tag = CaseTag::PtpPip;
    out.pivot = k;

    double snr = 0.0, interference = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        snr += s.h(i) * out.p[i];
        interference += s.g(i) * out.p[i];
    }
    const bool tight = q_pk - interference <= kFeasTol * std::max(1.0, q_pk);
    out.inner_dual = tight ? s.h(uk) / (s.g(uk) * (1.0 + snr / bandwidth)) : 0.0;
    return out;
}

/// Average transmit with average interference power: per-state subproblem
/// at multipliers (lambda, mu). At most the user with the largest
/// h/(lambda + mu g) transmits.
inline SolveOutcome solve_atp_aip_sub(const FadingState& s, const DualVariables& duals, double bandwidth) {
    duals.validate();
    detail::check_bandwidth(bandwidth);
    detail::require(duals.lambda.size() == s.size(), ErrorCode::DimensionMismatch, "lambda size");
    std::vector<double> c(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) c[i] = duals.lambda[i] + duals.mu * s.g(i);
    return detail::single_waterfill(s, c, bandwidth, CaseTag::AtpAipCase1, CaseTag::AtpAipCase2);
}

/// Peak transmit with average interference power: per-state subproblem at
/// interference price mu. mu = 0 leaves the objective increasing, so every
/// user goes to peak.
inline SolveOutcome solve_ptp_aip_sub(const FadingState& s, double mu, std::span<const double> peak,
                                      double bandwidth) {
    detail::require(std::isfinite(mu) && mu >= 0.0, ErrorCode::InvalidArgument, "mu must be nonnegative");
    detail::check_peaks(s, peak);
    detail::check_bandwidth(bandwidth);
    if (mu == 0.0) {
        SolveOutcome out;
        out.p.assign(peak.begin(), peak.end());
        out.tag = CaseTag::PtpAipC2;
        out.pivot = s.size();
        return out;
    }
    std::vector<double> c(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) c[i] = mu * s.g(i);
    return detail::peak_waterfill(s, c, peak, bandwidth, CaseTag::PtpAipCase1, CaseTag::PtpAipC1,
                                  CaseTag::PtpAipC2);
}

namespace detail {

inline SolveOutcome atp_pip_with_price(const FadingState& s, std::span<const double> c, double q_pk,
                                       double bandwidth) {
    const std::size_t n = s.size();
    SolveOutcome out;
    out.p.assign(n, 0.0);
    if (all_priced_out(s, c)) {
        out.tag = CaseTag::AtpPipCase1;
        return out;
    }
    const RatioOrder order = make_ratio_order(keys_h_over(s, c));
    const std::size_t top = order.perm.front();

    // Case 2: the unconstrained single-user optimum already respects the limit.
    if (c[top] > 0.0) {
        const double p_top = bandwidth * (1.0 / c[top] - 1.0 / s.h(top));
        if (s.g(top) * p_top <= q_pk) {
            out.p[top] = p_top;
            out.tag = CaseTag::AtpPipCase2;
            out.inner_dual = 0.0;
            out.pivot = 1;
            return out;
        }
    }

    // Case 3: the interference limit binds.
    std::optional<Candidate> best;
    CaseTag tag = CaseTag::AtpPipCase3_1;
    if (auto one = pip_single_user(s, c, q_pk, bandwidth)) {
        best = std::move(one);
    }

    const std::vector<double> no_peak(n, std::numeric_limits<double>::infinity());
    std::optional<Candidate> pair;
    std::size_t pj = 0, pk = 0;
    for (std::size_t j = 0; j + 1 < n; ++j)
        for (std::size_t k = j + 1; k < n; ++k) {
            auto cand = two_user_split(s, c, no_peak, q_pk, bandwidth, j, k, PeakSet{});
            if (cand && better(pair, *cand)) {
                pair = std::move(cand);
                pj = j;
                pk = k;
            }
        }
    if (pair && pair_is_kkt(s, c, *pair, pj, pk) && better(best, *pair)) {
        best = std::move(pair);
        tag = CaseTag::AtpPipCase3_2;
    }
    if (!best) throw Error(ErrorCode::NoCaseFound, "average transmit with peak interference");
    out.p = std::move(best->p);
    out.tag = tag;
    out.inner_dual = best->dual;
    return out;
}

inline SolveOutcome combined_with_price(const FadingState& s, std::span<const double> c,
                                        std::span<const double> peak, double q_pk, double bandwidth) {
    const std::size_t n = s.size();
    SolveOutcome out;
    out.p.assign(n, 0.0);
    if (all_priced_out(s, c)) {
        out.tag = CaseTag::CombinedCase1;
        return out;
    }

    // Case 2: drop the interference limit and keep the result if it fits.
    {
        SolveOutcome relaxed = peak_waterfill(s, c, peak, bandwidth, CaseTag::CombinedCase1,
                                              CaseTag::CombinedCase2C1, CaseTag::CombinedCase2C2);
        double interference = 0.0;
        for (std::size_t i = 0; i < n; ++i) interference += s.g(i) * relaxed.p[i];
        if (interference <= q_pk) {
            relaxed.inner_dual = 0.0;
            return relaxed;
        }
    }

    const auto& masks = ordered_masks(n);
    const auto g_sum = mask_sums(s.g(), peak);
    const auto h_sum = mask_sums(s.h(), peak);
    const auto c_sum = mask_sums(c, peak);
    auto peak_set = [&](std::uint32_t m) { return PeakSet{m, g_sum[m], h_sum[m], c_sum[m]}; };

    // Case 3.1: one fractional user k, a peak set N1, the rest off.
    std::optional<Candidate> best;
    std::uint32_t best_n1 = 0;
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::uint32_t bit_k = std::uint32_t{1} << k;
        std::optional<double> value_k;
        std::uint32_t n1_k = 0;
        double pk_k = 0.0;
        for (std::uint32_t m : masks) {
            if (m & bit_k) continue;
            const double pk = (q_pk - g_sum[m]) / s.g(k);
            if (!(peak[k] > pk && pk > kPosTol)) continue;
            const double v = bandwidth * std::log1p((s.h(k) * pk + h_sum[m]) / bandwidth) - c[k] * pk - c_sum[m];
            if (!value_k || v > *value_k) {
                value_k = v;
                n1_k = m;
                pk_k = pk;
            }
        }
        if (value_k && (!best || *value_k > best->value)) {
            Candidate cand;
            cand.value = *value_k;
            cand.p.assign(n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                if (n1_k >> i & 1U) cand.p[i] = peak[i];
            cand.p[k] = pk_k;
            best = std::move(cand);
            best_n1 = n1_k;
            best_k = k;
        }
    }
    std::optional<Candidate> single;
    if (best) {
        const std::size_t k = best_k;
        double snr = 0.0;
        for (std::size_t i = 0; i < n; ++i) snr += s.h(i) * best->p[i];
        const double denom = 1.0 + snr / bandwidth;
        const double beta = (s.h(k) / s.g(k)) / denom - c[k] / s.g(k);
        bool ok = beta >= -tol_for(beta);
        for (std::size_t i = 0; ok && i < n; ++i) {
            if (i == k) continue;
            const double bound = (s.h(i) / s.g(i)) / denom - c[i] / s.g(i);
            const bool in_n1 = (best_n1 >> i & 1U) != 0;
            if (in_n1 && beta > bound + tol_for(bound)) ok = false;
            if (!in_n1 && beta < bound - tol_for(bound)) ok = false;
        }
        if (ok) {
            best->dual = std::max(0.0, beta);
            single = std::move(best);
        }
    }

    // Case 3.2: two fractional users j, k, a peak set N1, the rest off.
    std::optional<Candidate> pair;
    std::size_t pj = 0, pk = 0;
    for (std::size_t j = 0; j + 1 < n; ++j)
        for (std::size_t k = j + 1; k < n; ++k) {
            const std::uint32_t pair_bits = (std::uint32_t{1} << j) | (std::uint32_t{1} << k);
            for (std::uint32_t m : masks) {
                if (m & pair_bits) continue;
                auto cand = two_user_split(s, c, peak, q_pk, bandwidth, j, k, peak_set(m));
                if (cand && better(pair, *cand)) {
                    pair = std::move(cand);
                    pj = j;
                    pk = k;
                }
            }
        }

    CaseTag tag = CaseTag::CombinedCase3_1;
    std::optional<Candidate> chosen = std::move(single);
    if (pair && pair_is_kkt(s, c, *pair, pj, pk) && better(chosen, *pair)) {
        chosen = std::move(pair);
        tag = CaseTag::CombinedCase3_2;
    }
    if (!chosen) throw Error(ErrorCode::NoCaseFound, "combined peak and average constraints");
    out.p = std::move(chosen->p);
    out.tag = tag;
    out.inner_dual = chosen->dual;
    return out;
}

} // namespace detail

/// Average transmit with peak interference power: per-state subproblem at
/// transmit prices lambda. The optimum is all-off (Case 1), the single best
/// user when its water-filling level fits the limit (Case 2), or, with the
/// limit binding, one user at Q/g (Case 3.1) or two users sharing it
/// (Case 3.2). inner_dual carries the interference multiplier.
inline SolveOutcome solve_atp_pip_sub(const FadingState& s, std::span<const double> lambda, double q_pk,
                                      double bandwidth) {
    detail::require(lambda.size() == s.size(), ErrorCode::DimensionMismatch, "lambda size");
    detail::require_nonneg_finite(lambda, "lambda must be nonnegative");
    detail::check_interference(q_pk);
    detail::check_bandwidth(bandwidth);
    return detail::atp_pip_with_price(s, lambda, q_pk, bandwidth);
}

/// All four constraints, per-state subproblem at (lambda, mu). The peak
/// interference limit is handled exactly through its multiplier beta,
/// enumerating peak sets N1 around one (Case 3.1) or two (Case 3.2)
/// fractional users. Cost grows as N 2^(N-1); meant for N up to about 12.
inline SolveOutcome solve_combined_sub(const FadingState& s, const DualVariables& duals,
                                       std::span<const double> peak, double q_pk, double bandwidth) {
    duals.validate();
    detail::require(duals.lambda.size() == s.size(), ErrorCode::DimensionMismatch, "lambda size");
    detail::check_peaks(s, peak);
    detail::check_interference(q_pk);
    detail::check_bandwidth(bandwidth);
    std::vector<double> c(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) c[i] = duals.lambda[i] + duals.mu * s.g(i);
    return detail::combined_with_price(s, c, peak, q_pk, bandwidth);
}

/// Routes a fading state to the solver matching the combination. Average
/// constraints enter only through the price lambda_i + mu g_i, so
/// combinations with the same per-state constraints share a solver.
inline SolveOutcome dispatch(const FadingState& s, const ConstraintSet& cs, const DualVariables& duals) {
    cs.validate(s.size());
    if (cs.has_atp()) detail::require_nonneg_finite(duals.lambda, "lambda must be nonnegative");
    if (cs.has_aip())
        detail::require(std::isfinite(duals.mu) && duals.mu >= 0.0, ErrorCode::InvalidArgument,
                        "mu must be nonnegative");
    const double w = cs.bandwidth;
    if (cs.has_ptp() && cs.has_pip()) {
        if (!cs.has_average()) return solve_ptp_pip(s, *cs.ptp, *cs.pip, w);
        return detail::combined_with_price(s, price_vector(s, cs, duals), *cs.ptp, *cs.pip, w);
    }
    if (cs.has_ptp()) {
        const auto c = price_vector(s, cs, duals);
        if (std::all_of(c.begin(), c.end(), [](double x) { return x == 0.0; }))
            return solve_ptp_aip_sub(s, 0.0, *cs.ptp, w);
        return detail::peak_waterfill(s, c, *cs.ptp, w, CaseTag::PtpAipCase1, CaseTag::PtpAipC1,
                                      CaseTag::PtpAipC2);
    }
    if (cs.has_pip()) return detail::atp_pip_with_price(s, price_vector(s, cs, duals), *cs.pip, w);
    return detail::single_waterfill(s, price_vector(s, cs, duals), w, CaseTag::AtpAipCase1,
                                    CaseTag::AtpAipCase2);
}

} // namespace crfdma
