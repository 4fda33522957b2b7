#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "crfdma/experiment.hpp"
#include "crfdma/fading.hpp"
#include "crfdma/montecarlo.hpp"
#include "crfdma/rng.hpp"

using namespace crfdma;

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
               double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return simpson(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50);
}

std::vector<FadingState> sample(std::size_t n_users, std::size_t n_states, std::uint64_t seed = 1,
                                 double variance = 1.0) {
    FadingModel m;
    m.n_users = n_users;
    m.n_states = n_states;
    m.seed = seed;
    m.variance = variance;
    return generate_states(m);
}

} // namespace

TEST(Philox, KnownAnswerVectors) {
    const Philox4x32 zero(Philox4x32::Key{0, 0});
    EXPECT_EQ(zero({0, 0, 0, 0}), (Philox4x32::Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    const Philox4x32 ones(Philox4x32::Key{0xffffffff, 0xffffffff});
    EXPECT_EQ(ones({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}),
              (Philox4x32::Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
}

TEST(Philox, UnitOpenInterval) {
    EXPECT_GT(to_unit_open(0), 0.0);
    EXPECT_LT(to_unit_open(~std::uint64_t{0}), 1.0);
}

TEST(GenerateStates, DeterministicAndIndexAddressed) {
    const auto a = sample(4, 300, 99);
    const auto b = sample(4, 300, 99);
    EXPECT_EQ(a, b);
    FadingModel m;
    m.n_users = 4;
    m.seed = 99;
    for (std::size_t t : {0u, 17u, 299u}) EXPECT_EQ(draw_state(m, t), a[t]);
    EXPECT_NE(sample(4, 300, 100), a);
}

TEST(GenerateStates, PositiveGainsWithoutTies) {
    const auto states = sample(4, 1000);
    ASSERT_EQ(states.size(), 1000u);
    for (const auto& s : states) {
        ASSERT_EQ(s.size(), 4u);
        for (std::size_t i = 0; i < 4; ++i) {
            EXPECT_GT(s.h(i), 0.0);
            EXPECT_GT(s.g(i), 0.0);
        }
        EXPECT_TRUE(has_distinct_ratios(s));
    }
}

TEST(GenerateStates, ExponentialMean) {
    for (double variance : {1.0, 2.5}) {
        const auto states = sample(1, 1'000'000, 3, variance);
        double sh = 0.0, sg = 0.0;
        for (const auto& s : states) {
            sh += s.h(0);
            sg += s.g(0);
        }
        EXPECT_NEAR(sh / 1e6, variance, 0.01 * variance);
        EXPECT_NEAR(sg / 1e6, variance, 0.01 * variance);
    }
}

TEST(GenerateStates, RejectsBadModel) {
    FadingModel m;
    m.n_states = 0;
    EXPECT_THROW(generate_states(m), Error);
    m.n_states = 10;
    m.variance = -1.0;
    EXPECT_THROW(generate_states(m), Error);
}

TEST(EstimateCapacity, VanishingPowerGivesVanishingCapacity) {
    const auto states = sample(4, 200);
    const auto cs = parse_combination("ptp+pip", 4, 1e-12, 0.0, 1.0, 0.0, 1.0);
    const auto pt = estimate_capacity(states, cs);
    EXPECT_GE(pt.capacity_obpa, 0.0);
    EXPECT_LT(pt.capacity_obpa, 1e-10);
}

TEST(EstimateCapacity, SingleUserMatchesQuadrature) {
    const double peak = 10.0, bw = 1.0;
    // E{W ln(1 + h P / W)} for h ~ Exp(1) equals W e^{W/P} E1(W/P).
    const double closed = bw * std::exp(bw / peak) * -std::expint(-bw / peak);
    const double quad = integrate([&](double x) { return bw * std::log1p(x * peak / bw) * std::exp(-x); }, 0.0,
                                  60.0, 1e-12);
    EXPECT_NEAR(closed, quad, 1e-9);

    const auto states = sample(1, 100'000, 8);
    const auto cs = parse_combination("ptp+pip", 1, peak, 0.0, 1e12, 0.0, bw);
    const auto pt = estimate_capacity(states, cs);
    double s2 = 0.0;
    for (const auto& s : states) {
        const double r = bw * std::log1p(s.h(0) * peak / bw) - pt.capacity_obpa;
        s2 += r * r;
    }
    const double se = std::sqrt(s2 / (states.size() - 1.0) / states.size());
    EXPECT_LE(std::abs(pt.capacity_obpa - quad), 3.0 * se);
}

TEST(EstimateCapacity, DefaultRegressionBaseline) {
    const auto states = sample(4, 1000);
    const auto cs = parse_combination("ptp+pip", 4, 10.0, 10.0, 1.0, 1.0, 1.0);
    const auto pt = estimate_capacity(states, cs);
    EXPECT_GT(pt.capacity_obpa, 0.0);
    EXPECT_NEAR(pt.capacity_obpa, 1.8750023744915667, 1e-12);
}

TEST(EstimateCapacity, DualsRequiredExactlyForAverageConstraints) {
    const auto states = sample(2, 20);
    const auto peak = parse_combination("ptp+pip", 2, 1.0, 1.0, 1.0, 1.0, 1.0);
    const auto avg = parse_combination("atp+aip", 2, 1.0, 1.0, 1.0, 1.0, 1.0);
    const DualVariables d{{0.5, 0.5}, 0.5};
    EXPECT_THROW(estimate_capacity(states, peak, d), Error);
    EXPECT_THROW(estimate_capacity(states, avg), Error);
    EXPECT_NO_THROW(estimate_capacity(states, avg, d));
}

TEST(CapacityReport, SlacksAndAverages) {
    const std::vector<FadingState> states{FadingState({1.0, 2.0}, {1.0, 0.5}), FadingState({2.0, 1.0}, {0.5, 1.0})};
    const auto cs = parse_combination("ptp+atp+pip+aip", 2, 1.0, 0.8, 1.0, 0.9, 1.0);
    const std::vector<std::vector<double>> powers{{0.5, 1.0}, {1.0, 0.0}};
    const auto r = capacity_report(states, cs, powers);
    EXPECT_NEAR(r.avg_power[0], 0.75, 1e-15);
    EXPECT_NEAR(r.avg_power[1], 0.5, 1e-15);
    EXPECT_NEAR(r.avg_interference, (1.0 + 0.5) / 2.0, 1e-15);
    EXPECT_NEAR(r.per_constraint_slack.at("atp"), 0.05, 1e-15);
    EXPECT_NEAR(r.per_constraint_slack.at("aip"), 0.15, 1e-15);
    EXPECT_NEAR(r.per_constraint_slack.at("ptp"), 0.0, 1e-15);
    EXPECT_NEAR(r.per_constraint_slack.at("pip"), 0.0, 1e-15);
    const double expected = 0.5 * (reduced_rate(states[0], powers[0], 1.0) + reduced_rate(states[1], powers[1], 1.0));
    EXPECT_NEAR(r.sum_ergodic_capacity, expected, 1e-15);
}

TEST(Ebpa, SingleUserEqualsOptimal) {
    const auto states = sample(1, 500);
    const auto cs = parse_combination("ptp+pip", 1, 10.0, 0.0, 1.0, 0.0, 1.0);
    const auto pt = ebpa_baseline(states, cs);
    EXPECT_NEAR(*pt.capacity_ebpa, pt.capacity_obpa, 1e-12);
}

TEST(Ebpa, SymmetricStateEqualBudget) {
    const std::vector<FadingState> states{FadingState({1.0, 1.0, 1.0}, {0.5, 0.5, 0.5})};
    const auto cs = parse_combination("ptp+pip", 3, 10.0, 0.0, 1.0, 0.0, 1.0);
    const double p = std::min(10.0, 1.0 / (3 * 0.5));
    const auto pt = ebpa_baseline(states, cs);
    EXPECT_TRUE(std::isnan(pt.capacity_obpa)); // tied ratios: no optimal reference
    EXPECT_NEAR(pt.diagnostics.avg_power[0], p, 1e-15);
    EXPECT_NEAR(pt.diagnostics.avg_power[2], p, 1e-15);
    EXPECT_NEAR(*pt.capacity_ebpa, 3.0 * (1.0 / 3.0) * std::log1p(p * 3.0), 1e-14);
}

TEST(Ebpa, NeverBeatsOptimal) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto states = sample(4, 1000, seed);
        for (double peak : {1.0, 5.0, 10.0, 20.0}) {
            const auto cs = parse_combination("ptp+pip", 4, peak, 0.0, 1.0, 0.0, 1.0);
            const auto pt = ebpa_baseline(states, cs);
            EXPECT_LE(*pt.capacity_ebpa, pt.capacity_obpa) << "seed " << seed;
        }
    }
}

TEST(Ebpa, RejectsAverageCombinations) {
    const auto states = sample(2, 10);
    EXPECT_THROW(ebpa_baseline(states, parse_combination("atp+aip", 2, 1.0, 1.0, 1.0, 1.0, 1.0)), Error);
}
