#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "crfdma/experiment.hpp"
#include "crfdma/fading.hpp"
#include "crfdma/oracle.hpp"
#include "crfdma/verify.hpp"

using namespace crfdma;

TEST(Oracle, PricedOutReturnsZero) {
    const FadingState s({1.0, 0.5}, {1.0, 1.0});
    OracleProblem prob;
    prob.price = {1.0, 0.7};
    const auto r = oracle_solve(s, prob);
    EXPECT_NEAR(r.p[0], 0.0, 1e-9);
    EXPECT_NEAR(r.p[1], 0.0, 1e-9);
}

TEST(Oracle, PeakAndInterferenceExample) {
    const FadingState s({2.0, 1.0}, {1.0, 1.0});
    OracleProblem prob;
    prob.peak = std::vector<double>{1.0, 1.0};
    prob.q_pk = 1.5;
    const auto r = oracle_solve(s, prob);
    EXPECT_NEAR(r.p[0], 1.0, 1e-5);
    EXPECT_NEAR(r.p[1], 0.5, 1e-5);
}

TEST(Oracle, AgreesWithDenseGrid) {
    std::mt19937_64 rng(41);
    std::exponential_distribution<double> ex(1.0);
    std::uniform_real_distribution<double> u(0.0, 0.6);
    for (int t = 0; t < 10; ++t) {
        const FadingState s({ex(rng) + 0.1, ex(rng) + 0.1}, {ex(rng) + 0.1, ex(rng) + 0.1});
        OracleProblem prob;
        prob.price = {u(rng), u(rng)};
        prob.peak = std::vector<double>{2.0, 2.0};
        prob.q_pk = 1.0;
        const auto r = oracle_solve(s, prob);
        double grid = -1e300;
        const int k = 800;
        for (int i = 0; i <= k; ++i) {
            const double p0 = 2.0 * i / k;
            for (int j = 0; j <= k; ++j) {
                const std::vector<double> p{p0, 2.0 * j / k};
                if (s.g(0) * p[0] + s.g(1) * p[1] > 1.0) continue;
                grid = std::max(grid, subproblem_value(s, p, prob.price, 1.0));
            }
            // points on the interference boundary, parameterized from both axes
            const double p1 = (1.0 - s.g(0) * p0) / s.g(1);
            if (p1 >= 0.0 && p1 <= 2.0)
                grid = std::max(grid, subproblem_value(s, std::vector<double>{p0, p1}, prob.price, 1.0));
            const double q0 = (1.0 - s.g(1) * p0) / s.g(0);
            if (q0 >= 0.0 && q0 <= 2.0)
                grid = std::max(grid, subproblem_value(s, std::vector<double>{q0, p0}, prob.price, 1.0));
        }
        EXPECT_GE(r.value, grid - 1e-12);
        EXPECT_LE(r.value - grid, 1e-4);
    }
}

TEST(Oracle, GuardsAndErrors) {
    std::vector<double> h(9, 1.0), g(9, 1.0);
    for (int i = 0; i < 9; ++i) h[i] += 0.1 * i;
    OracleProblem prob;
    prob.q_pk = 1.0;
    EXPECT_THROW(oracle_solve(FadingState(h, g), prob), Error);

    OracleProblem open;
    open.price = {0.0, 1.0};
    try {
        oracle_solve(FadingState({1.0, 2.0}, {1.0, 1.0}), open);
        FAIL() << "expected unbounded";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Unbounded);
    }
}

TEST(Projection, IsFeasibleAndNearest) {
    std::mt19937_64 rng(43);
    std::normal_distribution<double> nrm(0.0, 2.0);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    for (int t = 0; t < 500; ++t) {
        const std::size_t n = 1 + t % 6;
        std::vector<double> y(n), upper(n), g(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = nrm(rng);
            upper[i] = u(rng);
            g[i] = u(rng);
        }
        const double q = u(rng);
        std::vector<double> x = y;
        detail::project_box_halfspace(x, upper, g, q);
        double gx = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_GE(x[i], 0.0);
            EXPECT_LE(x[i], upper[i]);
            gx += g[i] * x[i];
        }
        EXPECT_LE(gx, q * (1.0 + 1e-12));
        // Variational inequality against random feasible points.
        for (int k = 0; k < 20; ++k) {
            std::vector<double> z(n);
            double gz = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                z[i] = std::uniform_real_distribution<double>(0.0, upper[i])(rng);
                gz += g[i] * z[i];
            }
            if (gz > q)
                for (double& zi : z) zi *= q / gz;
            double ip = 0.0;
            for (std::size_t i = 0; i < n; ++i) ip += (y[i] - x[i]) * (z[i] - x[i]);
            EXPECT_LE(ip, 1e-10);
        }
    }
}

TEST(Kkt, ZeroAllocationWhenPricedOut) {
    const FadingState s({1.0, 0.5}, {1.0, 1.0});
    const auto cs = parse_combination("atp+aip", 2, 1.0, 1.0, 1.0, 1.0, 1.0);
    const DualVariables d{{1.0, 0.5}, 0.1};
    const auto out = dispatch(s, cs, d);
    EXPECT_EQ(out.p, (std::vector<double>{0.0, 0.0}));
    EXPECT_TRUE(kkt_check(s, out, cs, d).passed());
}

TEST(Kkt, PerturbedOptimumFailsStationarity) {
    std::mt19937_64 rng(47);
    FadingModel model;
    model.n_states = 50;
    model.seed = 3;
    const auto states = generate_states(model);
    for (const std::string name : {"ptp+pip", "ptp+aip", "atp+pip", "atp+aip", "ptp+atp+pip+aip"}) {
        const auto cs = parse_combination(name, 4, 10.0, 10.0, 1.0, 1.0, 1.0);
        int detected = 0;
        for (std::size_t t = 0; t < states.size(); ++t) {
            DualVariables d = verification_duals(5, t, 4);
            if (!cs.has_atp()) d.lambda.assign(4, 0.0);
            if (!cs.has_aip()) d.mu = 0.0;
            auto out = dispatch(states[t], cs, d);
            ASSERT_TRUE(kkt_check(states[t], out, cs, d).passed());
            out.p[t % 4] += 1e-3 * std::max(1.0, out.p[t % 4]);
            if (!kkt_check(states[t], out, cs, d).passed()) ++detected;
        }
        EXPECT_EQ(detected, static_cast<int>(states.size())) << name;
    }
}

TEST(Kkt, BulkRandomStatesPass) {
    VerifyOptions opt;
    opt.seed = 2024;
    opt.n_states = 1000;
    const auto rep = run_verification(opt);
    EXPECT_EQ(rep.comparisons, 5000u);
    for (const auto& [name, tally] : rep.per_combination) EXPECT_EQ(tally.kkt_failures, 0u) << name;
    EXPECT_LE(rep.worst_kkt, kKktTol);
}

TEST(Verification, InjectedFaultIsCaught) {
    VerifyOptions opt;
    opt.n_states = 10;
    opt.inject_fault = true;
    EXPECT_FALSE(run_verification(opt).passed());
}
