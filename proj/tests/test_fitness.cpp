#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

#include "ccl/fitness.hpp"
#include "ccl/rng.hpp"
#include "oracles.hpp"

using namespace ccl;

TEST(SigmoidFitness, PeaksAtHalf) { EXPECT_EQ(sigmoid_fitness(0.5), 0.5); }

TEST(SigmoidFitness, ZeroRate) {
    // 1 / (1 + e^{2 * 0.5})
    EXPECT_NEAR(sigmoid_fitness(0.0), 0.2689414213699951, 1e-15);
    EXPECT_NEAR(sigmoid_fitness(0.0), 1.0 / (1.0 + std::exp(1.0)), 1e-15);
}

TEST(SigmoidFitness, SymmetricAndDecreasing) {
    EXPECT_EQ(sigmoid_fitness(0.2), sigmoid_fitness(0.8));
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double r = rng.uniform();
        EXPECT_NEAR(sigmoid_fitness(r), sigmoid_fitness(1.0 - r), 1e-12);
        const double a = 0.5 + 0.5 * rng.uniform();
        const double b = 0.5 + 0.5 * rng.uniform();
        if (a < b) {
            EXPECT_GT(sigmoid_fitness(a), sigmoid_fitness(b));
        }
    }
}

TEST(SigmoidFitness, RangeIsHalfOpenUnitHalf) {
    for (double r = 0.0; r <= 1.0; r += 0.01) {
        const double f = sigmoid_fitness(r);
        EXPECT_GT(f, 0.0);
        EXPECT_LE(f, 0.5);
    }
}

TEST(SigmoidFitness, RejectsRatesOutsideUnitInterval) {
    EXPECT_THROW(sigmoid_fitness(-0.01), std::domain_error);
    EXPECT_THROW(sigmoid_fitness(1.01), std::domain_error);
    EXPECT_THROW(linear_fitness(2.0), std::domain_error);
    EXPECT_THROW(sigmoid_fitness(std::nan("")), std::domain_error);
}

TEST(LinearFitness, Values) {
    EXPECT_EQ(linear_fitness(0.5), 0.0);
    EXPECT_EQ(linear_fitness(1.0), -0.5);
    EXPECT_DOUBLE_EQ(linear_fitness(0.3), linear_fitness(0.7));
    FitnessParams p;
    p.linear_slope = 3.0;
    EXPECT_NEAR(linear_fitness(0.0, p), -1.5, 1e-15);
}

TEST(LiteralSigmoid, IsMinimalAtHalf) {
    EXPECT_EQ(literal_sigmoid_fitness(0.5), 0.5);
    EXPECT_GT(literal_sigmoid_fitness(0.0), literal_sigmoid_fitness(0.4));
}

TEST(FitnessDispatch, FollowsMode) {
    FitnessParams p;
    EXPECT_EQ(fitness(0.1, p), sigmoid_fitness(0.1, p));
    p.mode = FitnessMode::linear;
    EXPECT_EQ(fitness(0.1, p), linear_fitness(0.1, p));
    p.mode = FitnessMode::sigmoid_literal;
    EXPECT_EQ(fitness(0.1, p), literal_sigmoid_fitness(0.1, p));
}

TEST(FitnessParams, Validation) {
    FitnessParams p;
    p.gain = 0.0;
    EXPECT_THROW(p.validate(), ConfigError);
    p.gain = 2.0;
    p.linear_slope = -1.0;
    EXPECT_THROW(p.validate(), ConfigError);
}

TEST(KnnEstimate, ExactNeighbour) {
    const PrototypeSet protos{{{0.1, 0.2}, 0.7}, {{0.9, 0.9}, 0.1}};
    EXPECT_EQ(knn_estimate(std::vector<double>{0.1, 0.2}, protos, 1), 0.7);
}

TEST(KnnEstimate, EquidistantPair) {
    const PrototypeSet protos{{{0.0, 0.0}, 0.3}, {{1.0, 0.0}, 0.5}, {{5.0, 5.0}, 0.9}};
    EXPECT_NEAR(knn_estimate(std::vector<double>{0.5, 0.0}, protos, 2), 0.4, 1e-15);
}

TEST(KnnEstimate, FullSetIsMean) {
    const PrototypeSet protos{{{0.0}, 0.1}, {{1.0}, 0.2}, {{2.0}, 0.6}};
    EXPECT_NEAR(knn_estimate(std::vector<double>{17.0}, protos, 3), 0.3, 1e-15);
}

TEST(KnnEstimate, TiesGoToLowerIndex) {
    const PrototypeSet protos{{{1.0}, 0.1}, {{-1.0}, 0.9}};
    EXPECT_EQ(knn_estimate(std::vector<double>{0.0}, protos, 1), 0.1);
}

TEST(KnnEstimate, ConfigurationErrors) {
    const PrototypeSet empty;
    EXPECT_THROW(knn_estimate(std::vector<double>{0.0}, empty, 1), ConfigError);
    const PrototypeSet one{{{0.0}, 0.1}};
    EXPECT_THROW(knn_estimate(std::vector<double>{0.0}, one, 2), ConfigError);
    EXPECT_THROW(knn_estimate(std::vector<double>{0.0}, one, 0), ConfigError);
}

TEST(KnnEstimate, MatchesBruteForceOracle) {
    Rng rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t m = 1 + rng.index(100);
        const std::size_t dim = 1 + rng.index(8);
        const std::size_t k = 1 + rng.index(std::min<std::size_t>(m, 10));
        std::vector<std::vector<double>> points(m, std::vector<double>(dim));
        std::vector<double> fit(m);
        PrototypeSet protos(m);
        for (std::size_t i = 0; i < m; ++i) {
            // Coarse coordinates so exact distance ties actually occur.
            for (double& c : points[i]) c = static_cast<double>(rng.index(4)) / 4.0;
            fit[i] = rng.uniform(-1.0, 1.0);
            protos[i] = {points[i], fit[i]};
        }
        std::vector<double> q(dim);
        for (double& c : q) c = static_cast<double>(rng.index(4)) / 4.0;

        const double got = knn_estimate(q, protos, k);
        EXPECT_EQ(got, oracle::brute_force_knn(q, points, fit, k)) << "trial " << trial;
        EXPECT_GE(got, *std::min_element(fit.begin(), fit.end()));
        EXPECT_LE(got, *std::max_element(fit.begin(), fit.end()));
    }
}

TEST(KnnEstimate, StaysWithinRangeForEqualValues) {
    const PrototypeSet protos{{{0.0}, 0.1}, {{1.0}, 0.1}, {{2.0}, 0.1}};
    EXPECT_EQ(knn_estimate(std::vector<double>{0.0}, protos, 3), 0.1);
}
