#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <gtest/gtest.h>

#include "cvrr/mcsim.hpp"

using namespace cvrr;

namespace {

ChartDesign design(RunRule rule, Direction dir, double g, int n, const MeasurementErrorModel& me = {}) {
  return solve_design(rule, dir, {g, n}, me, kDefaultArl0);
}

}  // namespace

TEST(CounterRng, StreamsIgnoreConsumptionOrder) {
  CounterRng a(5, 3);
  std::vector<std::uint64_t> first;
  for (int i = 0; i < 10; ++i) first.push_back(a());
  CounterRng other(5, 2);
  for (int i = 0; i < 100; ++i) other();
  CounterRng b(5, 3);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(b(), first[i]);
  CounterRng c(6, 3);
  EXPECT_NE(c(), first[0]);
}

TEST(EstimateRunLength, DeterministicForSeed) {
  const ChartDesign d = design({2, 3}, Direction::lower, 0.1, 5);
  SimConfig cfg;
  cfg.replications = 2000;
  const SimResult a = estimate_run_length(d, 0.6, cfg);
  const SimResult b = estimate_run_length(d, 0.6, cfg);
  EXPECT_EQ(a.metrics.arl, b.metrics.arl);
  EXPECT_EQ(a.metrics.sdrl, b.metrics.sdrl);
  cfg.seed += 1;
  EXPECT_NE(estimate_run_length(d, 0.6, cfg).metrics.arl, a.metrics.arl);
  EXPECT_EQ(a.metrics.method, MetricMethod::monte_carlo);
  ASSERT_TRUE(a.metrics.standard_error.has_value());
}

TEST(EstimateRunLength, AgreesWithExactChain) {
  SimConfig cfg;
  cfg.replications = 1'000'000;
  const ChartDesign d = design({2, 3}, Direction::lower, 0.05, 5);
  const SimResult sim = estimate_run_length(d, 0.5, cfg);
  const double exact = arl_at_shift(d, 0.5).arl;
  EXPECT_NEAR(sim.metrics.arl, exact, 3 * *sim.metrics.standard_error);
  EXPECT_EQ(sim.truncated, 0u);
}

TEST(EstimateRunLength, AgreesWithExactChainUnderMeasurementError) {
  SimConfig cfg;
  cfg.replications = 200'000;
  struct Cell {
    RunRule rule;
    Direction dir;
    double tau;
    MeasurementErrorModel me;
  };
  const Cell cells[] = {{{3, 4}, Direction::upper, 1.6, {0.05, 0.28, 1.0, 1}},
                        {{4, 5}, Direction::lower, 0.6, {0.02, 0.5, 1.1, 3}},
                        {{2, 3}, Direction::upper, 2.0, {0.0, 1.0, 0.9, 2}}};
  for (const Cell& c : cells) {
    const ChartDesign d = design(c.rule, c.dir, 0.1, 5, c.me);
    const SimResult sim = estimate_run_length(d, c.tau, cfg);
    EXPECT_NEAR(sim.metrics.arl, arl_at_shift(d, c.tau).arl, 3 * *sim.metrics.standard_error)
        << c.rule.label();
  }
}

TEST(EstimateRunLength, CertainSignalRunsHaveLengthR) {
  for (const RunRule& rule : {RunRule{2, 3}, RunRule{3, 4}, RunRule{4, 5}}) {
    const ChartDesign d = ChartDesign::with_limit(rule, Direction::upper, {0.1, 5}, {}, 0.0);
    SimConfig cfg;
    cfg.replications = 1000;
    const SimResult sim = estimate_run_length(d, 1.0, cfg);
    EXPECT_EQ(sim.metrics.arl, rule.r);
    EXPECT_EQ(sim.metrics.sdrl, 0.0);
  }
}

TEST(EstimateRunLength, TruncationIsReported) {
  const ChartDesign d = design({2, 3}, Direction::upper, 0.1, 5);
  SimConfig cfg;
  cfg.replications = 500;
  cfg.max_run_length = 5;
  const SimResult sim = estimate_run_length(d, 1.0, cfg);
  EXPECT_GT(sim.truncated, 0u);
  EXPECT_LE(sim.metrics.arl, 5.0);
}

TEST(EstimateRunLength, RejectsZeroReplications) {
  const ChartDesign d = design({2, 3}, Direction::upper, 0.1, 5);
  SimConfig cfg;
  cfg.replications = 0;
  EXPECT_THROW(estimate_run_length(d, 1.0, cfg), DomainError);
}

TEST(SubgroupSampler, EmpiricalLawMatchesCv2Cdf) {
  const int n = 5;
  const double g = 0.1;
  SubgroupSampler sampler(n, g, ShiftSpec::none(), {});
  CounterRng rng(99, 0);
  std::vector<double> xs(1'000'000);
  for (double& x : xs) x = sampler(rng);
  std::sort(xs.begin(), xs.end());
  double dmax = 0.0;
  const double count = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); i += 1) {
    const double f = cv2_cdf(xs[i], n, g);
    dmax = std::max({dmax, std::abs(f - i / count), std::abs((i + 1) / count - f)});
  }
  EXPECT_LT(dmax * std::sqrt(count), 1.9495);  // Kolmogorov critical value, alpha = 0.001
}

TEST(SubgroupSampler, MeanMatchesExactLaw) {
  const int n = 5;
  const double g = 0.1;
  boost::math::quadrature::exp_sinh<double> integrator;
  const double exact_mean = integrator.integrate([&](double x) { return 1.0 - cv2_cdf(x, n, g); });
  SubgroupSampler sampler(n, g, ShiftSpec::none(), {});
  CounterRng rng(1, 0);
  const std::size_t count = 10'000'000;
  double s = 0, ss = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const double v = sampler(rng);
    s += v;
    ss += v * v;
  }
  const double mean = s / count;
  const double se = std::sqrt((ss / count - mean * mean) / count);
  EXPECT_NEAR(mean, exact_mean, 3 * se);
}

TEST(SubgroupSampler, ObservedCvMatchesErrorModel) {
  const int n = 2000;
  const double g = 0.2;
  const MeasurementErrorModel me{0.05, 0.28, 1.1, 2};
  SubgroupSampler sampler(n, g, ShiftSpec::none(), me);
  CounterRng rng(2, 0);
  const std::size_t count = 10'000;
  double s = 0, ss = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const double v = sampler(rng);
    s += v;
    ss += v * v;
  }
  const double mean = s / count;
  const double se = std::sqrt((ss / count - mean * mean) / count);
  const double gs = observed_cv_incontrol(g, me);
  EXPECT_NEAR(mean, gs * gs, 3 * se);
}
