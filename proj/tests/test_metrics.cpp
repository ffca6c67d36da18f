#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "rvc/errors.hpp"
#include "rvc/metrics.hpp"

using namespace rvc;
using namespace rvc::metrics;

namespace {
IntervalSeries series3(std::initializer_list<double> t, std::initializer_list<double> h,
                       std::initializer_list<double> w) {
  IntervalSeries s;
  s.truth = Eigen::Map<const Eigen::VectorXd>(t.begin(), static_cast<long>(t.size()));
  s.hat = Eigen::Map<const Eigen::VectorXd>(h.begin(), static_cast<long>(h.size()));
  s.half_width = Eigen::Map<const Eigen::VectorXd>(w.begin(), static_cast<long>(w.size()));
  return s;
}
}  // namespace

TEST_CASE("rmse hand-computed values") {
  Eigen::VectorXd t(2), h(2);
  t << 3.0, 4.0;
  h << 3.0, 4.0;
  CHECK(rmse(t, h) == 0.0);
  h << 0.0, 0.0;
  CHECK(rmse(t, h) == doctest::Approx(1.0).epsilon(1e-15));
  h << 3.0, 0.0;
  CHECK(rmse(t, h) == doctest::Approx(0.8).epsilon(1e-15));
  Eigen::VectorXd z = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(rmse(z, h), ZeroNormTruth);
}

TEST_CASE("picp counts interval hits") {
  auto all_in = series3({1, 2, 3}, {1.1, 1.9, 3.0}, {0.2, 0.2, 0.2});
  CHECK(picp(all_in) == 1.0);
  auto none_in = series3({1, 2, 3}, {2, 3, 4}, {0.5, 0.5, 0.5});
  CHECK(picp(none_in) == 0.0);

  IntervalSeries s;
  s.truth = Eigen::VectorXd::Zero(10);
  s.hat = Eigen::VectorXd::Zero(10);
  s.half_width = Eigen::VectorXd::Constant(10, 0.1);
  s.hat(7) = 1.0;  // one miss
  CHECK(picp(s) == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("pinaw closed forms") {
  // constant width w with truth max m -> 2w/m
  auto s = series3({1.0, 2.0, 1.5}, {1, 2, 1.5}, {0.3, 0.3, 0.3});
  CHECK(pinaw(s) == doctest::Approx(0.6 / 2.0).epsilon(1e-15));

  auto z = series3({1.0, 2.0}, {1, 2}, {0.0, 0.0});
  CHECK(pinaw(z) == 0.0);

  // widths alternating 1,3 with max 2 and M=2: (2+6)/(2*2) = 2
  auto alt = series3({2.0, 1.0}, {2, 1}, {1.0, 3.0});
  CHECK(pinaw(alt) == doctest::Approx(2.0).epsilon(1e-15));

  auto bad = series3({0.0, 0.0}, {0, 0}, {1.0, 1.0});
  CHECK_THROWS_AS(pinaw(bad), ZeroMax);
}

TEST_CASE("cwc equals pinaw when coverage meets the target (default)") {
  CHECK(cwc(1.0, 11.75, 0.99, 50.0) == doctest::Approx(11.75).epsilon(1e-12));
  CHECK(cwc(1.0, 3.60, 0.99, 50.0) == doctest::Approx(3.60).epsilon(1e-12));
  CHECK(cwc(0.99, 5.0, 0.99, 50.0) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("cwc penalty branch evaluates the printed formula") {
  // 1.44 * (1 + 0.9 * e^{-50 (0.9 - 0.99)}) = 1.44 * (1 + 0.9 e^{4.5})
  const double expect = 1.44 * (1.0 + 0.9 * std::exp(4.5));
  CHECK(cwc(0.9, 1.44, 0.99, 50.0) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(expect == doctest::Approx(118.1).epsilon(1e-3));
}

TEST_CASE("printed convention differs exactly at high coverage") {
  // as printed, eta = 1 for PICP > alpha, so the term survives
  const double printed = cwc(1.0, 11.75, 0.99, 50.0, CwcConvention::AsPrinted);
  CHECK(printed == doctest::Approx(11.75 * (1.0 + std::exp(-0.5))).epsilon(1e-12));
  // and vanishes for PICP <= alpha
  CHECK(cwc(0.9, 1.44, 0.99, 50.0, CwcConvention::AsPrinted) ==
        doctest::Approx(1.44).epsilon(1e-12));
}

TEST_CASE("cwc dominates pinaw under the default convention") {
  for (double p : {0.0, 0.3, 0.9, 0.95, 0.99, 1.0})
    CHECK(cwc(p, 2.5, 0.99, 50.0) >= 2.5 - 1e-15);
}

TEST_CASE("widening intervals raises picp weakly and pinaw strictly") {
  IntervalSeries s;
  s.truth = Eigen::VectorXd::LinSpaced(20, 0.5, 2.0);
  s.hat = s.truth.array() + 0.1;
  s.half_width = Eigen::VectorXd::Constant(20, 0.05);
  const double p1 = picp(s), w1 = pinaw(s);
  s.half_width.array() += 0.1;
  const double p2 = picp(s), w2 = pinaw(s);
  CHECK(p2 >= p1);
  CHECK(w2 > w1);
}
