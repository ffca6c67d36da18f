#pragma once

#include <Eigen/Dense>

namespace rvc::metrics {

/// Truth/estimate/half-width triplets over the steps of a run.
struct IntervalSeries {
  Eigen::VectorXd truth;
  Eigen::VectorXd hat;
  Eigen::VectorXd half_width;

  int steps() const { return static_cast<int>(truth.size()); }
  void validate() const;
};

/// Relative error norm ||truth - hat||_2 / ||truth||_2.
double rmse(const Eigen::VectorXd& truth, const Eigen::VectorXd& hat);

/// Fraction of steps where |truth - hat| <= half_width.
double picp(const IntervalSeries& series);

/// (1 / (M * max truth)) * sum of the full interval widths 2*delta.
double pinaw(const IntervalSeries& series);

/// Coverage-width criterion conventions for the eta switch.
/// CoveragePenalty (default): eta = 1 when PICP < alpha, else 0, so CWC
/// equals PINAW whenever coverage meets the target. AsPrinted: eta = 0 when
/// PICP <= alpha, else 1.
enum class CwcConvention { CoveragePenalty, AsPrinted };

double cwc(double picp_value, double pinaw_value, double alpha, double nu,
           CwcConvention convention = CwcConvention::CoveragePenalty);

}  // namespace rvc::metrics
