#include "rvc/metrics.hpp"

#include <cmath>

#include "rvc/errors.hpp"

namespace rvc::metrics {

void IntervalSeries::validate() const {
  if (hat.size() != truth.size() || half_width.size() != truth.size())
    throw InconsistentDimensions("interval series: length mismatch");
  if (truth.size() == 0) throw InconsistentDimensions("interval series: empty");
  if (half_width.minCoeff() < 0.0)
    throw InconsistentDimensions("interval series: negative half-width");
}

double rmse(const Eigen::VectorXd& truth, const Eigen::VectorXd& hat) {
  if (truth.size() != hat.size())
    throw InconsistentDimensions("rmse: length mismatch");
  const double denom = truth.norm();
  if (denom == 0.0) throw ZeroNormTruth("rmse: zero-norm truth vector");
  return (truth - hat).norm() / denom;
}

double picp(const IntervalSeries& series) {
  series.validate();
  int inside = 0;
  for (int i = 0; i < series.steps(); ++i)
    if (std::abs(series.truth(i) - series.hat(i)) <= series.half_width(i)) ++inside;
  return static_cast<double>(inside) / series.steps();
}

double pinaw(const IntervalSeries& series) {
  series.validate();
  const double kmax = series.truth.maxCoeff();
  if (kmax == 0.0) throw ZeroMax("pinaw: zero maximum coefficient");
  return 2.0 * series.half_width.sum() / (series.steps() * kmax);
}

double cwc(double picp_value, double pinaw_value, double alpha, double nu,
           CwcConvention convention) {
  if (picp_value < 0.0 || picp_value > 1.0)
    throw ConfigError("cwc.picp", "must be in [0,1]");
  double eta;
  if (convention == CwcConvention::CoveragePenalty)
    eta = picp_value < alpha ? 1.0 : 0.0;
  else
    eta = picp_value <= alpha ? 0.0 : 1.0;
  return pinaw_value * (1.0 + eta * picp_value * std::exp(-nu * (picp_value - alpha)));
}

}  // namespace rvc::metrics
