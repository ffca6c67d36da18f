#include "rvc/jacobi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "rvc/errors.hpp"

namespace rvc {

namespace {

double off_diag_norm(const Eigen::MatrixXd& a) {
  double s = 0.0;
  const Eigen::Index n = a.rows();
  for (Eigen::Index p = 0; p < n; ++p)
    for (Eigen::Index q = p + 1; q < n; ++q) s += a(p, q) * a(p, q);
  return std::sqrt(2.0 * s);
}

}  // namespace

EighResult jacobi_eigh(const Eigen::MatrixXd& a_in, int max_sweeps, double tol) {
  if (a_in.rows() != a_in.cols())
    throw EigenFailure("jacobi_eigh: matrix not square");
  const Eigen::Index n = a_in.rows();

  Eigen::MatrixXd a = 0.5 * (a_in + a_in.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);

  const double scale = std::max(1.0, a.norm());
  const double thresh = tol * scale;

  int sweep = 0;
  while (off_diag_norm(a) > thresh) {
    if (sweep >= max_sweeps)
      throw EigenFailure("jacobi_eigh: no convergence after " +
                         std::to_string(max_sweeps) + " sweeps");
    ++sweep;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t =
            (theta >= 0.0 ? 1.0 : -1.0) /
            (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        // A <- J^T A J on rows/cols p,q
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  EighResult out;
  out.sweeps = sweep;
  out.eigenvalues.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) out.eigenvalues(i) = a(i, i);

  // sort ascending, permute vectors to match
  std::vector<Eigen::Index> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index i, Eigen::Index j) {
    return out.eigenvalues(i) < out.eigenvalues(j);
  });
  Eigen::VectorXd evals(n);
  Eigen::MatrixXd evecs(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    evals(i) = out.eigenvalues(idx[static_cast<size_t>(i)]);
    evecs.col(i) = v.col(idx[static_cast<size_t>(i)]);
  }
  out.eigenvalues = std::move(evals);
  out.eigenvectors = std::move(evecs);
  return out;
}

}  // namespace rvc
