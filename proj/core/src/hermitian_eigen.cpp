#include "sic/hermitian_eigen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sic/errors.hpp"

namespace sic {

namespace {

double off_diagonal_norm(const Eigen::MatrixXcd& a) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j) s += std::norm(a(i, j));
  return std::sqrt(s);
}

}  // namespace

HermitianEigen jacobi_eigen(const Eigen::MatrixXcd& input, double tolerance, int max_sweeps) {
  if (input.rows() != input.cols()) throw InputError("jacobi_eigen: matrix is not square");
  if (!input.allFinite()) throw NumericError("jacobi_eigen: non-finite entries");
  const Eigen::Index n = input.rows();

  // Work on the Hermitian part so tiny asymmetries in estimated covariances
  // do not stall convergence.
  Eigen::MatrixXcd a = 0.5 * (input + input.adjoint());
  Eigen::MatrixXcd v = Eigen::MatrixXcd::Identity(n, n);
  const double scale = a.norm();

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    if (off_diagonal_norm(a) <= tolerance * scale) break;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const std::complex<double> b = a(p, q);
        const double mag = std::abs(b);
        if (mag == 0.0) continue;
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const std::complex<double> phase = std::conj(b) / mag;  // e^{-j arg b}
        const double theta = (aqq - app) / (2.0 * mag);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // Plane rotation [[c, s], [-s e^{-j phi}, c e^{-j phi}]].
        const std::complex<double> rpp = c;
        const std::complex<double> rpq = s;
        const std::complex<double> rqp = -s * phase;
        const std::complex<double> rqq = c * phase;

        for (Eigen::Index i = 0; i < n; ++i) {
          const auto ap = a(i, p);
          const auto aq = a(i, q);
          a(i, p) = ap * rpp + aq * rqp;
          a(i, q) = ap * rpq + aq * rqq;
          const auto vp = v(i, p);
          const auto vq = v(i, q);
          v(i, p) = vp * rpp + vq * rqp;
          v(i, q) = vp * rpq + vq * rqq;
        }
        for (Eigen::Index j = 0; j < n; ++j) {
          const auto ap = a(p, j);
          const auto aq = a(q, j);
          a(p, j) = std::conj(rpp) * ap + std::conj(rqp) * aq;
          a(q, j) = std::conj(rpq) * ap + std::conj(rqq) * aq;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index i, Eigen::Index j) { return a(i, i).real() < a(j, j).real(); });
  HermitianEigen out{Eigen::VectorXd(n), Eigen::MatrixXcd(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]).real();
    out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  return out;
}

}  // namespace sic
