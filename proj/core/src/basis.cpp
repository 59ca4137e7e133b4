#include "sic/basis.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "sic/errors.hpp"
#include "sic/hermitian_eigen.hpp"

namespace sic {

namespace {

constexpr double kDegeneracyThreshold = 1e-10;

// Raises DegeneracyError when the normalized correlation matrix of the basis
// is numerically singular.
void check_degeneracy(const Eigen::MatrixXcd& cov) {
  const Eigen::Index k = cov.rows();
  std::vector<int> dead;
  for (Eigen::Index i = 0; i < k; ++i)
    if (!(cov(i, i).real() > 0.0)) dead.push_back(static_cast<int>(2 * i + 1));
  if (!dead.empty()) {
    std::string list;
    for (int p : dead) list += (list.empty() ? "" : ", ") + std::to_string(p);
    throw DegeneracyError("basis: orders {" + list + "} carry no power", dead);
  }
  if (k < 2) return;

  Eigen::VectorXd inv_sd(k);
  for (Eigen::Index i = 0; i < k; ++i) inv_sd(i) = 1.0 / std::sqrt(cov(i, i).real());
  const Eigen::MatrixXcd corr = inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
  const auto eig = jacobi_eigen(corr);
  if (eig.values(0) >= kDegeneracyThreshold) return;

  const Eigen::VectorXcd v = eig.vectors.col(0);
  const double vmax = v.cwiseAbs().maxCoeff();
  std::vector<int> orders;
  std::string list;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (std::abs(v(i)) > 0.1 * vmax) {
      const int p = static_cast<int>(2 * i + 1);
      orders.push_back(p);
      list += (list.empty() ? "" : ", ") + std::to_string(p);
    }
  }
  std::ostringstream msg;
  msg << "basis: orders {" << list << "} are collinear (normalized correlation eigenvalue "
      << eig.values(0) << ")";
  throw DegeneracyError(msg.str(), std::move(orders));
}

// Classical Gram-Schmidt with one re-orthogonalization pass: data = Q R with
// Q^H Q = I and R upper triangular with a positive real diagonal.
Eigen::MatrixXcd gram_schmidt_r(const Eigen::MatrixXcd& data) {
  const Eigen::Index k = data.cols();
  Eigen::MatrixXcd q = data;
  Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < j; ++i) {
        const std::complex<double> proj = q.col(i).dot(q.col(j));  // q_i^H q_j
        r(i, j) += proj;
        q.col(j) -= proj * q.col(i);
      }
    }
    const double nrm = q.col(j).norm();
    if (!(nrm > 0.0)) throw DegeneracyError("basis: QR breakdown at order " + std::to_string(2 * j + 1),
                                            {static_cast<int>(2 * j + 1)});
    r(j, j) = nrm;
    q.col(j) /= nrm;
  }
  return r;
}

}  // namespace

std::string to_string(OrthMethod m) {
  return m == OrthMethod::QR ? "qr" : "covariance_eigen";
}

OrthMethod parse_orth_method(const std::string& name) {
  if (name == "qr") return OrthMethod::QR;
  if (name == "covariance_eigen") return OrthMethod::CovarianceEigen;
  throw ConfigError("unknown orthogonalization method '" + name + "' (expected qr or covariance_eigen)");
}

BasisMatrix basis_functions(const ComplexSignal& x, int max_order) {
  if (max_order < 1 || max_order % 2 == 0)
    throw ConfigError("basis: max order must be odd and positive, got " + std::to_string(max_order));
  validate(x, "basis input");
  const int k = (max_order + 1) / 2;
  BasisMatrix b{Eigen::MatrixXcd(static_cast<Eigen::Index>(x.size()), k), x.sample_rate};
  for (std::size_t n = 0; n < x.size(); ++n) {
    const cplx v = x.samples[n];
    const double r2 = std::norm(v);
    cplx psi = v;
    for (int i = 0; i < k; ++i) {
      b.data(static_cast<Eigen::Index>(n), i) = psi;
      psi *= r2;
    }
  }
  return b;
}

Eigen::MatrixXcd sample_covariance(const BasisMatrix& basis) {
  if (basis.data.rows() == 0) throw InputError("basis: empty block");
  // C_ij = (1/M) sum_n psi_i[n] conj(psi_j[n])
  return (basis.data.transpose() * basis.data.conjugate()) / static_cast<double>(basis.data.rows());
}

Orthogonalizer fit_orthogonalizer(const BasisMatrix& basis, OrthMethod method) {
  const Eigen::Index k = basis.data.cols();
  if (k == 0) throw InputError("fit_orthogonalizer: basis has no orders");
  if (basis.data.rows() < 10 * k)
    throw InputError("fit_orthogonalizer: block must hold at least 10 samples per order");
  if (!basis.data.allFinite()) throw NumericError("fit_orthogonalizer: non-finite basis samples");

  Orthogonalizer orth;
  orth.method = method;
  orth.source_covariance = sample_covariance(basis);
  check_degeneracy(orth.source_covariance);

  if (method == OrthMethod::CovarianceEigen) {
    // Diagonal loading of 1e-12 relative to each order's own power, i.e.
    // 1e-12 trace / dim on the unit-diagonal correlation matrix. A single
    // trace-scaled constant would be set by the highest order and swamp the
    // smallest eigenvalues.
    Eigen::MatrixXcd c = orth.source_covariance;
    c.diagonal() *= 1.0 + 1e-12;
    const auto eig = jacobi_eigen(c);
    if (eig.values.minCoeff() <= 0.0) {
      std::vector<int> all;
      for (Eigen::Index i = 0; i < k; ++i) all.push_back(static_cast<int>(2 * i + 1));
      throw DegeneracyError("basis: covariance is not positive definite", all);
    }
    const Eigen::VectorXd inv_sqrt = eig.values.cwiseSqrt().cwiseInverse();
    orth.transform = inv_sqrt.asDiagonal() * eig.vectors.adjoint();
  } else {
    // B = Q R, so B R^{-1} sqrt(M) has unit-power orthogonal columns; in the
    // per-sample form psi_t = S psi this is S = sqrt(M) R^{-T}.
    const Eigen::MatrixXcd r = gram_schmidt_r(basis.data);
    const Eigen::MatrixXcd r_inv =
        r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXcd::Identity(k, k));
    orth.transform = std::sqrt(static_cast<double>(basis.data.rows())) * r_inv.transpose();
  }
  if (!orth.transform.allFinite()) throw NumericError("fit_orthogonalizer: transform is not finite");
  return orth;
}

BasisMatrix apply_orthogonalizer(const Orthogonalizer& orth, const BasisMatrix& basis) {
  if (orth.transform.rows() != basis.data.cols() || orth.transform.cols() != basis.data.cols())
    throw InputError("apply_orthogonalizer: transform is " + std::to_string(orth.transform.rows()) + "x" +
                     std::to_string(orth.transform.cols()) + " but the basis has " +
                     std::to_string(basis.data.cols()) + " orders");
  return BasisMatrix{basis.data * orth.transform.transpose(), basis.sample_rate};
}

void write_matrix(std::ostream& out, const Eigen::MatrixXcd& m) {
  const auto old_precision = out.precision(17);
  out << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out << (j ? " " : "") << m(i, j).real() << ' ' << m(i, j).imag();
    out << '\n';
  }
  out.precision(old_precision);
}

Eigen::MatrixXcd read_matrix(std::istream& in) {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  if (!(in >> rows >> cols) || rows < 0 || cols < 0) throw ConfigError("matrix: bad dimension header");
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      double re = 0.0;
      double im = 0.0;
      if (!(in >> re >> im)) throw ConfigError("matrix: truncated data");
      m(i, j) = {re, im};
    }
  if (!m.allFinite()) throw ConfigError("matrix: non-finite entries");
  return m;
}

void write_orthogonalizer(std::ostream& out, const Orthogonalizer& orth) {
  out << "method " << to_string(orth.method) << '\n';
  write_matrix(out, orth.transform);
}

Orthogonalizer read_orthogonalizer(std::istream& in) {
  std::string key;
  std::string name;
  if (!(in >> key >> name) || key != "method") throw ConfigError("orthogonalizer: missing method line");
  Orthogonalizer orth;
  orth.method = parse_orth_method(name);
  orth.transform = read_matrix(in);
  if (orth.transform.rows() != orth.transform.cols() || orth.transform.rows() == 0)
    throw ConfigError("orthogonalizer: transform must be square and non-empty");
  return orth;
}

void save_orthogonalizer(const std::filesystem::path& path, const Orthogonalizer& orth) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  write_orthogonalizer(out, orth);
}

Orthogonalizer load_orthogonalizer(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  return read_orthogonalizer(in);
}

}  // namespace sic
