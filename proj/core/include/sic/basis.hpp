#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "sic/signal.hpp"

namespace sic {

/// Nonlinear basis functions laid out one column per odd order (1, 3, ..., P)
/// and one row per sample.
struct BasisMatrix {
  Eigen::MatrixXcd data;
  double sample_rate = 0.0;

  int num_orders() const noexcept { return static_cast<int>(data.cols()); }
  int max_order() const noexcept { return 2 * num_orders() - 1; }
  std::size_t block_length() const noexcept { return static_cast<std::size_t>(data.rows()); }
};

enum class OrthMethod { QR, CovarianceEigen };

std::string to_string(OrthMethod m);
OrthMethod parse_orth_method(const std::string& name);  // "qr" | "covariance_eigen"

/// Linear transform S applied per sample vector: psi_t[n] = S psi[n].
struct Orthogonalizer {
  Eigen::MatrixXcd transform;
  OrthMethod method = OrthMethod::CovarianceEigen;
  Eigen::MatrixXcd source_covariance;  // may be empty when loaded from file
};

/// psi_p[n] = x[n] |x[n]|^(p-1) for p = 1, 3, ..., max_order.
BasisMatrix basis_functions(const ComplexSignal& x, int max_order);

/// (1/M) sum_n psi[n] psi[n]^H.
Eigen::MatrixXcd sample_covariance(const BasisMatrix& basis);

/// Fits S so the transformed basis is white (CovarianceEigen) or has
/// orthonormal columns scaled to unit power over the block (QR). Throws
/// DegeneracyError naming the offending orders when the basis is collinear.
Orthogonalizer fit_orthogonalizer(const BasisMatrix& basis, OrthMethod method);

BasisMatrix apply_orthogonalizer(const Orthogonalizer& orth, const BasisMatrix& basis);

/// Plain-text complex matrix: a "rows cols" header then one row per line as
/// "re im re im ...".
void write_matrix(std::ostream& out, const Eigen::MatrixXcd& m);
Eigen::MatrixXcd read_matrix(std::istream& in);

/// Orthogonalizer file: a "method <name>" line followed by the transform in
/// the matrix format above.
void save_orthogonalizer(const std::filesystem::path& path, const Orthogonalizer& orth);
Orthogonalizer load_orthogonalizer(const std::filesystem::path& path);
void write_orthogonalizer(std::ostream& out, const Orthogonalizer& orth);
Orthogonalizer read_orthogonalizer(std::istream& in);

}  // namespace sic
