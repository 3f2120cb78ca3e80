#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

namespace mpopf {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr cplx kI{0.0, 1.0};

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed case data, bad bounds, schema violations.
class InputError : public Error {
public:
  using Error::Error;
};

// Construction that requires non-adjacent critical buses met an edge with both ends critical.
class A3Violation : public Error {
public:
  using Error::Error;
};

// Both sides of a two-sided injection bound detected active at once.
class DegenerateActivity : public Error {
public:
  using Error::Error;
};

class ZeroMatrix : public Error {
public:
  using Error::Error;
};

class RecoveryMismatch : public Error {
public:
  using Error::Error;
};

inline double max_abs(const CMat &H) { return H.size() == 0 ? 0.0 : H.cwiseAbs().maxCoeff(); }

inline bool is_hermitian(const CMat &H, double tol = 1e-12) {
  if (H.rows() != H.cols())
    return false;
  return max_abs(H - H.adjoint()) <= tol;
}

inline CMat hermitian_part(const CMat &H) { return 0.5 * (H + H.adjoint()); }

// m x m block (a, b) of a bus-blocked matrix.
inline CMat bus_block(const CMat &X, int a, int b, int m) { return X.block(a * m, b * m, m, m); }

// Eigenvalues of a Hermitian matrix in ascending order.
inline RVec hermitian_eigenvalues(const CMat &H) {
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(H), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline double spectral_norm(const CMat &H) {
  if (H.size() == 0)
    return 0.0;
  RVec ev = hermitian_eigenvalues(H);
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

} // namespace mpopf
