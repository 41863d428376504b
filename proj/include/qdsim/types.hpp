#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace qdsim {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kDefaultTol = 1e-10;

inline bool is_hermitian(const Matrix& m, double tol = kDefaultTol) {
    return m.rows() == m.cols() && (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

inline bool is_unitary(const Matrix& m, double tol = kDefaultTol) {
    if (m.rows() != m.cols()) return false;
    Matrix p = m.adjoint() * m;
    return (p - Matrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() <= tol;
}

inline bool is_diagonal(const Matrix& m, double tol = kDefaultTol) {
    Matrix off = m;
    off.diagonal().setZero();
    return off.cwiseAbs().maxCoeff() <= tol;
}

// Probability distribution over qudit levels: entries in [0,1], summing to 1.
inline void check_distribution(const RealVector& p, double tol = 1e-9) {
    if (p.size() == 0) throw std::invalid_argument("empty distribution");
    if (p.minCoeff() < -tol || p.maxCoeff() > 1.0 + tol)
        throw std::invalid_argument("distribution entries outside [0,1]");
    if (std::abs(p.sum() - 1.0) > tol)
        throw std::invalid_argument("distribution does not sum to 1");
}

inline void check_dimension(int d) {
    if (d < 2) throw std::invalid_argument("qudit dimension must be >= 2, got " + std::to_string(d));
}

}  // namespace qdsim
