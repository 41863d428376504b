#include "qdsim/spin.hpp"

#include <cmath>

namespace qdsim {

SpinOps spin_operators(int d) {
    check_dimension(d);
    const double j = 0.5 * (d - 1);
    Matrix Jx = Matrix::Zero(d, d), Jy = Matrix::Zero(d, d), Jz = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i) Jz(i, i) = -j + i;
    for (int k = 0; k + 1 < d; ++k) {
        // <m+1|J+|m> = sqrt(j(j+1) - m(m+1)) with m = -j+k, which reduces to
        // sqrt((k+1)(d-1-k)); Jx = (J+ + J-)/2, Jy = (J+ - J-)/(2i).
        const double g = 0.5 * std::sqrt(double(k + 1) * double(d - 1 - k));
        Jx(k, k + 1) = g;
        Jx(k + 1, k) = g;
        Jy(k, k + 1) = Complex(0, g);
        Jy(k + 1, k) = Complex(0, -g);
    }
    return {Jx, Jy, Jz};
}

Matrix propagate(const Matrix& H, double t) {
    if (H.rows() != H.cols()) throw std::invalid_argument("propagate: H not square");
    if (!is_hermitian(H, 1e-10)) throw std::invalid_argument("propagate: H not Hermitian");
    Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    Vector phases = (Complex(0, -t) * es.eigenvalues().cast<Complex>()).array().exp();
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

double unitary_fidelity(const Matrix& U, const Matrix& V) {
    if (U.rows() != V.rows() || U.cols() != V.cols() || U.rows() != U.cols())
        throw std::invalid_argument("unitary_fidelity: dimension mismatch");
    return std::abs((U.adjoint() * V).trace()) / double(U.rows());
}

double sso(const RealVector& e, const RealVector& p) {
    if (e.size() != p.size()) throw std::invalid_argument("sso: dimension mismatch");
    check_distribution(e);
    check_distribution(p);
    double s = 0.0;
    for (Eigen::Index k = 0; k < e.size(); ++k)
        s += std::sqrt(std::max(0.0, e[k]) * std::max(0.0, p[k]));
    return s * s;
}

}  // namespace qdsim
