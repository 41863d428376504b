#pragma once

#include "qdsim/types.hpp"

namespace qdsim {

struct SpinOps {
    Matrix Jx, Jy, Jz;
};

// Angular-momentum matrices for the effective spin j=(d-1)/2 in the qudit
// basis |0>..|d-1>, ordered by ascending Jz eigenvalue: level i <-> m = -j+i.
SpinOps spin_operators(int d);

// exp(-i H t) for Hermitian H, via eigendecomposition (exactly unitary up to
// floating point; no series truncation).
Matrix propagate(const Matrix& H, double t);

// |Tr(U^dag V)| / d, global-phase invariant.
double unitary_fidelity(const Matrix& U, const Matrix& V);

// Squared statistical overlap (sum_k sqrt(e_k p_k))^2.
double sso(const RealVector& e, const RealVector& p);

}  // namespace qdsim
