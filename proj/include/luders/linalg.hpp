#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "luders/matrix.hpp"

namespace luders {

struct HermitianEigen {
  std::vector<double> values;  // ascending
  ComplexMatrix vectors;       // columns are eigenvectors
};

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Throws NonHermitianInput when |M - M^dagger| exceeds `hermitian_tol`
/// (scaled by max(1, max|M_ij|)). Input dimension is expected to be small
/// (<= 16); the cost is O(n^3) per sweep.
HermitianEigen herm_eig(const ComplexMatrix& m, double hermitian_tol = 1e-10);

/// V f(lambda) V^dagger for a Hermitian matrix.
ComplexMatrix hermitian_function(const ComplexMatrix& m, const std::function<Complex(double)>& f);

/// Principal square root of a positive semidefinite matrix. Eigenvalues in
/// [-1e-9, 0) are treated as zero; anything lower throws NotPSD.
ComplexMatrix psd_sqrt(const ComplexMatrix& m);

/// Smallest eigenvalue of a Hermitian matrix.
double min_eigenvalue(const ComplexMatrix& m);

bool is_psd(const ComplexMatrix& m, double tol = 1e-9);

enum class Subsystem { A, B };

/// Partial trace of an operator on H_A (x) H_B, index (a, b) -> a * dim_b + b.
ComplexMatrix partial_trace(const ComplexMatrix& m, std::size_t dim_a, std::size_t dim_b,
                            Subsystem traced);

}  // namespace luders
