#include "luders/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "luders/error.hpp"

namespace luders {
namespace {

constexpr int kMaxSweeps = 100;
constexpr double kOffDiagonalTol = 1e-13;
constexpr double kNegativeClip = 1e-9;
// Eigenvalues below this fraction of the spectral radius are rounding noise
// from the rotations and are zeroed before taking square roots.
constexpr double kRelativeNoiseFloor = 1e-14;

double off_diagonal_norm(const ComplexMatrix& a) {
  double s = 0.0;
  for (std::size_t p = 0; p < a.rows(); ++p)
    for (std::size_t q = 0; q < a.cols(); ++q)
      if (p != q) s += std::norm(a(p, q));
  return std::sqrt(s);
}

// Annihilates a(p, q) with the unitary J = [[c, s e^{ia}], [-s e^{-ia}, c]]
// acting on rows/columns p and q: A <- J^dagger A J, V <- V J.
void rotate(ComplexMatrix& a, ComplexMatrix& v, std::size_t p, std::size_t q) {
  const Complex apq = a(p, q);
  const double b = std::abs(apq);
  if (b == 0.0) return;
  const Complex phase = apq / b;
  const double app = a(p, p).real();
  const double aqq = a(q, q).real();
  const double tau = (aqq - app) / (2.0 * b);
  const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
  const double c = 1.0 / std::sqrt(1.0 + t * t);
  const double s = t * c;

  const Complex jpp = c;
  const Complex jqq = c;
  const Complex jpq = s * phase;
  const Complex jqp = -s * std::conj(phase);

  const std::size_t n = a.rows();
  for (std::size_t k = 0; k < n; ++k) {
    const Complex akp = a(k, p);
    const Complex akq = a(k, q);
    a(k, p) = akp * jpp + akq * jqp;
    a(k, q) = akp * jpq + akq * jqq;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const Complex apk = a(p, k);
    const Complex aqk = a(q, k);
    a(p, k) = std::conj(jpp) * apk + std::conj(jqp) * aqk;
    a(q, k) = std::conj(jpq) * apk + std::conj(jqq) * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;
  a(p, p) = a(p, p).real();
  a(q, q) = a(q, q).real();

  for (std::size_t k = 0; k < n; ++k) {
    const Complex vkp = v(k, p);
    const Complex vkq = v(k, q);
    v(k, p) = vkp * jpp + vkq * jqp;
    v(k, q) = vkp * jpq + vkq * jqq;
  }
}

}  // namespace

HermitianEigen herm_eig(const ComplexMatrix& m, double hermitian_tol) {
  if (!m.is_square()) throw Error(ErrorCode::DimensionMismatch, "herm_eig needs a square matrix");
  const double scale_tol = hermitian_tol * std::max(1.0, m.max_abs());
  if (!is_hermitian(m, scale_tol)) {
    throw Error(ErrorCode::NonHermitianInput, "matrix is not Hermitian within tolerance");
  }

  const std::size_t n = m.rows();
  ComplexMatrix a = hermitian_part(m);
  ComplexMatrix v = ComplexMatrix::identity(n);
  const double threshold = kOffDiagonalTol * std::max(1.0, a.frobenius_norm());

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal_norm(a) < threshold) break;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) rotate(a, v, p, q);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return a(i, i).real() < a(j, j).real();
  });

  HermitianEigen out;
  out.values.resize(n);
  out.vectors = ComplexMatrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]).real();
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  return out;
}

ComplexMatrix hermitian_function(const ComplexMatrix& m, const std::function<Complex(double)>& f) {
  const HermitianEigen eig = herm_eig(m);
  const std::size_t n = m.rows();
  ComplexMatrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const Complex fk = f(eig.values[k]);
    if (fk == Complex{}) continue;
    for (std::size_t r = 0; r < n; ++r) {
      const Complex vr = eig.vectors(r, k) * fk;
      for (std::size_t c = 0; c < n; ++c) out(r, c) += vr * std::conj(eig.vectors(c, k));
    }
  }
  return out;
}

ComplexMatrix psd_sqrt(const ComplexMatrix& m) {
  const HermitianEigen eig = herm_eig(m);
  const double largest = eig.values.empty() ? 0.0 : std::max(0.0, eig.values.back());
  const double floor = kRelativeNoiseFloor * largest;
  for (double lambda : eig.values) {
    if (lambda < -kNegativeClip) {
      throw Error(ErrorCode::NotPSD, "eigenvalue " + std::to_string(lambda) + " below -1e-9");
    }
  }
  const std::size_t n = m.rows();
  ComplexMatrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    if (eig.values[k] <= floor) continue;
    const double root = std::sqrt(eig.values[k]);
    for (std::size_t r = 0; r < n; ++r) {
      const Complex vr = eig.vectors(r, k) * root;
      for (std::size_t c = 0; c < n; ++c) out(r, c) += vr * std::conj(eig.vectors(c, k));
    }
  }
  return hermitian_part(out);
}

double min_eigenvalue(const ComplexMatrix& m) {
  const HermitianEigen eig = herm_eig(m);
  return eig.values.empty() ? 0.0 : eig.values.front();
}

bool is_psd(const ComplexMatrix& m, double tol) {
  if (!is_hermitian(m, 1e-9 * std::max(1.0, m.max_abs()))) return false;
  return min_eigenvalue(m) >= -tol;
}

ComplexMatrix partial_trace(const ComplexMatrix& m, std::size_t dim_a, std::size_t dim_b,
                            Subsystem traced) {
  if (!m.is_square() || m.rows() != dim_a * dim_b) {
    throw Error(ErrorCode::DimensionMismatch,
                "partial trace of " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                    " over " + std::to_string(dim_a) + "x" + std::to_string(dim_b));
  }
  if (traced == Subsystem::B) {
    ComplexMatrix out(dim_a, dim_a);
    for (std::size_t a = 0; a < dim_a; ++a)
      for (std::size_t c = 0; c < dim_a; ++c)
        for (std::size_t b = 0; b < dim_b; ++b) out(a, c) += m(a * dim_b + b, c * dim_b + b);
    return out;
  }
  ComplexMatrix out(dim_b, dim_b);
  for (std::size_t b = 0; b < dim_b; ++b)
    for (std::size_t d = 0; d < dim_b; ++d)
      for (std::size_t a = 0; a < dim_a; ++a) out(b, d) += m(a * dim_b + b, a * dim_b + d);
  return out;
}

}  // namespace luders
