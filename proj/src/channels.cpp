#include "luders/channels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "luders/error.hpp"
#include "luders/linalg.hpp"

namespace luders {
namespace {

constexpr std::size_t kDim = 3;
constexpr std::size_t kChoiDim = kDim * kDim;

ComplexMatrix basis_operator(std::size_t i, std::size_t j) {
  ComplexMatrix e(kDim, kDim);
  e(i, j) = 1.0;
  return e;
}

}  // namespace

ProcessChoi::ProcessChoi(ComplexMatrix m) : m_(std::move(m)) {
  require_shape(m_, kChoiDim, kChoiDim, "Choi matrix");
  if (!is_hermitian(m_, 1e-9 * std::max(1.0, m_.max_abs()))) {
    throw Error(ErrorCode::NonHermitianInput, "Choi matrix is not Hermitian");
  }
  m_ = hermitian_part(m_);
}

bool ProcessChoi::is_psd(double tol) const { return luders::is_psd(m_, tol); }

ComplexMatrix ProcessChoi::sys_trace() const { return partial_trace(m_, kDim, kDim, Subsystem::A); }

double ProcessChoi::tp_deviation() const {
  return max_abs_diff(sys_trace(), ComplexMatrix::identity(kDim));
}

ProcessChoi identity_channel() {
  std::vector<Complex> xi(kChoiDim);
  for (std::size_t i = 0; i < kDim; ++i) xi[choi_index(i, i)] = 1.0;
  return ProcessChoi(outer(xi, xi));
}

ProcessChoi choi_from_map(const std::function<ComplexMatrix(const ComplexMatrix&)>& map) {
  ComplexMatrix chi(kChoiDim, kChoiDim);
  for (std::size_t i = 0; i < kDim; ++i) {
    for (std::size_t j = 0; j < kDim; ++j) {
      const ComplexMatrix image = map(basis_operator(i, j));
      require_shape(image, kDim, kDim, "channel image");
      for (std::size_t a = 0; a < kDim; ++a)
        for (std::size_t c = 0; c < kDim; ++c) chi(choi_index(a, i), choi_index(c, j)) = image(a, c);
    }
  }
  return ProcessChoi(std::move(chi));
}

ProcessChoi lueders_channel(std::span<const ComplexMatrix> projectors) {
  constexpr double tol = 1e-10;
  if (projectors.empty()) throw Error(ErrorCode::InvalidProjectors, "no projectors given");
  ComplexMatrix sum(kDim, kDim);
  for (std::size_t k = 0; k < projectors.size(); ++k) {
    const ComplexMatrix& p = projectors[k];
    if (p.rows() != kDim || p.cols() != kDim) {
      throw Error(ErrorCode::InvalidProjectors, "projector " + std::to_string(k) + " is not 3x3");
    }
    if (!is_hermitian(p, tol) || max_abs_diff(p * p, p) > tol) {
      throw Error(ErrorCode::InvalidProjectors, "operator " + std::to_string(k) + " is not a projector");
    }
    for (std::size_t l = k + 1; l < projectors.size(); ++l) {
      if ((p * projectors[l]).max_abs() > tol) {
        throw Error(ErrorCode::InvalidProjectors,
                    "projectors " + std::to_string(k) + " and " + std::to_string(l) +
                        " are not orthogonal");
      }
    }
    sum += p;
  }
  if (max_abs_diff(sum, ComplexMatrix::identity(kDim)) > tol) {
    throw Error(ErrorCode::InvalidProjectors, "projectors do not sum to identity");
  }
  return kraus_channel(projectors);
}

MeasurementModel::MeasurementModel(Complex g) : g0(g) {
  if (std::abs(g0) > 1.0 + 1e-12) {
    throw Error(ErrorCode::InvalidG0, "|g0| = " + std::to_string(std::abs(g0)) + " exceeds 1");
  }
}

double MeasurementModel::p_scatt() const { return std::clamp(1.0 - std::norm(g0), 0.0, 1.0); }

double MeasurementModel::phase() const { return std::arg(g0); }

ComplexMatrix MeasurementModel::effect_scatter() const {
  ComplexMatrix e(kDim, kDim);
  e(0, 0) = p_scatt();
  return e;
}

ComplexMatrix MeasurementModel::effect_no_scatter() const {
  return ComplexMatrix::identity(kDim) - effect_scatter();
}

ComplexMatrix MeasurementModel::phase_unitary() const {
  ComplexMatrix g = ComplexMatrix::identity(kDim);
  g(0, 0) = std::polar(1.0, phase());
  return g;
}

std::vector<ComplexMatrix> MeasurementModel::kraus() const {
  return {psd_sqrt(effect_scatter()), phase_unitary() * psd_sqrt(effect_no_scatter())};
}

ProcessChoi measurement_channel(Complex g0) {
  const MeasurementModel model(g0);
  const std::size_t o = choi_index(0, 0);
  const std::size_t x1 = choi_index(1, 1);
  const std::size_t x2 = choi_index(2, 2);
  ComplexMatrix chi(kChoiDim, kChoiDim);
  chi(o, o) = 1.0;
  for (std::size_t r : {x1, x2}) {
    for (std::size_t c : {x1, x2}) chi(r, c) = 1.0;
    chi(o, r) = model.g0;
    chi(r, o) = std::conj(model.g0);
  }
  return ProcessChoi(std::move(chi));
}

ProcessChoi kraus_channel(std::span<const ComplexMatrix> operators, TraceStatus* status) {
  ComplexMatrix chi(kChoiDim, kChoiDim);
  ComplexMatrix completeness(kDim, kDim);
  for (const ComplexMatrix& k : operators) {
    require_shape(k, kDim, kDim, "Kraus operator");
    // vec(K) in the sys (x) aux ordering is K read row by row.
    chi += outer(k.entries(), k.entries());
    completeness += k.adjoint() * k;
  }
  if (status) {
    const ComplexMatrix slack = ComplexMatrix::identity(kDim) - completeness;
    if (slack.max_abs() <= 1e-10) {
      *status = TraceStatus::Preserving;
    } else if (min_eigenvalue(hermitian_part(slack)) >= -1e-10) {
      *status = TraceStatus::NonIncreasing;
    } else {
      *status = TraceStatus::Increasing;
    }
  }
  return ProcessChoi(std::move(chi));
}

std::vector<ComplexMatrix> kraus_operators(const ProcessChoi& chi) {
  const HermitianEigen eig = herm_eig(chi.matrix());
  std::vector<ComplexMatrix> ops;
  for (std::size_t k = eig.values.size(); k-- > 0;) {
    if (eig.values[k] <= 1e-10) break;
    const double w = std::sqrt(eig.values[k]);
    ComplexMatrix op(kDim, kDim);
    for (std::size_t a = 0; a < kDim; ++a)
      for (std::size_t i = 0; i < kDim; ++i) op(a, i) = w * eig.vectors(choi_index(a, i), k);
    ops.push_back(std::move(op));
  }
  return ops;
}

ComplexMatrix apply_to_operator(const ProcessChoi& chi, const ComplexMatrix& x) {
  require_shape(x, kDim, kDim, "channel input");
  ComplexMatrix out(kDim, kDim);
  for (std::size_t a = 0; a < kDim; ++a)
    for (std::size_t c = 0; c < kDim; ++c) {
      Complex s = 0.0;
      for (std::size_t b = 0; b < kDim; ++b)
        for (std::size_t d = 0; d < kDim; ++d) s += chi(choi_index(a, b), choi_index(c, d)) * x(b, d);
      out(a, c) = s;
    }
  return out;
}

ComplexMatrix apply(const ProcessChoi& chi, const DensityMatrix& rho) {
  require_shape(rho.matrix(), kDim, kDim, "density matrix");
  return hermitian_part(apply_to_operator(chi, rho.matrix()));
}

ProcessChoi compose(const ProcessChoi& outer_channel, const ProcessChoi& inner_channel) {
  return choi_from_map([&](const ComplexMatrix& x) {
    return apply_to_operator(outer_channel, apply_to_operator(inner_channel, x));
  });
}

ProcessChoi pointer_model_channel(const ComplexMatrix& hamiltonian, double tau,
                                  std::span<const Complex> pointer_init,
                                  std::span<const std::vector<Complex>> pointer_basis) {
  const std::size_t dp = pointer_init.size();
  if (dp == 0 || dp > 4) throw Error(ErrorCode::DimensionMismatch, "pointer dimension must be 1..4");
  require_shape(hamiltonian, kDim * dp, kDim * dp, "pointer-model Hamiltonian");
  if (pointer_basis.size() != dp) {
    throw Error(ErrorCode::NonOrthonormalBasis, "pointer basis must have one vector per level");
  }
  double norm = 0.0;
  for (const auto& z : pointer_init) norm += std::norm(z);
  if (std::abs(norm - 1.0) > 1e-10) throw Error(ErrorCode::NotNormalized, "pointer state");
  for (std::size_t j = 0; j < dp; ++j) {
    if (pointer_basis[j].size() != dp) throw Error(ErrorCode::DimensionMismatch, "pointer basis vector");
    for (std::size_t k = 0; k < dp; ++k) {
      Complex ip = 0.0;
      for (std::size_t p = 0; p < dp; ++p) ip += std::conj(pointer_basis[j][p]) * pointer_basis[k][p];
      if (std::abs(ip - (j == k ? 1.0 : 0.0)) > 1e-10) {
        throw Error(ErrorCode::NonOrthonormalBasis, "pointer basis is not orthonormal");
      }
    }
  }

  const ComplexMatrix u =
      hermitian_function(hamiltonian, [tau](double e) { return std::polar(1.0, -e * tau); });

  std::vector<ComplexMatrix> kraus;
  kraus.reserve(dp);
  for (const auto& w : pointer_basis) {
    ComplexMatrix k(kDim, kDim);
    for (std::size_t a = 0; a < kDim; ++a)
      for (std::size_t b = 0; b < kDim; ++b) {
        Complex s = 0.0;
        for (std::size_t p = 0; p < dp; ++p)
          for (std::size_t q = 0; q < dp; ++q)
            s += std::conj(w[p]) * u(a * dp + p, b * dp + q) * pointer_init[q];
        k(a, b) = s;
      }
    kraus.push_back(std::move(k));
  }
  return kraus_channel(kraus);
}

double process_fidelity(const ProcessChoi& a, const ProcessChoi& b) {
  if (!a.is_psd() || !b.is_psd()) throw Error(ErrorCode::NotPSD, "fidelity needs PSD Choi matrices");
  const ComplexMatrix root = psd_sqrt(a.matrix());
  const HermitianEigen eig = herm_eig(hermitian_part(root * b.matrix() * root));
  const double largest = std::max(0.0, eig.values.back());
  double s = 0.0;
  for (double lambda : eig.values) {
    if (lambda > 1e-14 * largest) s += std::sqrt(lambda);
  }
  return s * s / 9.0;
}

}  // namespace luders
