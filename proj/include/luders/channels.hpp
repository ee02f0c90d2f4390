#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "luders/matrix.hpp"
#include "luders/states.hpp"

namespace luders {

/// Choi matrix of a qutrit channel,
///   chi = sum_ij Lambda[|i><j|]_sys (x) |i><j|_aux,
/// as a 9x9 matrix with row index 3 * sys + aux. The inverse map is
/// Lambda[rho] = tr_aux[chi (1 (x) rho^T)].
class ProcessChoi {
 public:
  /// Validates shape (9x9) and Hermiticity (1e-9 relative). Positivity is
  /// not checked here; see is_psd().
  explicit ProcessChoi(ComplexMatrix m);

  const ComplexMatrix& matrix() const noexcept { return m_; }
  Complex operator()(std::size_t r, std::size_t c) const { return m_(r, c); }

  bool is_psd(double tol = 1e-9) const;
  /// tr_sys chi, a 3x3 operator on the auxiliary space.
  ComplexMatrix sys_trace() const;
  /// max |tr_sys chi - 1|.
  double tp_deviation() const;
  bool is_trace_preserving(double tol = 1e-10) const { return tp_deviation() <= tol; }

 private:
  ComplexMatrix m_;
};

/// Choi index for |sys, aux>.
constexpr std::size_t choi_index(std::size_t sys, std::size_t aux) { return 3 * sys + aux; }

ProcessChoi identity_channel();

/// Choi matrix of an arbitrary linear map on 3x3 operators.
ProcessChoi choi_from_map(const std::function<ComplexMatrix(const ComplexMatrix&)>& map);

/// rho -> sum_k P_k rho P_k. Throws InvalidProjectors unless the projectors
/// are Hermitian, idempotent, mutually orthogonal and complete (1e-10).
ProcessChoi lueders_channel(std::span<const ComplexMatrix> projectors);

/// The generalized measurement (E1, E0) realised by fluorescence coupling of
/// level |0>, parametrised by the coherence factor g0.
struct MeasurementModel {
  Complex g0;

  explicit MeasurementModel(Complex g0);

  double p_scatt() const;
  double phase() const;
  ComplexMatrix effect_scatter() const;     // E1 = P_scatt |0><0|
  ComplexMatrix effect_no_scatter() const;  // E0 = 1 - E1
  ComplexMatrix phase_unitary() const;      // G = e^{i phi}|0><0| + |1><1| + |2><2|
  /// {sqrt(E1), G sqrt(E0)}
  std::vector<ComplexMatrix> kraus() const;
};

/// chi_m = |00><00| + |xi><xi| + g0 |00><xi| + g0* |xi><00|, xi = |11> + |22>.
/// Throws InvalidG0 if |g0| > 1 + 1e-12.
ProcessChoi measurement_channel(Complex g0);

enum class TraceStatus { Preserving, NonIncreasing, Increasing };

/// Choi matrix of rho -> sum_k K_k rho K_k^dagger. `status`, when given,
/// receives how sum K^dagger K compares with the identity (1e-10).
ProcessChoi kraus_channel(std::span<const ComplexMatrix> operators,
                          TraceStatus* status = nullptr);

/// Kraus operators from the eigendecomposition of a PSD Choi matrix.
/// Eigenvectors with eigenvalue <= 1e-10 are dropped.
std::vector<ComplexMatrix> kraus_operators(const ProcessChoi& chi);

/// Lambda[X] = tr_aux[chi (1 (x) X^T)] for any 3x3 operator X.
ComplexMatrix apply_to_operator(const ProcessChoi& chi, const ComplexMatrix& x);

/// Output of the channel for a density matrix. Trace is 1 when chi is TP.
ComplexMatrix apply(const ProcessChoi& chi, const DensityMatrix& rho);

/// Choi matrix of `outer` after `inner`.
ProcessChoi compose(const ProcessChoi& outer, const ProcessChoi& inner);

/// Channel induced by coupling to a pointer through H (units of hbar, rad/s)
/// for time tau and measuring the pointer in `pointer_basis`:
///   rho -> sum_j <w_j| U (rho (x) |Phi><Phi|) U^dagger |w_j>, U = exp(-i H tau).
/// H acts on sys (x) pointer with the pointer index fastest.
ProcessChoi pointer_model_channel(const ComplexMatrix& hamiltonian, double tau,
                                  std::span<const Complex> pointer_init,
                                  std::span<const std::vector<Complex>> pointer_basis);

/// Rescaled Uhlmann fidelity F = [tr sqrt(sqrt(a) b sqrt(a))]^2 / 9 for
/// trace-3 Choi matrices. Throws NotPSD if either input is not PSD (1e-9).
double process_fidelity(const ProcessChoi& a, const ProcessChoi& b);

}  // namespace luders
