#pragma once

#include <array>
#include <string>
#include <vector>

#include "luders/matrix.hpp"

namespace luders {

/// Hermitian, unit-trace density operator. Construction validates
/// Hermiticity (1e-10) and trace (1e-9); positivity is the caller's contract.
class DensityMatrix {
 public:
  explicit DensityMatrix(ComplexMatrix m);

  const ComplexMatrix& matrix() const noexcept { return m_; }
  std::size_t dim() const noexcept { return m_.rows(); }
  Complex operator()(std::size_t r, std::size_t c) const { return m_(r, c); }
  double purity() const;

 private:
  ComplexMatrix m_;
};

class QutritPureState {
 public:
  /// Throws NotNormalized if the squared norm differs from 1 by more than 1e-12.
  explicit QutritPureState(std::array<Complex, 3> amplitudes);

  /// Normalizes the given amplitudes first.
  static QutritPureState normalized(std::array<Complex, 3> amplitudes);
  static QutritPureState basis(std::size_t level);

  const std::array<Complex, 3>& amplitudes() const noexcept { return amps_; }
  Complex operator[](std::size_t i) const { return amps_[i]; }

 private:
  std::array<Complex, 3> amps_;
};

/// |<a|b>| == 1 within tol, i.e. equal up to a global phase.
bool same_up_to_phase(const QutritPureState& a, const QutritPureState& b, double tol = 1e-12);

enum class Axis { X, MinusX, Y, MinusY };

std::string to_string(Axis axis);

/// One pulse R^level_axis(angle) on the {|0>, |level>} subspace.
struct Pulse {
  int level;
  Axis axis;
  double angle;
};

/// exp(-i angle sigma_axis / 2) on span{|0>, |level>}, identity on the
/// remaining level. sigma_{-n} = -sigma_n.
ComplexMatrix rotation_unitary(int level, Axis axis, double angle);

struct PreparationUnitary {
  int index;                  // 1..9
  std::vector<Pulse> pulses;  // written order; applied right to left
  ComplexMatrix matrix;
  QutritPureState state;      // matrix |0>

  /// e.g. "R2_y(pi) R1_y(pi/2)"
  std::string sequence() const;
};

/// The nine tomography unitaries U_j and states |psi_j> = U_j |0>.
const std::vector<PreparationUnitary>& preparation_set();

DensityMatrix density(const QutritPureState& psi);

/// rho -> (1 - eps) rho + eps * 1/d. Models imperfect state preparation.
DensityMatrix depolarize(const DensityMatrix& rho, double eps);

}  // namespace luders
