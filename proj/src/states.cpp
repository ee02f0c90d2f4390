#include "luders/states.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "luders/error.hpp"

namespace luders {

DensityMatrix::DensityMatrix(ComplexMatrix m) : m_(std::move(m)) {
  if (!m_.is_square()) throw Error(ErrorCode::DimensionMismatch, "density matrix must be square");
  if (!is_hermitian(m_, 1e-10)) {
    throw Error(ErrorCode::NonHermitianInput, "density matrix is not Hermitian");
  }
  if (std::abs(m_.trace() - 1.0) > 1e-9) {
    throw Error(ErrorCode::NotNormalized, "density matrix trace is not 1");
  }
}

double DensityMatrix::purity() const { return (m_ * m_).trace().real(); }

QutritPureState::QutritPureState(std::array<Complex, 3> amplitudes) : amps_(amplitudes) {
  double n = 0.0;
  for (const auto& a : amps_) n += std::norm(a);
  if (std::abs(n - 1.0) > 1e-12) {
    throw Error(ErrorCode::NotNormalized, "state norm^2 = " + std::to_string(n));
  }
}

QutritPureState QutritPureState::normalized(std::array<Complex, 3> amplitudes) {
  double n = 0.0;
  for (const auto& a : amplitudes) n += std::norm(a);
  if (n == 0.0) throw Error(ErrorCode::NotNormalized, "zero vector");
  const double inv = 1.0 / std::sqrt(n);
  for (auto& a : amplitudes) a *= inv;
  return QutritPureState(amplitudes);
}

QutritPureState QutritPureState::basis(std::size_t level) {
  std::array<Complex, 3> a{};
  a.at(level) = 1.0;
  return QutritPureState(a);
}

bool same_up_to_phase(const QutritPureState& a, const QutritPureState& b, double tol) {
  Complex overlap = 0.0;
  for (std::size_t i = 0; i < 3; ++i) overlap += std::conj(a[i]) * b[i];
  return std::abs(std::abs(overlap) - 1.0) <= tol;
}

std::string to_string(Axis axis) {
  switch (axis) {
    case Axis::X: return "x";
    case Axis::MinusX: return "-x";
    case Axis::Y: return "y";
    case Axis::MinusY: return "-y";
  }
  return "?";
}

ComplexMatrix rotation_unitary(int level, Axis axis, double angle) {
  if (level != 1 && level != 2) {
    throw Error(ErrorCode::DimensionMismatch, "rotation level must be 1 or 2");
  }
  // sigma restricted to {|0>, |level>}: off-diagonal element <0|sigma|level>.
  Complex upper;
  switch (axis) {
    case Axis::X: upper = 1.0; break;
    case Axis::MinusX: upper = -1.0; break;
    case Axis::Y: upper = Complex(0.0, -1.0); break;
    case Axis::MinusY: upper = Complex(0.0, 1.0); break;
  }
  const double c = std::cos(angle / 2.0);
  const double s = std::sin(angle / 2.0);
  const Complex minus_i_s(0.0, -s);

  ComplexMatrix u = ComplexMatrix::identity(3);
  const auto l = static_cast<std::size_t>(level);
  u(0, 0) = c;
  u(l, l) = c;
  u(0, l) = minus_i_s * upper;
  u(l, 0) = minus_i_s * std::conj(upper);
  return u;
}

std::string PreparationUnitary::sequence() const {
  if (pulses.empty()) return "1";
  std::ostringstream os;
  for (std::size_t k = 0; k < pulses.size(); ++k) {
    const Pulse& p = pulses[k];
    if (k) os << ' ';
    os << 'R' << p.level << '_' << to_string(p.axis) << '(';
    if (std::abs(p.angle - std::numbers::pi) < 1e-12) {
      os << "pi";
    } else if (std::abs(p.angle - std::numbers::pi / 2) < 1e-12) {
      os << "pi/2";
    } else {
      os << p.angle;
    }
    os << ')';
  }
  return os.str();
}

namespace {

PreparationUnitary make_preparation(int index, std::vector<Pulse> pulses) {
  ComplexMatrix u = ComplexMatrix::identity(3);
  // Written left to right, applied right to left: U = P_0 P_1 ... P_k.
  for (const Pulse& p : pulses) u = u * rotation_unitary(p.level, p.axis, p.angle);
  std::array<Complex, 3> amps{u(0, 0), u(1, 0), u(2, 0)};
  return PreparationUnitary{index, std::move(pulses), u, QutritPureState::normalized(amps)};
}

std::vector<PreparationUnitary> build_preparation_set() {
  constexpr double pi = std::numbers::pi;
  std::vector<PreparationUnitary> set;
  set.push_back(make_preparation(1, {}));
  set.push_back(make_preparation(2, {{1, Axis::Y, pi}}));
  set.push_back(make_preparation(3, {{2, Axis::Y, pi}}));
  set.push_back(make_preparation(4, {{1, Axis::Y, pi / 2}}));
  set.push_back(make_preparation(5, {{1, Axis::MinusX, pi / 2}}));
  set.push_back(make_preparation(6, {{2, Axis::Y, pi / 2}}));
  set.push_back(make_preparation(7, {{2, Axis::MinusX, pi / 2}}));
  set.push_back(make_preparation(8, {{2, Axis::Y, pi}, {1, Axis::Y, pi / 2}}));
  // The pi pulse runs about -y so that U_9|0> = (|1> + i|2>)/sqrt(2); about +y
  // the same sequence gives (|1> - i|2>)/sqrt(2).
  set.push_back(make_preparation(9, {{2, Axis::MinusY, pi}, {1, Axis::MinusX, pi / 2}}));
  return set;
}

}  // namespace

const std::vector<PreparationUnitary>& preparation_set() {
  static const std::vector<PreparationUnitary> set = build_preparation_set();
  return set;
}

DensityMatrix density(const QutritPureState& psi) {
  return DensityMatrix(outer(psi.amplitudes(), psi.amplitudes()));
}

DensityMatrix depolarize(const DensityMatrix& rho, double eps) {
  if (eps < 0.0 || eps > 1.0) throw Error(ErrorCode::RangeError, "depolarization must be in [0,1]");
  ComplexMatrix m = rho.matrix() * (1.0 - eps);
  const double share = eps / static_cast<double>(rho.dim());
  for (std::size_t i = 0; i < rho.dim(); ++i) m(i, i) += share;
  return DensityMatrix(std::move(m));
}

}  // namespace luders
