#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "luders/channels.hpp"
#include "luders/dynamics.hpp"
#include "luders/error.hpp"
#include "luders/linalg.hpp"
#include "luders/tomography.hpp"

namespace py = pybind11;
using namespace luders;

namespace {

using CArray = py::array_t<Complex, py::array::c_style | py::array::forcecast>;

py::array_t<Complex> to_numpy(const ComplexMatrix& m) {
  py::array_t<Complex> out({m.rows(), m.cols()});
  auto view = out.mutable_unchecked<2>();
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) view(r, c) = m(r, c);
  return out;
}

ComplexMatrix from_numpy(const CArray& a) {
  if (a.ndim() != 2) throw Error(ErrorCode::DimensionMismatch, "expected a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return ComplexMatrix(rows, cols, std::vector<Complex>(a.data(), a.data() + rows * cols));
}

py::array_t<double> grid_to_numpy(const Grid& g) {
  py::array_t<double> out({9, 9});
  std::copy(g.begin(), g.end(), out.mutable_data());
  return out;
}

TomographyDataset dataset_from(const py::array_t<int, py::array::c_style | py::array::forcecast>& counts, int shots) {
  if (counts.size() != 81) throw Error(ErrorCode::DimensionMismatch, "counts must have 81 entries (9x9)");
  std::array<int, 81> c{};
  std::copy(counts.data(), counts.data() + 81, c.begin());
  return TomographyDataset(c, shots, TomographyDataset::Loaded{"python"});
}

ReconstructOptions options(const std::string& loss, std::uint64_t seed) {
  ReconstructOptions o;
  if (loss == "ml") o.loss = FitLoss::BinomialLikelihood;
  else if (loss != "ls") throw Error(ErrorCode::ConfigError, "loss must be 'ls' or 'ml'");
  o.seed = seed;
  return o;
}

py::dict result_dict(const ReconstructionResult& r) {
  py::dict d;
  d["chi"] = to_numpy(r.chi.matrix());
  d["residual"] = r.residual;
  d["objective"] = r.objective;
  d["tp_deviation"] = r.tp_deviation;
  d["iterations"] = r.iterations;
  d["converged"] = r.converged;
  return d;
}

ExperimentParams params(double omega_mhz, double gamma_mhz, double delta_mhz, double t_s, double phase_r) {
  ExperimentParams p;
  p.omega = angular_mhz(omega_mhz);
  p.gamma = angular_mhz(gamma_mhz);
  p.delta = angular_mhz(delta_mhz);
  p.duration = t_s;
  p.phase_r = phase_r;
  p.validate();
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Lueders measurement channels, dynamics and process tomography";

  static PyObject* error = PyErr_NewException("luders._core.LudersError", PyExc_RuntimeError, nullptr);
  m.add_object("LudersError", py::handle(error));
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string message = std::string(to_string(e.code())) + ": " + e.what();
      PyErr_SetString(error, message.c_str());
    }
  });

  m.def("herm_eig", [](const CArray& a) {
    const auto e = herm_eig(from_numpy(a));
    return py::make_tuple(e.values, to_numpy(e.vectors));
  }, "Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.");
  m.def("psd_sqrt", [](const CArray& a) { return to_numpy(psd_sqrt(from_numpy(a))); });

  m.def("preparation_states", [] {
    std::vector<std::vector<Complex>> out;
    for (const auto& u : preparation_set()) {
      const auto& a = u.state.amplitudes();
      out.emplace_back(a.begin(), a.end());
    }
    return out;
  }, "Amplitudes of the nine preparation / measurement states.");

  m.def("identity_channel", [] { return to_numpy(identity_channel().matrix()); });
  m.def("measurement_channel", [](Complex g0) { return to_numpy(measurement_channel(g0).matrix()); }, py::arg("g0"));
  m.def("lueders_channel", [](const std::vector<CArray>& projectors) {
    std::vector<ComplexMatrix> ps;
    for (const auto& p : projectors) ps.push_back(from_numpy(p));
    return to_numpy(lueders_channel(ps).matrix());
  }, py::arg("projectors"));
  m.def("apply", [](const CArray& chi, const CArray& rho) {
    return to_numpy(apply(ProcessChoi(from_numpy(chi)), DensityMatrix(from_numpy(rho))));
  }, py::arg("chi"), py::arg("rho"));
  m.def("process_fidelity", [](const CArray& a, const CArray& b) {
    return process_fidelity(ProcessChoi(from_numpy(a)), ProcessChoi(from_numpy(b)));
  }, py::arg("a"), py::arg("b"));

  m.def("g0_exact", [](double omega_mhz, double gamma_mhz, double delta_mhz, double t_s, double phase_r) {
    return g0_exact(params(omega_mhz, gamma_mhz, delta_mhz, t_s, phase_r));
  }, py::arg("omega_mhz"), py::arg("gamma_mhz") = 21.65, py::arg("delta_mhz") = 5.0, py::arg("t_s") = 1e-6,
        py::arg("phase_r") = 0.0);
  m.def("g0_adiabatic", [](double omega_mhz, double gamma_mhz, double delta_mhz, double t_s, double phase_r) {
    return g0_adiabatic(params(omega_mhz, gamma_mhz, delta_mhz, t_s, phase_r));
  }, py::arg("omega_mhz"), py::arg("gamma_mhz") = 21.65, py::arg("delta_mhz") = 5.0, py::arg("t_s") = 1e-6,
        py::arg("phase_r") = 0.0);
  m.def("p_scatt", [](Complex g0) { return p_scatt(g0); }, py::arg("g0"));
  m.def("param_uncertainty", [](double omega_mhz, double omega_unc_mhz, double delta_unc_mhz, std::size_t n,
                                std::uint64_t seed) {
    ExperimentParams p;
    p.omega = angular_mhz(omega_mhz);
    p.omega_uncertainty = angular_mhz(omega_unc_mhz);
    p.delta_uncertainty = angular_mhz(delta_unc_mhz);
    const auto iv = param_uncertainty(p, n, seed);
    return py::make_tuple(iv.lower, iv.median, iv.upper);
  }, py::arg("omega_mhz"), py::arg("omega_uncertainty_mhz"), py::arg("delta_uncertainty_mhz") = 2.0,
        py::arg("n_samples") = 1000, py::arg("seed") = 1);

  m.def("probabilities", [](const CArray& chi, double eps) {
    return grid_to_numpy(probabilities(ProcessChoi(from_numpy(chi)), eps));
  }, py::arg("chi"), py::arg("prep_depolarization") = 0.0);
  m.def("simulate_dataset", [](const CArray& chi, int shots, std::uint64_t seed, double eps) {
    const auto d = simulate_dataset(ProcessChoi(from_numpy(chi)), shots, seed, eps);
    py::array_t<int> out({9, 9});
    std::copy(d.counts().begin(), d.counts().end(), out.mutable_data());
    return out;
  }, py::arg("chi"), py::arg("shots"), py::arg("seed"), py::arg("prep_depolarization") = 0.0,
        "9x9 click counts n[i, j] (preparation i, measurement j).");

  m.def("reconstruct", [](const py::array_t<int, py::array::c_style | py::array::forcecast>& counts, int shots,
                          const std::string& loss, std::uint64_t seed) {
    const auto data = dataset_from(counts, shots);
    const auto o = options(loss, seed);
    ReconstructionResult r = [&] {
      py::gil_scoped_release release;
      return reconstruct(data, o);
    }();
    return result_dict(r);
  }, py::arg("counts"), py::arg("shots"), py::arg("loss") = "ls", py::arg("seed") = 0x5eed);
  m.def("reconstruct_tp", [](const py::array_t<int, py::array::c_style | py::array::forcecast>& counts, int shots,
                             const std::string& loss, std::uint64_t seed) {
    const auto data = dataset_from(counts, shots);
    const auto o = options(loss, seed);
    ReconstructionResult r = [&] {
      py::gil_scoped_release release;
      return reconstruct_tp(data, o);
    }();
    return result_dict(r);
  }, py::arg("counts"), py::arg("shots"), py::arg("loss") = "ls", py::arg("seed") = 0x5eed);
  m.def("tp_likelihood_ratio_test", [](const py::array_t<int, py::array::c_style | py::array::forcecast>& counts,
                                       int shots, int dof, std::uint64_t seed) {
    const auto data = dataset_from(counts, shots);
    const auto o = options("ml", seed);
    LikelihoodRatioTest t = [&] {
      py::gil_scoped_release release;
      return tp_likelihood_ratio_test(data, o, dof);
    }();
    py::dict d;
    d["statistic"] = t.statistic;
    d["dof"] = t.dof;
    d["p_value"] = t.p_value;
    d["significance_sigma"] = t.significance_sigma;
    d["loglik_psd"] = t.loglik_psd;
    d["loglik_tp"] = t.loglik_tp;
    d["converged"] = t.converged;
    return d;
  }, py::arg("counts"), py::arg("shots"), py::arg("dof") = 9, py::arg("seed") = 0x5eed);
  m.def("bootstrap_uncertainty", [](const py::array_t<int, py::array::c_style | py::array::forcecast>& counts,
                                    int shots, int resamples, std::uint64_t seed) {
    const auto data = dataset_from(counts, shots);
    ElementIntervals iv = [&] {
      py::gil_scoped_release release;
      return bootstrap_uncertainty(data, resamples, seed);
    }();
    auto lower = [](const std::array<double, 81>& re, const std::array<double, 81>& im) {
      py::array_t<Complex> out({9, 9});
      Complex* p = out.mutable_data();
      for (std::size_t e = 0; e < 81; ++e) p[e] = {re[e], im[e]};
      return out;
    };
    py::dict d;
    d["lower"] = lower(iv.re_lower, iv.im_lower);
    d["upper"] = lower(iv.re_upper, iv.im_upper);
    d["resamples"] = iv.resamples;
    return d;
  }, py::arg("counts"), py::arg("shots"), py::arg("resamples") = 200, py::arg("seed") = 1,
        "16th / 84th percentile bounds; real and imaginary parts are independent intervals.");
}
