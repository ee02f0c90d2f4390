#include "luders/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <cctype>
#include <functional>
#include <future>
#include <limits>
#include <sstream>

#include "luders/error.hpp"
#include "luders/random.hpp"

namespace luders {
namespace fs = std::filesystem;
namespace {

constexpr std::array<std::pair<const char*, Operation>, 6> kOperationNames{{
    {"dynamics", Operation::Dynamics},
    {"simulate", Operation::Simulate},
    {"reconstruct", Operation::Reconstruct},
    {"compare", Operation::Compare},
    {"bootstrap", Operation::Bootstrap},
    {"tptest", Operation::TpTest},
}};

// Seed streams per row.
enum RowTask : std::uint64_t { kTaskSimulate = 0, kTaskMonteCarlo = 1, kTaskBootstrap = 2, kTaskStarts = 3 };

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) config_error(where + " must be an object");
  for (const auto& item : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) config_error("unknown key \"" + item.key() + "\" in " + where);
  }
}

double get_number(const Json& j, const char* key, const std::string& where) {
  if (!j[key].is_number()) config_error(where + "." + key + " must be a number");
  return j[key].get<double>();
}

long long get_integer(const Json& j, const char* key, const std::string& where) {
  if (!j[key].is_number_integer()) config_error(where + "." + key + " must be an integer");
  return j[key].get<long long>();
}

Complex get_complex(const Json& j, const std::string& where) {
  check_keys(j, where, {"re", "im"});
  if (!j.contains("re")) config_error(where + ".re is required");
  const double re = get_number(j, "re", where);
  const double im = j.contains("im") ? get_number(j, "im", where) : 0.0;
  return {re, im};
}

Json complex_json(Complex z) { return Json{{"re", z.real()}, {"im", z.imag()}}; }

bool wants(const PipelineConfig& c, Operation op) { return c.operations.count(op) > 0; }

bool needs_data(const PipelineConfig& c) {
  return wants(c, Operation::Simulate) || wants(c, Operation::Reconstruct) ||
         wants(c, Operation::Compare) || wants(c, Operation::Bootstrap) || wants(c, Operation::TpTest);
}

std::string to_csv(const std::function<void(std::ostream&)>& writer) {
  std::ostringstream os;
  writer(os);
  return os.str();
}

struct RowOutput {
  Json report;
  int exit_code = 0;
  std::optional<std::string> dynamics_line;
};

struct SuperpositionInput {
  const char* tag;
  std::size_t prep;  // 0-based index into the preparation set
};
// (|1> + i|2>)/sqrt2 and (|0> + i|2>)/sqrt2.
constexpr std::array<SuperpositionInput, 2> kSuperpositionInputs{{{"12", 8}, {"02", 6}}};

void write_trajectory(const ExperimentParams& p, std::size_t samples, const fs::path& file) {
  // Equal superposition of the three qutrit levels, excited level empty.
  const double a = 1.0 / std::sqrt(3.0);
  std::vector<Complex> psi{a, a, a, 0.0};
  const DensityMatrix rho0(outer(psi, psi));
  const double h = default_step(p.duration);
  const std::size_t steps = p.duration > 0.0 ? static_cast<std::size_t>(std::ceil(p.duration / h - 1e-9)) : 1;
  const std::size_t every = std::max<std::size_t>(1, steps / std::max<std::size_t>(1, samples));
  const IntegrationResult result = integrate(rho0, p, p.duration, every);
  write_text_file(file.string(), to_csv([&](std::ostream& os) { write_trajectory_csv(os, result.samples); }));
}

RowOutput run_row(const PipelineConfig& cfg, std::size_t index) {
  const PipelineRow& row = cfg.rows[index];
  const std::uint64_t row_seed = derive_seed(cfg.params.seed, index);
  const fs::path dir = fs::path(cfg.output_dir) / row.name;
  ExperimentParams p = cfg.params;
  p.omega = row.omega;
  p.omega_uncertainty = row.omega_uncertainty;

  RowOutput out;
  Json& r = out.report;
  r["name"] = row.name;
  r["omega_mhz"] = row.omega / kTwoPiMHz;
  r["omega_uncertainty_mhz"] = row.omega_uncertainty / kTwoPiMHz;
  bool loading = false;
  try {
    const Complex g0 = row_g0(cfg, row);
    r["g0"] = complex_json(g0);
    r["g0_source"] = row.g0 ? "config" : (cfg.g0_model == G0Model::Exact ? "exact" : "adiabatic");
    r["p_scatt"] = p_scatt(g0);
    const ProcessChoi model = measurement_channel(g0);

    if (wants(cfg, Operation::Dynamics)) {
      const Complex exact = g0_exact(p);
      const Complex adiabatic = g0_adiabatic(p);
      const ScatterInterval interval =
          param_uncertainty(p, cfg.mc_samples, derive_seed(row_seed, kTaskMonteCarlo), cfg.g0_model);
      write_trajectory(p, cfg.trajectory_samples, dir / "trajectory.csv");
      r["dynamics"] = Json{
          {"g0_exact", complex_json(exact)},
          {"g0_adiabatic", complex_json(adiabatic)},
          {"p_scatt_exact", p_scatt(exact)},
          {"p_scatt_adiabatic", p_scatt(adiabatic)},
          {"adiabatic_regime", adiabatic_regime(p)},
          {"p_scatt_interval", Json{{"lower", interval.lower}, {"median", interval.median}, {"upper", interval.upper}}},
          {"trajectory", "trajectory.csv"},
      };
      std::ostringstream line;
      line.precision(12);
      line << row.name << ',' << row.omega / kTwoPiMHz << ',' << exact.real() << ',' << exact.imag() << ','
           << adiabatic.real() << ',' << adiabatic.imag() << ',' << p_scatt(exact) << ','
           << p_scatt(adiabatic) << ',' << interval.lower << ',' << interval.median << ',' << interval.upper;
      out.dynamics_line = line.str();
    }

    if (!needs_data(cfg)) {
      r["status"] = "ok";
      return out;
    }

    std::optional<TomographyDataset> data;
    if (row.dataset) {
      loading = true;
      data = load_dataset(*row.dataset);
      loading = false;
      r["dataset"] = Json{{"source", "loaded"}, {"path", *row.dataset}, {"shots", data->shots()}};
    } else {
      const std::uint64_t seed = derive_seed(row_seed, kTaskSimulate);
      data = simulate_dataset(model, p.shots, seed, cfg.prep_depolarization);
      r["dataset"] = Json{{"source", "simulated"},
                          {"seed", seed},
                          {"shots", data->shots()},
                          {"prep_depolarization", cfg.prep_depolarization}};
    }
    write_text_file((dir / "dataset.csv").string(),
                    to_csv([&](std::ostream& os) { write_dataset_csv(os, *data); }));
    r["dataset"]["file"] = "dataset.csv";

    ReconstructOptions options;
    options.seed = derive_seed(row_seed, kTaskStarts);

    std::optional<LikelihoodRatioTest> test;
    if (wants(cfg, Operation::TpTest)) {
      test = tp_likelihood_ratio_test(*data, options, cfg.tp_dof);
      r["tp_test"] = Json{{"statistic", test->statistic},
                          {"dof", test->dof},
                          {"p_value", test->p_value},
                          {"significance_sigma", test->significance_sigma},
                          {"loglik_psd", test->loglik_psd},
                          {"loglik_tp", test->loglik_tp},
                          {"converged", test->converged}};
    }

    if (wants(cfg, Operation::Reconstruct) || wants(cfg, Operation::Compare)) {
      const ReconstructionResult result = reconstruct(*data, options);
      std::optional<double> fidelity;
      if (wants(cfg, Operation::Compare)) fidelity = process_fidelity(result.chi, model);
      Json rec = reconstruction_report(result, fidelity, test);
      rec["chi_file"] = "chi_exp.json";
      // Mean |chi(00, 11)|, |chi(00, 22)|: the coherences carried by g0.
      rec["coherence_0_xi"] = 0.5 * (std::abs(result.chi(0, 4)) + std::abs(result.chi(0, 8)));
      r["reconstruction"] = std::move(rec);

      write_text_file((dir / "chi_exp.json").string(), choi_to_json(result.chi).dump(2) + "\n");
      write_text_file((dir / "chi_exp_bars.csv").string(),
                      to_csv([&](std::ostream& os) { write_choi_bars(os, result.chi); }));
      write_text_file((dir / "chi_model.json").string(), choi_to_json(model, g0).dump(2) + "\n");
      write_text_file((dir / "chi_model_bars.csv").string(),
                      to_csv([&](std::ostream& os) { write_choi_bars(os, model); }));
      for (const SuperpositionInput& s : kSuperpositionInputs) {
        const DensityMatrix in = density(preparation_set()[s.prep].state);
        const std::string tag = std::string("rho_") + s.tag;
        write_text_file((dir / (tag + "_input.csv")).string(),
                        to_csv([&](std::ostream& os) { write_density_bars(os, in.matrix()); }));
        write_text_file((dir / (tag + "_model.csv")).string(),
                        to_csv([&](std::ostream& os) { write_density_bars(os, apply(model, in)); }));
        write_text_file((dir / (tag + "_exp.csv")).string(),
                        to_csv([&](std::ostream& os) { write_density_bars(os, apply(result.chi, in)); }));
      }
    }

    if (wants(cfg, Operation::Bootstrap)) {
      const ElementIntervals iv =
          bootstrap_uncertainty(*data, cfg.bootstrap_resamples, derive_seed(row_seed, kTaskBootstrap), options);
      std::ostringstream os;
      os.precision(12);
      os << "row_label,col_label,re_lower,re_upper,im_lower,im_upper\n";
      for (std::size_t e = 0; e < 81; ++e) {
        const std::size_t rr = e / 9, cc = e % 9;
        os << rr / 3 << rr % 3 << ',' << cc / 3 << cc % 3 << ',' << iv.re_lower[e] << ',' << iv.re_upper[e]
           << ',' << iv.im_lower[e] << ',' << iv.im_upper[e] << '\n';
      }
      write_text_file((dir / "bootstrap.csv").string(), os.str());
      r["bootstrap"] = Json{{"resamples", iv.resamples}, {"file", "bootstrap.csv"}};
    }
    r["status"] = "ok";
  } catch (const Error& e) {
    r["status"] = "failed";
    r["error"] = Json{{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
    out.exit_code = loading ? 4 : exit_code_for(e.code());
  }
  return out;
}

}  // namespace

std::string to_string(Operation op) {
  for (const auto& [name, value] : kOperationNames)
    if (value == op) return name;
  return "unknown";
}

PipelineConfig default_config() {
  PipelineConfig c;
  const std::array<std::array<double, 2>, 4> table{{{1.3, 0.1}, {1.9, 0.2}, {3.2, 0.3}, {15.2, 1.5}}};
  const std::array<const char*, 4> names{"a", "b", "c", "d"};
  for (std::size_t k = 0; k < table.size(); ++k) {
    PipelineRow row;
    row.name = names[k];
    row.omega = angular_mhz(table[k][0]);
    row.omega_uncertainty = angular_mhz(table[k][1]);
    c.rows.push_back(row);
  }
  for (const auto& entry : kOperationNames) c.operations.insert(entry.second);
  return c;
}

PipelineConfig parse_config(const Json& j, const std::string& base_dir) {
  PipelineConfig c = default_config();
  check_keys(j, "config",
             {"params", "rows", "output_dir", "operations", "prep_depolarization", "mc_samples",
              "bootstrap_resamples", "tp_dof", "g0_model", "trajectory_samples"});

  if (j.contains("params")) {
    const Json& p = j["params"];
    check_keys(p, "params",
               {"gamma_mhz", "delta_mhz", "delta_uncertainty_mhz", "t_s", "phase_r", "shots", "seed"});
    if (p.contains("gamma_mhz")) c.params.gamma = angular_mhz(get_number(p, "gamma_mhz", "params"));
    if (p.contains("delta_mhz")) c.params.delta = angular_mhz(get_number(p, "delta_mhz", "params"));
    if (p.contains("delta_uncertainty_mhz"))
      c.params.delta_uncertainty = angular_mhz(get_number(p, "delta_uncertainty_mhz", "params"));
    if (p.contains("t_s")) c.params.duration = get_number(p, "t_s", "params");
    if (p.contains("phase_r")) c.params.phase_r = get_number(p, "phase_r", "params");
    if (p.contains("shots")) {
      const long long shots = get_integer(p, "shots", "params");
      if (shots < 1 || shots > std::numeric_limits<int>::max()) config_error("params.shots out of range");
      c.params.shots = static_cast<int>(shots);
    }
    if (p.contains("seed")) {
      if (!p["seed"].is_number_unsigned()) config_error("params.seed must be a non-negative integer");
      c.params.seed = p["seed"].get<std::uint64_t>();
    }
  }

  if (j.contains("rows")) {
    if (!j["rows"].is_array()) config_error("rows must be an array");
    c.rows.clear();
    for (std::size_t k = 0; k < j["rows"].size(); ++k) {
      const Json& rj = j["rows"][k];
      const std::string where = "rows[" + std::to_string(k) + "]";
      check_keys(rj, where, {"name", "omega_mhz", "omega_uncertainty_mhz", "g0", "dataset"});
      PipelineRow row;
      if (!rj.contains("name") || !rj["name"].is_string()) config_error(where + ".name must be a string");
      row.name = rj["name"].get<std::string>();
      if (rj.contains("omega_mhz")) row.omega = angular_mhz(get_number(rj, "omega_mhz", where));
      if (rj.contains("omega_uncertainty_mhz"))
        row.omega_uncertainty = angular_mhz(get_number(rj, "omega_uncertainty_mhz", where));
      if (rj.contains("g0")) row.g0 = get_complex(rj["g0"], where + ".g0");
      if (rj.contains("dataset")) {
        if (!rj["dataset"].is_string()) config_error(where + ".dataset must be a path");
        fs::path path(rj["dataset"].get<std::string>());
        if (path.is_relative() && !base_dir.empty()) path = fs::path(base_dir) / path;
        row.dataset = path.string();
      }
      c.rows.push_back(std::move(row));
    }
  }

  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) config_error("output_dir must be a string");
    c.output_dir = j["output_dir"].get<std::string>();
  }
  if (j.contains("operations")) {
    if (!j["operations"].is_array()) config_error("operations must be an array");
    c.operations.clear();
    for (const Json& op : j["operations"]) {
      if (!op.is_string()) config_error("operations must be strings");
      const std::string name = op.get<std::string>();
      const auto it = std::find_if(kOperationNames.begin(), kOperationNames.end(),
                                   [&](const auto& e) { return name == e.first; });
      if (it == kOperationNames.end()) config_error("unknown operation \"" + name + "\"");
      c.operations.insert(it->second);
    }
  }
  if (j.contains("prep_depolarization"))
    c.prep_depolarization = get_number(j, "prep_depolarization", "config");
  if (j.contains("mc_samples")) {
    const long long n = get_integer(j, "mc_samples", "config");
    if (n < 0) config_error("mc_samples must be >= 0");
    c.mc_samples = static_cast<std::size_t>(n);
  }
  if (j.contains("bootstrap_resamples"))
    c.bootstrap_resamples = static_cast<int>(get_integer(j, "bootstrap_resamples", "config"));
  if (j.contains("tp_dof")) c.tp_dof = static_cast<int>(get_integer(j, "tp_dof", "config"));
  if (j.contains("trajectory_samples")) {
    const long long n = get_integer(j, "trajectory_samples", "config");
    if (n < 1) config_error("trajectory_samples must be >= 1");
    c.trajectory_samples = static_cast<std::size_t>(n);
  }
  if (j.contains("g0_model")) {
    const std::string m = j["g0_model"].is_string() ? j["g0_model"].get<std::string>() : "";
    if (m == "adiabatic") c.g0_model = G0Model::Adiabatic;
    else if (m == "exact") c.g0_model = G0Model::Exact;
    else config_error("g0_model must be \"adiabatic\" or \"exact\"");
  }
  validate(c);
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    config_error(e.what());
  }
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    config_error("cannot parse " + path + ": " + e.what());
  }
  return parse_config(j, fs::path(path).parent_path().string());
}

void apply_overrides(PipelineConfig& config, const Overrides& o) {
  if (o.seed) config.params.seed = *o.seed;
  if (o.output_dir) config.output_dir = *o.output_dir;
  if (o.shots) {
    if (*o.shots < 1) config_error("--shots must be >= 1");
    config.params.shots = *o.shots;
  }
  if (o.row) {
    const auto it = std::find_if(config.rows.begin(), config.rows.end(),
                                 [&](const PipelineRow& r) { return r.name == *o.row; });
    if (it == config.rows.end()) config_error("no row named \"" + *o.row + "\"");
    const PipelineRow keep = *it;
    config.rows = {keep};
  }
}

void validate(const PipelineConfig& c) {
  if (c.operations.empty()) config_error("at least one operation is required");
  if (c.rows.empty()) config_error("at least one row is required");
  if (!(c.params.gamma > 0.0)) config_error("gamma must be positive");
  if (!(c.params.duration >= 0.0)) config_error("t_s must be >= 0");
  if (c.params.shots < 1) config_error("shots must be >= 1");
  if (c.params.delta_uncertainty < 0.0) config_error("delta_uncertainty must be >= 0");
  if (!(c.prep_depolarization >= 0.0 && c.prep_depolarization <= 1.0))
    config_error("prep_depolarization must be in [0, 1]");
  if (c.operations.count(Operation::Dynamics) && c.mc_samples < 100) config_error("mc_samples must be >= 100");
  if (c.operations.count(Operation::Bootstrap) && c.bootstrap_resamples < 100)
    config_error("bootstrap_resamples must be >= 100");
  if (c.tp_dof < 1) config_error("tp_dof must be >= 1");
  if (c.output_dir.empty()) config_error("output_dir must not be empty");
  std::set<std::string> names;
  for (const PipelineRow& row : c.rows) {
    if (row.name.empty() || !std::all_of(row.name.begin(), row.name.end(), [](char ch) {
          return std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_';
        })) {
      config_error("row name \"" + row.name + "\" must be non-empty [A-Za-z0-9_-]");
    }
    if (!names.insert(row.name).second) config_error("duplicate row name \"" + row.name + "\"");
    if (row.omega < 0.0 || row.omega_uncertainty < 0.0) config_error("row " + row.name + ": negative omega");
    if (row.g0 && std::abs(*row.g0) > 1.0 + 1e-12) config_error("row " + row.name + ": |g0| > 1");
    if (row.dataset && !fs::exists(*row.dataset)) {
      config_error("row " + row.name + ": dataset " + *row.dataset + " does not exist");
    }
  }
}

Complex row_g0(const PipelineConfig& config, const PipelineRow& row) {
  if (row.g0) return *row.g0;
  ExperimentParams p = config.params;
  p.omega = row.omega;
  return config.g0_model == G0Model::Exact ? g0_exact(p) : g0_adiabatic(p);
}

Json reconstruction_report(const ReconstructionResult& result, std::optional<double> fidelity,
                           std::optional<LikelihoodRatioTest> test) {
  Json j;
  j["chi"] = matrix_to_json(result.chi.matrix());
  j["residual"] = result.residual;
  j["tp_deviation"] = result.tp_deviation;
  j["fidelity_vs_model"] = fidelity ? Json(*fidelity) : Json(nullptr);
  j["significance_sigma"] = test ? Json(test->significance_sigma) : Json(nullptr);
  j["iterations"] = result.iterations;
  j["converged"] = result.converged;
  return j;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError: return 2;
    case ErrorCode::IoError:
    case ErrorCode::ParseError: return 4;
    default: return 3;
  }
}

PipelineOutcome run_pipeline(const PipelineConfig& config) {
  validate(config);
  std::vector<std::future<RowOutput>> jobs;
  for (std::size_t k = 0; k < config.rows.size(); ++k) {
    jobs.push_back(std::async(std::launch::async, run_row, std::cref(config), k));
  }
  std::vector<RowOutput> rows;
  for (auto& job : jobs) rows.push_back(job.get());

  PipelineOutcome outcome{Json::object(), 0};
  Json& report = outcome.report;
  report["params"] = Json{{"gamma_mhz", config.params.gamma / kTwoPiMHz},
                          {"delta_mhz", config.params.delta / kTwoPiMHz},
                          {"delta_uncertainty_mhz", config.params.delta_uncertainty / kTwoPiMHz},
                          {"t_s", config.params.duration},
                          {"phase_r", config.params.phase_r},
                          {"shots", config.params.shots},
                          {"seed", config.params.seed}};
  Json ops = Json::array();
  for (Operation op : config.operations) ops.push_back(to_string(op));
  report["operations"] = ops;
  report["prep_depolarization"] = config.prep_depolarization;
  report["g0_model"] = config.g0_model == G0Model::Exact ? "exact" : "adiabatic";
  report["rows"] = Json::array();
  std::string table;
  for (RowOutput& row : rows) {
    report["rows"].push_back(row.report);
    if (row.exit_code != 0 && outcome.exit_code == 0) outcome.exit_code = row.exit_code;
    if (row.dynamics_line) table += *row.dynamics_line + "\n";
  }
  report["status"] = outcome.exit_code == 0 ? "ok" : "failed";

  const fs::path dir(config.output_dir);
  if (!table.empty()) {
    write_text_file((dir / "dynamics.csv").string(),
                    "row,omega_mhz,g0_exact_re,g0_exact_im,g0_adiabatic_re,g0_adiabatic_im,"
                    "p_scatt_exact,p_scatt_adiabatic,p_scatt_lower,p_scatt_median,p_scatt_upper\n" +
                        table);
  }
  write_text_file((dir / "report.json").string(), report.dump(2) + "\n");
  return outcome;
}

}  // namespace luders
