#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "luders/error.hpp"
#include "luders/io.hpp"
#include "luders/pipeline.hpp"

namespace {

using luders::Json;
using luders::Operation;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> row;
  std::optional<int> shots;
};

struct Standalone {
  std::string data;
  std::string choi;
  std::string reference;
  std::string loss = "ls";
  int resamples = 200;
  int dof = 9;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Pipeline config JSON");
  cmd->add_option("--seed", c.seed, "Master RNG seed");
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_option("--row", c.row, "Run only this row");
  cmd->add_option("--shots", c.shots, "Shots per tomography cell");
}

luders::PipelineConfig build_config(const Common& c, std::set<Operation> ops) {
  luders::PipelineConfig config = c.config.empty() ? luders::default_config() : luders::load_config(c.config);
  config.operations = std::move(ops);
  luders::apply_overrides(config, luders::Overrides{c.seed, c.out, c.row, c.shots});
  luders::validate(config);
  return config;
}

int run_config(const Common& c, std::set<Operation> ops) {
  const auto outcome = luders::run_pipeline(build_config(c, std::move(ops)));
  std::cout << outcome.report.dump(2) << '\n';
  return outcome.exit_code;
}

luders::ReconstructOptions options_for(const Standalone& s, const Common& c) {
  luders::ReconstructOptions o;
  if (s.loss == "ml") o.loss = luders::FitLoss::BinomialLikelihood;
  if (c.seed) o.seed = *c.seed;
  return o;
}

void emit(const Json& j, const Common& c, const std::string& file) {
  if (c.out) luders::write_text_file(*c.out + "/" + file, j.dump(2) + "\n");
  std::cout << j.dump(2) << '\n';
}

int cmd_reconstruct(const Standalone& s, const Common& c) {
  const auto data = luders::load_dataset(s.data);
  const auto result = luders::reconstruct(data, options_for(s, c));
  emit(luders::reconstruction_report(result, std::nullopt, std::nullopt), c, "reconstruction.json");
  return 0;
}

int cmd_fidelity(const Standalone& s) {
  const auto a = luders::choi_from_json(Json::parse(luders::read_text_file(s.choi)));
  const auto b = luders::choi_from_json(Json::parse(luders::read_text_file(s.reference)));
  std::cout << Json{{"fidelity", luders::process_fidelity(a, b)}}.dump(2) << '\n';
  return 0;
}

int cmd_tptest(const Standalone& s, const Common& c) {
  const auto data = luders::load_dataset(s.data);
  const auto t = luders::tp_likelihood_ratio_test(data, options_for(s, c), s.dof);
  emit(Json{{"statistic", t.statistic},
            {"dof", t.dof},
            {"p_value", t.p_value},
            {"significance_sigma", t.significance_sigma},
            {"loglik_psd", t.loglik_psd},
            {"loglik_tp", t.loglik_tp},
            {"converged", t.converged}},
       c, "tptest.json");
  return 0;
}

int cmd_bootstrap(const Standalone& s, const Common& c) {
  const auto data = luders::load_dataset(s.data);
  const auto iv = luders::bootstrap_uncertainty(data, s.resamples, c.seed.value_or(1), options_for(s, c));
  Json j{{"resamples", iv.resamples}};
  for (const char* key : {"re_lower", "re_upper", "im_lower", "im_upper"}) j[key] = Json::array();
  for (std::size_t e = 0; e < 81; ++e) {
    j["re_lower"].push_back(iv.re_lower[e]);
    j["re_upper"].push_back(iv.re_upper[e]);
    j["im_lower"].push_back(iv.im_lower[e]);
    j["im_upper"].push_back(iv.im_upper[e]);
  }
  emit(j, c, "bootstrap.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lueders measurement simulation and process tomography"};
  app.require_subcommand(1);
  Common common;
  Standalone s;

  auto* dynamics = app.add_subcommand("dynamics", "g0, P_scatt and trajectories per row");
  auto* simulate = app.add_subcommand("simulate", "Simulate tomography datasets per row");
  auto* reconstruct = app.add_subcommand("reconstruct", "Reconstruct a Choi matrix");
  auto* fidelity = app.add_subcommand("fidelity", "Process fidelity between two Choi matrices");
  auto* tptest = app.add_subcommand("tptest", "Likelihood-ratio trace-preservation test");
  auto* bootstrap = app.add_subcommand("bootstrap", "Bootstrap intervals on the Choi matrix");
  auto* pipeline = app.add_subcommand("pipeline", "Run the configured operations for every row");
  for (auto* cmd : {dynamics, simulate, reconstruct, fidelity, tptest, bootstrap, pipeline}) add_common(cmd, common);

  for (auto* cmd : {reconstruct, tptest, bootstrap}) {
    cmd->add_option("--data", s.data, "Dataset CSV (i,j,n,N); without it the config rows are used");
    cmd->add_option("--loss", s.loss, "ls or ml")->check(CLI::IsMember({"ls", "ml"}));
  }
  tptest->add_option("--dof", s.dof, "Degrees of freedom")->check(CLI::PositiveNumber);
  bootstrap->add_option("--resamples", s.resamples, "Bootstrap resamples (>= 100)");
  fidelity->add_option("--choi", s.choi, "Choi matrix JSON");
  fidelity->add_option("--reference", s.reference, "Reference Choi matrix JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*dynamics) return run_config(common, {Operation::Dynamics});
    if (*simulate) return run_config(common, {Operation::Simulate});
    if (*reconstruct) {
      return s.data.empty() ? run_config(common, {Operation::Reconstruct}) : cmd_reconstruct(s, common);
    }
    if (*fidelity) {
      if (s.choi.empty() != s.reference.empty()) {
        throw luders::Error(luders::ErrorCode::ConfigError, "--choi and --reference go together");
      }
      return s.choi.empty() ? run_config(common, {Operation::Compare}) : cmd_fidelity(s);
    }
    if (*tptest) return s.data.empty() ? run_config(common, {Operation::TpTest}) : cmd_tptest(s, common);
    if (*bootstrap) return s.data.empty() ? run_config(common, {Operation::Bootstrap}) : cmd_bootstrap(s, common);
    if (*pipeline) {
      luders::PipelineConfig config =
          common.config.empty() ? luders::default_config() : luders::load_config(common.config);
      luders::apply_overrides(config, luders::Overrides{common.seed, common.out, common.row, common.shots});
      const auto outcome = luders::run_pipeline(config);
      std::cout << outcome.report.dump(2) << '\n';
      return outcome.exit_code;
    }
  } catch (const luders::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return luders::exit_code_for(e.code());
  } catch (const Json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
