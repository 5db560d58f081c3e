// ptlab command-line front end.
//
// Exit status: 0 success, 2 input error, 3 numerical failure or non-convergence.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ptlab/error.hpp"
#include "ptlab/io.hpp"
#include "ptlab/simulation.hpp"

namespace fs = std::filesystem;
using namespace ptlab;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

struct AnalysisFlags {
  std::string config;
  std::string data;
  std::string design;
  std::string out;
  std::string reference;
  std::optional<double> fwer;
  std::optional<double> ellipse_fwer;
  std::string method;
  std::optional<int> max_iter;
};

void add_analysis_flags(CLI::App* cmd, AnalysisFlags& f) {
  cmd->add_option("--config", f.config, "JSON analysis config; flags override its entries");
  cmd->add_option("--data", f.data, "measurements CSV (lab,level,replicate,value)");
  cmd->add_option("--design", f.design, "design JSON (sigma2_x, sigma2, replicas)");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--reference", f.reference, "reference lab name (default: first lab in the file)");
  cmd->add_option("--fwer", f.fwer, "familywise error level (tests 0.05, ellipses 0.01)");
  cmd->add_option("--ellipse-fwer", f.ellipse_fwer, "familywise error level of the ellipses in `report`");
  cmd->add_option("--method", f.method, "bonferroni|holm|hochberg|hommel")
      ->check(CLI::IsMember({"bonferroni", "holm", "hochberg", "hommel"}));
  cmd->add_option("--max-iter", f.max_iter, "EM iteration limit");
}

AnalysisConfig resolve(const AnalysisFlags& f) {
  AnalysisConfig c = f.config.empty() ? AnalysisConfig{} : read_config(f.config);
  if (!f.data.empty()) c.data = f.data;
  if (!f.design.empty()) c.design = f.design;
  if (!f.out.empty()) c.out = f.out;
  if (!f.reference.empty()) c.reference = f.reference;
  if (f.fwer) c.fwer = *f.fwer;
  if (f.ellipse_fwer) c.ellipse_fwer = *f.ellipse_fwer;
  if (!f.method.empty()) c.method = parse_adjustment(f.method);
  if (f.max_iter) c.em.max_iter = *f.max_iter;
  if (c.data.empty()) raise(ErrorKind::kInvalidInput, "--data is required");
  if (c.design.empty()) raise(ErrorKind::kInvalidInput, "--design is required");
  if (!(c.fwer > 0.0 && c.fwer < 1.0)) raise(ErrorKind::kDomain, "--fwer must lie in (0, 1)");
  c.em.validate();
  return c;
}

struct Fitted {
  LabeledData labeled;
  FitResult fit;
};

Fitted load_and_fit(const AnalysisConfig& c) {
  Fitted r{read_measurements(c.data, c.reference), {}};
  const StudyDesign design = read_design(c.design, r.labeled.lab_names);
  r.fit = fit_em(r.labeled.data, design, c.em);
  return r;
}

void print_fit(const Fitted& f) {
  const ParameterVector& t = f.fit.theta_hat;
  std::cout << "EM " << (f.fit.converged ? "converged" : "did NOT converge") << " after "
            << f.fit.iterations << " iterations, log-likelihood " << format_double(f.fit.loglik())
            << '\n';
  std::cout << "lab       alpha_hat       beta_hat\n";
  for (int i = 1; i < t.labs(); ++i) {
    std::cout << f.labeled.lab_names[i] << "  " << format_fixed6(t.alpha_of(i)) << "  "
              << format_fixed6(t.beta_of(i)) << '\n';
  }
}

std::vector<EllipseSpec> all_ellipses(const FitResult& fit, double fwer) {
  std::vector<EllipseSpec> out;
  for (int i = 1; i < fit.labs(); ++i) {
    out.push_back(confidence_ellipse(fit, i, 1.0 - fwer, fit.labs() - 1));
  }
  return out;
}

int finish(const FitResult& fit) {
  if (fit.converged) return 0;
  std::cerr << "error: EM did not converge within " << fit.iterations << " iterations\n";
  return kExitNumerical;
}

struct SimFlags {
  std::string out = ".";
  std::uint64_t seed = StudyConfig{}.master_seed;
  std::optional<int> replications;
  bool full_scale = false;
  std::string regime = "a";
  int threads = 0;
  std::vector<int> replica_counts;
};

void add_sim_flags(CLI::App* cmd, SimFlags& f) {
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--replications", f.replications, "Monte Carlo replications per cell");
  cmd->add_flag("--full-scale", f.full_scale, "10000 replications per cell");
  cmd->add_option("--regime", f.regime, "error standard deviation regime")
      ->check(CLI::IsMember({"a", "b", "c"}));
  cmd->add_option("--threads", f.threads, "worker threads (0 = all cores)");
  cmd->add_option("--replica-counts", f.replica_counts, "replicas per lab, e.g. 3 7 15 30");
}

StudyConfig study_config(const SimFlags& f, int desk_replications) {
  StudyConfig c;
  c.master_seed = f.seed;
  c.replications = f.replications ? *f.replications : f.full_scale ? 10000 : desk_replications;
  c.regime = parse_regime(f.regime);
  c.threads = f.threads;
  if (!f.replica_counts.empty()) c.replica_counts = f.replica_counts;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Measurement-error model analysis for interlaboratory proficiency tests"};
  app.require_subcommand(1);

  AnalysisFlags fit_f, test_f, ell_f, rep_f;
  auto* fit_cmd = app.add_subcommand("fit", "fit the model by EM and write fit.json");
  add_analysis_flags(fit_cmd, fit_f);
  auto* test_cmd = app.add_subcommand("test", "global and per-lab Wald tests with adjusted p-values");
  add_analysis_flags(test_cmd, test_f);
  auto* ell_cmd = app.add_subcommand("ellipse", "joint confidence regions for (alpha_i, beta_i)");
  add_analysis_flags(ell_cmd, ell_f);
  auto* rep_cmd = app.add_subcommand("report", "fit, tests and ellipses in one pass");
  add_analysis_flags(rep_cmd, rep_f);

  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo studies and synthetic data");
  sim_cmd->require_subcommand(1);

  SimFlags size_f;
  std::string hypothesis = "global";
  int size_lab = 2;
  auto* size_cmd = sim_cmd->add_subcommand("size", "empirical size of the Wald tests");
  add_sim_flags(size_cmd, size_f);
  size_cmd->add_option("--hypothesis", hypothesis, "global or individual")
      ->check(CLI::IsMember({"global", "individual"}));
  size_cmd->add_option("--lab", size_lab, "lab tested by the individual test (1 = reference)")
      ->check(CLI::Range(2, 5));

  SimFlags power_f;
  double power_level = 0.05;
  std::vector<double> deviations;
  auto* power_cmd = sim_cmd->add_subcommand("power", "power of the global test along a deviation grid");
  add_sim_flags(power_cmd, power_f);
  power_cmd->add_option("--level", power_level, "nominal level")->check(CLI::Range(0.0, 1.0));
  power_cmd->add_option("--deviations", deviations, "deviation grid d");

  std::string data_design, data_truth, data_out;
  std::uint64_t data_seed = 1;
  auto* data_cmd = sim_cmd->add_subcommand("data", "draw one dataset from given parameters");
  data_cmd->add_option("--design", data_design, "design JSON")->required();
  data_cmd->add_option("--truth", data_truth, "parameter JSON (mu_x, alpha, beta) or a fit.json")
      ->required();
  data_cmd->add_option("--seed", data_seed, "seed");
  data_cmd->add_option("--out", data_out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*fit_cmd) {
      const AnalysisConfig c = resolve(fit_f);
      const Fitted f = load_and_fit(c);
      write_file(c.out / "fit.json", fit_json(f.fit, f.labeled));
      print_fit(f);
      return finish(f.fit);
    }
    if (*test_cmd) {
      const AnalysisConfig c = resolve(test_f);
      const Fitted f = load_and_fit(c);
      if (!f.fit.converged) return finish(f.fit);
      const WaldReport report = wald_report(f.fit, c.method, c.fwer);
      std::ostringstream csv, table;
      write_tests_csv(csv, report, f.labeled);
      write_tests_table(table, report, f.labeled);
      write_file(c.out / "tests.csv", csv.str());
      write_file(c.out / "tests_table.txt", table.str());
      std::cout << table.str();
      return 0;
    }
    if (*ell_cmd) {
      AnalysisConfig c = resolve(ell_f);
      const double fwer = ell_f.fwer ? *ell_f.fwer : c.ellipse_fwer.value_or(0.01);
      const Fitted f = load_and_fit(c);
      if (!f.fit.converged) return finish(f.fit);
      for (const EllipseSpec& e : all_ellipses(f.fit, fwer)) {
        std::ostringstream s;
        write_ellipse_csv(s, e, f.labeled);
        const fs::path path = c.out / ("ellipse_" + f.labeled.lab_names[e.lab] + ".csv");
        write_file(path, s.str());
        std::cout << "lab " << f.labeled.lab_names[e.lab]
                  << (e.contains({0.0, 1.0}) ? " covers" : " excludes") << " (0, 1): " << path.string()
                  << '\n';
      }
      return 0;
    }
    if (*rep_cmd) {
      const AnalysisConfig c = resolve(rep_f);
      const Fitted f = load_and_fit(c);
      if (!f.fit.converged) {
        write_file(c.out / "fit.json", fit_json(f.fit, f.labeled));
        return finish(f.fit);
      }
      const WaldReport report = wald_report(f.fit, c.method, c.fwer);
      emit_report(f.fit, report, all_ellipses(f.fit, c.ellipse_fwer.value_or(0.01)), f.labeled,
                  c.out);
      print_fit(f);
      std::ostringstream table;
      write_tests_table(table, report, f.labeled);
      std::cout << '\n' << table.str();
      return 0;
    }
    if (*size_cmd) {
      StudyConfig cfg = study_config(size_f, 2000);
      cfg.hypothesis = hypothesis == "global" ? Hypothesis::kGlobal : Hypothesis::kIndividual;
      cfg.tested_lab = size_lab - 1;
      const StudyResult r = empirical_size_study(cfg);
      std::ostringstream csv;
      write_size_csv(csv, r);
      write_file(fs::path(size_f.out) / "size.csv", csv.str());
      write_file(fs::path(size_f.out) / "size.json", size_json(r));
      std::cout << csv.str();
      return 0;
    }
    if (*power_cmd) {
      StudyConfig cfg = study_config(power_f, 1000);
      if (!deviations.empty()) cfg.deviations = deviations;
      const PowerResult r = power_study(cfg, power_level);
      std::ostringstream csv;
      write_power_csv(csv, r);
      write_file(fs::path(power_f.out) / "power.csv", csv.str());
      write_file(fs::path(power_f.out) / "power.json", power_json(r));
      std::cout << csv.str();
      return 0;
    }
    if (*data_cmd) {
      const std::string truth_text = read_file(data_truth);
      const ParameterVector theta = truth_text.find("\"theta\"") != std::string::npos
                                        ? parse_fit_theta(truth_text)
                                        : parse_parameters(truth_text);
      const StudyDesign design = read_design(data_design);
      const Measurements y = simulate_dataset({theta, design}, data_seed);
      LabeledData labeled{y, {}, {}};
      for (int i = 0; i < design.labs; ++i) labeled.lab_names.push_back(std::to_string(i + 1));
      for (int j = 0; j < design.levels; ++j) labeled.level_names.push_back(std::to_string(j + 1));
      std::ostringstream csv;
      write_measurements(csv, labeled);
      write_file(data_out, csv.str());
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.is_numerical() ? kExitNumerical : kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return 0;
}
