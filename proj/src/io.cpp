#include "ptlab/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "ptlab/error.hpp"

namespace ptlab {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

[[noreturn]] void line_error(int line, const std::string& what) {
  raise(ErrorKind::kInvalidInput, "line " + std::to_string(line) + ": " + what);
}

double parse_number(const std::string& text, int line, const char* field) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    line_error(line, std::string("malformed ") + field + " '" + text + "'");
  }
  if (!std::isfinite(value)) line_error(line, std::string("non-finite ") + field);
  return value;
}

json number(double value) {
  // NaN and infinities have no JSON representation.
  if (!std::isfinite(value)) return nullptr;
  return value;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v[i]));
  return out;
}

json matrix_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_json(m.row(r).transpose()));
  return out;
}

Vector json_vector(const json& j, const char* name) {
  if (!j.is_array()) raise(ErrorKind::kInvalidInput, std::string(name) + " must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      raise(ErrorKind::kInvalidInput, std::string(name) + "[" + std::to_string(i) + "] is not a number");
    }
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    raise(ErrorKind::kInvalidInput, std::string("malformed ") + what + ": " + e.what());
  }
}

const json& require(const json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key)) {
    raise(ErrorKind::kInvalidInput, std::string(what) + " is missing '" + key + "'");
  }
  return j.at(key);
}

std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : "NA"; }

json config_json(const StudyConfig& c) {
  return {
      {"replications", c.replications},
      {"levels", c.levels},
      {"replica_counts", c.replica_counts},
      {"regime", to_string(c.regime)},
      {"hypothesis", c.hypothesis == Hypothesis::kGlobal ? "global" : "individual"},
      {"tested_lab", c.tested_lab},
      {"deviations", c.deviations},
      {"deviated_labs", c.deviated_labs},
      {"alpha_scale", c.alpha_scale},
      {"beta_scale", c.beta_scale},
      {"master_seed", c.master_seed},
      {"em", {{"tol_loglik", c.em.tol_loglik},
              {"tol_param", c.em.tol_param},
              {"tol_score", c.em.tol_score},
              {"max_iter", c.em.max_iter}}},
  };
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string format_fixed6(double value) {
  if (!std::isfinite(value)) return format_double(value);
  if (std::abs(value) < 5e-7) value = 0.0;
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, 6);
  return std::string(buf, ptr);
}

LabeledData parse_measurements(std::istream& in, const std::string& reference) {
  std::string line;
  int line_no = 0;
  // Skip blank lines before the header.
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) raise(ErrorKind::kInvalidInput, "measurement file is empty");
  auto header = split_csv(line);
  for (auto& h : header) std::transform(h.begin(), h.end(), h.begin(), ::tolower);
  if (header != std::vector<std::string>{"lab", "level", "replicate", "value"}) {
    line_error(line_no, "expected header 'lab,level,replicate,value'");
  }

  std::vector<std::string> labs, levels;
  std::map<std::string, int> lab_index, level_index;
  std::map<std::tuple<int, int, std::string>, int> seen;
  std::vector<std::vector<std::vector<double>>> cells;  // [lab][level] in file order

  auto index_of = [](std::map<std::string, int>& index, std::vector<std::string>& names,
                     const std::string& key) {
    auto [it, inserted] = index.emplace(key, static_cast<int>(names.size()));
    if (inserted) names.push_back(key);
    return it->second;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 4) {
      line_error(line_no, "expected 4 fields, found " + std::to_string(f.size()));
    }
    if (f[0].empty() || f[1].empty() || f[2].empty()) line_error(line_no, "empty key field");
    const double value = parse_number(f[3], line_no, "value");
    const int i = index_of(lab_index, labs, f[0]);
    const int j = index_of(level_index, levels, f[1]);
    auto [it, inserted] = seen.emplace(std::make_tuple(i, j, f[2]), line_no);
    if (!inserted) {
      line_error(line_no, "duplicate (lab, level, replicate) = (" + f[0] + ", " + f[1] + ", " +
                              f[2] + "), first seen on line " + std::to_string(it->second));
    }
    if (cells.size() <= static_cast<std::size_t>(i)) cells.resize(i + 1);
    if (cells[i].size() <= static_cast<std::size_t>(j)) cells[i].resize(j + 1);
    cells[i][j].push_back(value);
  }
  if (labs.empty()) raise(ErrorKind::kInvalidInput, "measurement file has no data rows");

  int ref = 0;
  if (!reference.empty()) {
    auto it = lab_index.find(reference);
    if (it == lab_index.end()) {
      raise(ErrorKind::kInvalidInput, "reference lab '" + reference + "' not found in data");
    }
    ref = it->second;
  }
  std::vector<int> order{ref};
  for (int i = 0; i < static_cast<int>(labs.size()); ++i) {
    if (i != ref) order.push_back(i);
  }

  LabeledData out;
  std::vector<std::vector<Vector>> values;
  for (int i : order) {
    cells[i].resize(levels.size());
    std::vector<Vector> row;
    for (std::size_t j = 0; j < levels.size(); ++j) {
      const auto& c = cells[i][j];
      if (c.empty()) {
        raise(ErrorKind::kInvalidInput,
              "lab '" + labs[i] + "' has no measurements at level '" + levels[j] + "'");
      }
      if (c.size() != cells[i][0].size()) {
        raise(ErrorKind::kInvalidInput, "lab '" + labs[i] + "' has " + std::to_string(c.size()) +
                                            " replicates at level '" + levels[j] + "' but " +
                                            std::to_string(cells[i][0].size()) + " at level '" +
                                            levels[0] + "'");
      }
      row.push_back(Eigen::Map<const Vector>(c.data(), static_cast<Eigen::Index>(c.size())));
    }
    values.push_back(std::move(row));
    out.lab_names.push_back(labs[i]);
  }
  if (values.size() < 2) raise(ErrorKind::kInvalidInput, "at least two labs are required");
  out.level_names = levels;
  out.data = Measurements(std::move(values));
  return out;
}

LabeledData read_measurements(const std::filesystem::path& path, const std::string& reference) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::kIo, "cannot open " + path.string());
  return parse_measurements(in, reference);
}

void write_measurements(std::ostream& out, const LabeledData& labeled) {
  const Measurements& d = labeled.data;
  out << "lab,level,replicate,value\n";
  for (int i = 0; i < d.labs(); ++i) {
    for (int j = 0; j < d.levels(); ++j) {
      const Vector& c = d.cell(i, j);
      for (Eigen::Index k = 0; k < c.size(); ++k) {
        out << labeled.lab_names[i] << ',' << labeled.level_names[j] << ',' << k + 1 << ','
            << format_double(c[k]) << '\n';
      }
    }
  }
}

StudyDesign parse_design(const std::string& json_text, const std::vector<std::string>& lab_order) {
  const json j = parse_json(json_text, "design");
  const Vector sigma2_x = json_vector(require(j, "sigma2_x", "design"), "sigma2_x");
  const json& rows = require(j, "sigma2", "design");
  const json& reps = require(j, "replicas", "design");
  if (!rows.is_array() || !reps.is_array()) {
    raise(ErrorKind::kInvalidInput, "design: sigma2 and replicas must be arrays");
  }
  const auto p = static_cast<int>(rows.size());
  if (static_cast<int>(reps.size()) != p) {
    raise(ErrorKind::kInvalidInput, "design: sigma2 has " + std::to_string(p) +
                                        " rows but replicas has " + std::to_string(reps.size()));
  }

  std::vector<int> perm(p);
  for (int i = 0; i < p; ++i) perm[i] = i;
  if (j.contains("labs") && !lab_order.empty()) {
    const auto names = j.at("labs").get<std::vector<std::string>>();
    if (static_cast<int>(names.size()) != p) {
      raise(ErrorKind::kInvalidInput, "design: labs has a different length from sigma2");
    }
    if (lab_order.size() != names.size()) {
      raise(ErrorKind::kDimensionMismatch, "design lists " + std::to_string(p) +
                                               " labs but the data has " +
                                               std::to_string(lab_order.size()));
    }
    for (int i = 0; i < p; ++i) {
      auto it = std::find(names.begin(), names.end(), lab_order[i]);
      if (it == names.end()) {
        raise(ErrorKind::kDimensionMismatch, "lab '" + lab_order[i] + "' is not in the design");
      }
      perm[i] = static_cast<int>(it - names.begin());
    }
  }

  Matrix sigma2(p, sigma2_x.size());
  std::vector<int> replicas(p);
  for (int i = 0; i < p; ++i) {
    const Vector row = json_vector(rows[perm[i]], "sigma2 row");
    if (row.size() != sigma2_x.size()) {
      raise(ErrorKind::kInvalidInput, "design: sigma2 row " + std::to_string(perm[i]) + " has " +
                                          std::to_string(row.size()) + " entries, expected " +
                                          std::to_string(sigma2_x.size()));
    }
    sigma2.row(i) = row.transpose();
    if (!reps[perm[i]].is_number_integer()) {
      raise(ErrorKind::kInvalidInput, "design: replicas must be integers");
    }
    replicas[i] = reps[perm[i]].get<int>();
  }
  return StudyDesign::make(std::move(replicas), sigma2_x, sigma2);
}

StudyDesign read_design(const std::filesystem::path& path, const std::vector<std::string>& lab_order) {
  return parse_design(read_file(path), lab_order);
}

ParameterVector parse_parameters(const std::string& json_text) {
  const json j = parse_json(json_text, "parameters");
  ParameterVector theta;
  theta.mu_x = json_vector(require(j, "mu_x", "parameters"), "mu_x");
  theta.alpha = json_vector(require(j, "alpha", "parameters"), "alpha");
  theta.beta = json_vector(require(j, "beta", "parameters"), "beta");
  if (theta.alpha.size() != theta.beta.size()) {
    raise(ErrorKind::kDimensionMismatch, "parameters: alpha and beta differ in length");
  }
  return theta;
}

AnalysisConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  const json j = parse_json(json_text, "config");
  if (!j.is_object()) raise(ErrorKind::kInvalidInput, "config must be a JSON object");
  AnalysisConfig c;
  auto path = [&](const char* key) {
    std::filesystem::path p = j.at(key).get<std::string>();
    return p.is_absolute() ? p : base_dir / p;
  };
  try {
    if (j.contains("data")) c.data = path("data");
    if (j.contains("design")) c.design = path("design");
    if (j.contains("out")) c.out = path("out");
    if (j.contains("reference")) c.reference = j.at("reference").get<std::string>();
    if (j.contains("fwer")) c.fwer = j.at("fwer").get<double>();
    if (j.contains("ellipse_fwer")) c.ellipse_fwer = j.at("ellipse_fwer").get<double>();
    if (j.contains("method")) c.method = parse_adjustment(j.at("method").get<std::string>());
    if (j.contains("em")) {
      const json& em = j.at("em");
      if (em.contains("tol_loglik")) c.em.tol_loglik = em.at("tol_loglik").get<double>();
      if (em.contains("tol_param")) c.em.tol_param = em.at("tol_param").get<double>();
      if (em.contains("tol_score")) c.em.tol_score = em.at("tol_score").get<double>();
      if (em.contains("max_iter")) c.em.max_iter = em.at("max_iter").get<int>();
    }
  } catch (const json::exception& e) {
    raise(ErrorKind::kInvalidInput, std::string("config: ") + e.what());
  }
  if (!(c.fwer > 0.0 && c.fwer < 1.0)) raise(ErrorKind::kDomain, "config: fwer must lie in (0, 1)");
  c.em.validate();
  return c;
}

AnalysisConfig read_config(const std::filesystem::path& path) {
  return parse_config(read_file(path), path.parent_path());
}

std::string fit_json(const FitResult& fit, const LabeledData& labeled) {
  const ParameterVector& t = fit.theta_hat;
  json out;
  out["schema_version"] = kSchemaVersion;
  out["labs"] = labeled.lab_names;
  out["levels"] = labeled.level_names;
  out["reference_lab"] = labeled.lab_names.front();
  out["theta"] = {{"mu_x", vector_json(t.mu_x)},
                  {"alpha", vector_json(t.alpha)},
                  {"beta", vector_json(t.beta)}};
  out["loglik"] = number(fit.loglik());
  out["loglik_trace"] = vector_json(Eigen::Map<const Vector>(
      fit.loglik_trace.data(), static_cast<Eigen::Index>(fit.loglik_trace.size())));
  out["convergence"] = {{"converged", fit.converged},
                        {"iterations", fit.iterations},
                        {"max_abs_score", number(fit.max_abs_score)},
                        {"weakly_identified", fit.weakly_identified}};
  out["bias_information"] = matrix_json(fit.bias.info);
  out["bias_covariance"] = matrix_json(fit.bias.inverse);
  out["bias_condition"] = number(fit.bias.condition);
  return out.dump(2) + "\n";
}

ParameterVector parse_fit_theta(const std::string& json_text) {
  const json j = parse_json(json_text, "fit");
  return parse_parameters(require(j, "theta", "fit").dump());
}

void write_tests_csv(std::ostream& out, const WaldReport& report, const LabeledData& labeled) {
  out << "schema_version,lab,Q,df,p_raw,p_holm,p_hochberg,p_hommel,p_bonferroni,verdict\n";
  out << kSchemaVersion << ",global," << csv_number(report.global.statistic) << ','
      << report.global.df << ',' << csv_number(report.global.p_value) << ",,,,,"
      << (report.global.p_value <= report.alpha ? "reject" : "retain") << '\n';
  for (const LabVerdict& v : report.labs) {
    out << kSchemaVersion << ',' << labeled.lab_names[v.lab] << ',' << csv_number(v.test.statistic)
        << ',' << v.test.df << ',' << csv_number(v.test.p_value) << ','
        << csv_number(v.p_holm) << ',' << csv_number(v.p_hochberg) << ','
        << csv_number(v.p_hommel) << ',' << csv_number(v.p_bonferroni) << ','
        << (v.reject ? "reject" : "retain") << '\n';
  }
}

void write_tests_table(std::ostream& out, const WaldReport& report, const LabeledData& labeled) {
  out << "Global Wald statistic " << format_fixed6(report.global.statistic) << " on "
      << report.global.df << " df, p = " << format_fixed6(report.global.p_value) << "\n\n";
  out << std::left << std::setw(8) << "lab" << std::right;
  for (const char* h : {"Q", "p", "Holm", "Hochberg", "Hommel", "Bonferroni"}) {
    out << std::setw(14) << h;
  }
  out << "  verdict (" << to_string(report.method) << ", " << format_double(report.alpha) << ")\n";
  for (const LabVerdict& v : report.labs) {
    out << std::left << std::setw(8) << labeled.lab_names[v.lab] << std::right;
    for (double x : {v.test.statistic, v.test.p_value, v.p_holm, v.p_hochberg, v.p_hommel,
                     v.p_bonferroni}) {
      out << std::setw(14) << format_fixed6(x);
    }
    out << "  " << (v.reject ? "reject" : "retain") << '\n';
  }
}

void write_ellipse_csv(std::ostream& out, const EllipseSpec& e, const LabeledData& labeled) {
  out << "# lab " << labeled.lab_names[e.lab] << ", center (" << format_double(e.center[0]) << ", "
      << format_double(e.center[1]) << "), per-lab level " << format_double(e.level)
      << ", radius2 " << format_double(e.radius2) << '\n';
  out << "alpha,beta\n";
  for (const auto& z : e.boundary) out << format_double(z[0]) << ',' << format_double(z[1]) << '\n';
}

void emit_report(const FitResult& fit, const WaldReport& report,
                 const std::vector<EllipseSpec>& ellipses, const LabeledData& labeled,
                 const std::filesystem::path& dir) {
  write_file(dir / "fit.json", fit_json(fit, labeled));
  std::ostringstream tests, table;
  write_tests_csv(tests, report, labeled);
  write_tests_table(table, report, labeled);
  write_file(dir / "tests.csv", tests.str());
  write_file(dir / "tests_table.txt", table.str());
  for (const EllipseSpec& e : ellipses) {
    std::ostringstream s;
    write_ellipse_csv(s, e, labeled);
    write_file(dir / ("ellipse_" + labeled.lab_names[e.lab] + ".csv"), s.str());
  }
}

void write_size_csv(std::ostream& out, const StudyResult& result) {
  out << "replica_count,level,regime,rate,se,n_effective,failed\n";
  for (const SizeCell& c : result.cells) {
    out << c.replica_count << ',' << format_double(c.level) << ',' << c.regime << ','
        << csv_number(c.rate) << ',' << csv_number(c.se) << ',' << c.n_effective << ','
        << c.failed << '\n';
  }
}

std::string size_json(const StudyResult& result) {
  json cells = json::array();
  for (const SizeCell& c : result.cells) {
    cells.push_back({{"replica_count", c.replica_count},
                     {"level", c.level},
                     {"regime", c.regime},
                     {"rate", number(c.rate)},
                     {"se", number(c.se)},
                     {"n_effective", c.n_effective},
                     {"failed", c.failed}});
  }
  json out{{"schema_version", kSchemaVersion},
           {"study", "size"},
           {"seed", result.config.master_seed},
           {"config", config_json(result.config)},
           {"cells", cells}};
  return out.dump(2) + "\n";
}

void write_power_csv(std::ostream& out, const PowerResult& result) {
  out << "replica_count,deviation,regime,power,se,n_effective,failed\n";
  for (const PowerPoint& pt : result.points) {
    out << pt.replica_count << ',' << format_double(pt.deviation) << ',' << pt.regime << ','
        << csv_number(pt.power) << ',' << csv_number(pt.se) << ',' << pt.n_effective << ','
        << pt.failed << '\n';
  }
}

std::string power_json(const PowerResult& result) {
  json points = json::array();
  for (const PowerPoint& pt : result.points) {
    points.push_back({{"replica_count", pt.replica_count},
                      {"deviation", pt.deviation},
                      {"regime", pt.regime},
                      {"power", number(pt.power)},
                      {"se", number(pt.se)},
                      {"n_effective", pt.n_effective},
                      {"failed", pt.failed}});
  }
  json out{{"schema_version", kSchemaVersion},
           {"study", "power"},
           {"seed", result.config.master_seed},
           {"level", result.level},
           {"threshold", result.threshold},
           {"config", config_json(result.config)},
           {"points", points}};
  return out.dump(2) + "\n";
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) raise(ErrorKind::kIo, "cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  if (!out) raise(ErrorKind::kIo, "write failed for " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace ptlab
