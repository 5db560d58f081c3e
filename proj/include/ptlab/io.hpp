#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ptlab/em.hpp"
#include "ptlab/model.hpp"
#include "ptlab/multiple_testing.hpp"
#include "ptlab/simulation.hpp"
#include "ptlab/wald.hpp"

namespace ptlab {

inline constexpr int kSchemaVersion = 1;

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);
/// Fixed six decimals; magnitudes below 5e-7 print as 0.000000.
std::string format_fixed6(double value);

/// Measurements plus the external names of labs and levels. Lab 0 is the
/// reference laboratory.
struct LabeledData {
  Measurements data;
  std::vector<std::string> lab_names;
  std::vector<std::string> level_names;
};

/// CSV with header `lab,level,replicate,value`. Labs and levels are arbitrary
/// strings; `reference` (or, if empty, the first lab in the file) becomes lab 0,
/// the others follow in order of first appearance, as do levels.
LabeledData parse_measurements(std::istream& in, const std::string& reference = {});
LabeledData read_measurements(const std::filesystem::path& path, const std::string& reference = {});
void write_measurements(std::ostream& out, const LabeledData& labeled);

/// JSON object with sigma2_x (m), sigma2 (p arrays of m) and replicas (p).
/// An optional "labs" array names the rows; when given, rows are reordered to
/// match `lab_order` (the data's lab names).
StudyDesign parse_design(const std::string& json_text,
                         const std::vector<std::string>& lab_order = {});
StudyDesign read_design(const std::filesystem::path& path,
                        const std::vector<std::string>& lab_order = {});

/// JSON object with mu_x, alpha and beta arrays.
ParameterVector parse_parameters(const std::string& json_text);

struct AnalysisConfig {
  std::filesystem::path data;
  std::filesystem::path design;
  std::string reference;
  double fwer = 0.05;
  std::optional<double> ellipse_fwer;  ///< defaults to 0.01 (99% regions)
  Adjustment method = Adjustment::kHochberg;
  EmSettings em;
  std::filesystem::path out = ".";
};

/// Relative paths are resolved against `base_dir`.
AnalysisConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);
AnalysisConfig read_config(const std::filesystem::path& path);

std::string fit_json(const FitResult& fit, const LabeledData& labeled);
/// Parses the theta block of a fit.json document back into a ParameterVector.
ParameterVector parse_fit_theta(const std::string& json_text);

void write_tests_csv(std::ostream& out, const WaldReport& report, const LabeledData& labeled);
/// Six-decimal human-readable table.
void write_tests_table(std::ostream& out, const WaldReport& report, const LabeledData& labeled);
void write_ellipse_csv(std::ostream& out, const EllipseSpec& ellipse, const LabeledData& labeled);

/// Writes fit.json, tests.csv, tests_table.txt and one ellipse_<lab>.csv per region.
/// Throws Error(kIo) if `dir` cannot be created or written.
void emit_report(const FitResult& fit, const WaldReport& report,
                 const std::vector<EllipseSpec>& ellipses, const LabeledData& labeled,
                 const std::filesystem::path& dir);

void write_size_csv(std::ostream& out, const StudyResult& result);
std::string size_json(const StudyResult& result);
void write_power_csv(std::ostream& out, const PowerResult& result);
std::string power_json(const PowerResult& result);

/// Writes text to a file, creating parent directories. Throws Error(kIo).
void write_file(const std::filesystem::path& path, const std::string& text);
std::string read_file(const std::filesystem::path& path);

}  // namespace ptlab
