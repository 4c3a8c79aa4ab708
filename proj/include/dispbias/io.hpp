#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dispbias/bias.hpp"
#include "dispbias/bootstrap.hpp"
#include "dispbias/fit.hpp"
#include "dispbias/model.hpp"
#include "dispbias/simulate.hpp"

namespace dispbias {

inline constexpr const char* kReportSchema = "dispbias-report/1";

/// Malformed or inconsistent configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or unusable data (exit code 3).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ColumnBinding {
  std::string identifier;  // name used in the predictors
  std::string column;      // header in the data file
};

struct RunConfig {
  std::filesystem::path source;  // the config file, for resolving relative paths

  std::string family;
  std::string mean_link = "identity";
  std::string dispersion_link = "log";
  std::string mean_formula;
  std::vector<std::string> mean_params;
  std::string dispersion_formula;
  std::vector<std::string> dispersion_params;
  std::optional<std::vector<double>> mean_start;
  std::optional<std::vector<double>> dispersion_start;

  std::string response;  // empty when only simulating
  std::vector<ColumnBinding> covariates;
  std::filesystem::path data;

  std::vector<double> alphas = {0.05};
  std::uint64_t seed = 1;
  unsigned threads = 1;
  FitOptions fit_options;

  BootScheme boot_scheme = BootScheme::parametric;
  int boot_B = 200;
  RefitPolicy boot_policy = RefitPolicy::skip_nonconverged;

  int sim_n = 20;
  int sim_replications = 2000;
  int sim_bootstrap_B = 200;
  std::vector<double> sim_truth;
  CovariateLaw sim_covariates = CovariateLaw::uniform01;
  std::filesystem::path sim_covariate_file;
  std::vector<double> sim_alphas = {0.10};

  std::vector<std::string> covariate_identifiers() const;
};

/// INI-style file with sections [model] [mean] [dispersion] [columns] [data]
/// [options] [bootstrap] [simulate]. Throws ConfigError naming the field.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::filesystem::path& source = {});

/// Builds the model; unresolved identifiers and unknown names raise ConfigError.
ModelSpec build_model(const RunConfig& config);
std::optional<StartValues> start_values(const RunConfig& config);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  const std::vector<double>& column(const std::string& name) const;  // throws DataError
};

/// Comma-delimited with a header row. Empty cells, NA and non-numeric text are
/// rejected with the line and column named.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text, const std::string& origin = "<text>");

Dataset bind_dataset(const CsvTable& table, const RunConfig& config);

StudyConfig study_config(const RunConfig& config);

using Json = nlohmann::json;

Json report_header(const std::string& command, const ModelSpec& model,
                   const std::vector<std::string>& covariate_names);
Json fit_json(const ModelSpec& model, const FitResult& fit, double alpha);
Json bias_json(const BiasReport& report);
Json bootstrap_json(const BootstrapPlan& plan, const BootstrapResult& result,
                    const MuPhiBias& mu_phi);
Json study_json(const StudyReport& report);

/// Canonical text: sorted keys, two-space indent, trailing newline.
std::string dump_report(const Json& report);
void write_report(const std::filesystem::path& path, const Json& report);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Parses a report and checks its schema stamp.
Json parse_report(const std::string& text);
Json read_report(const std::filesystem::path& path);

}  // namespace dispbias
