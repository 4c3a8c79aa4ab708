#include "dispbias/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "dispbias/errors.hpp"

namespace dispbias {
namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> to_double(std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

template <class Int>
Int to_integer(const std::string& text, const std::string& field) {
  Int v{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(field + ": expected an integer, got '" + text + "'");
  }
  return v;
}

double number_field(const std::string& text, const std::string& field) {
  if (auto v = to_double(text)) return *v;
  throw ConfigError(field + ": expected a number, got '" + text + "'");
}

std::vector<double> number_list(const std::string& text, const std::string& field) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(number_field(item, field));
  return out;
}

std::vector<std::string> name_list(const std::string& text) {
  std::vector<std::string> out;
  for (auto& item : split(text, ',')) {
    if (!item.empty()) out.push_back(std::move(item));
  }
  return out;
}

class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  std::optional<std::string> get(const std::string& key) const {
    if (!tree_) return std::nullopt;
    auto v = tree_->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return trim(*v);
  }
  std::string require(const std::string& key) const {
    auto v = get(key);
    if (!v || v->empty()) throw ConfigError("missing required field " + field(key));
    return *v;
  }
  std::string field(const std::string& key) const { return "[" + name_ + "] " + key; }
  const pt::ptree* tree() const { return tree_; }

 private:
  const pt::ptree* tree_;
  std::string name_;
};

const std::vector<std::string> kSections = {"model",   "mean",      "dispersion", "columns",
                                            "data",    "options",   "bootstrap",  "simulate"};

// Accepted keys per section; [columns] takes any identifier.
const std::map<std::string, std::set<std::string>> kKeys = {
    {"model", {"family", "mean_link", "dispersion_link"}},
    {"mean", {"formula", "parameters", "start"}},
    {"dispersion", {"formula", "parameters", "start"}},
    {"data", {"path"}},
    {"options", {"alpha", "seed", "threads", "max_iterations", "score_tol", "step_tol", "scheme", "step"}},
    {"bootstrap", {"scheme", "B", "policy"}},
    {"simulate", {"n", "replications", "bootstrap_B", "truth", "alpha", "covariates", "covariate_file"}},
};

std::vector<double> vec(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Json nullable(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vec_json(const VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(nullable(v(i)));
  return out;
}

std::vector<std::string> parameter_names(const ModelSpec& model) {
  auto names = model.mean.param_names();
  for (const auto& s : model.disp.param_names()) names.push_back(s);
  return names;
}

}  // namespace

std::vector<std::string> RunConfig::covariate_identifiers() const {
  std::vector<std::string> ids;
  for (const auto& b : covariates) ids.push_back(b.identifier);
  return ids;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& source) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [name, sub] : tree) {
    if (std::find(kSections.begin(), kSections.end(), name) == kSections.end()) {
      throw ConfigError("unknown config section [" + name + "]");
    }
    if (sub.empty() && !sub.data().empty()) {
      throw ConfigError("config key '" + name + "' appears outside a section");
    }
    const auto allowed = kKeys.find(name);
    if (allowed == kKeys.end()) continue;
    for (const auto& [key, value] : sub) {
      if (!allowed->second.contains(key)) throw ConfigError("unknown key [" + name + "] " + key);
    }
  }
  auto section = [&](const std::string& name) {
    auto child = tree.get_child_optional(pt::ptree::path_type(name, '\0'));
    return Section(child ? &*child : nullptr, name);
  };

  RunConfig c;
  c.source = source;
  const Section model = section("model");
  c.family = model.require("family");
  if (auto v = model.get("mean_link")) c.mean_link = *v;
  if (auto v = model.get("dispersion_link")) c.dispersion_link = *v;

  const Section mean = section("mean");
  c.mean_formula = mean.require("formula");
  c.mean_params = name_list(mean.require("parameters"));
  if (auto v = mean.get("start")) c.mean_start = number_list(*v, mean.field("start"));

  const Section disp = section("dispersion");
  if (disp.tree()) {
    c.dispersion_formula = disp.require("formula");
    c.dispersion_params = name_list(disp.require("parameters"));
    if (auto v = disp.get("start")) c.dispersion_start = number_list(*v, disp.field("start"));
  }

  const Section cols = section("columns");
  if (cols.tree()) {
    for (const auto& [key, value] : *cols.tree()) {
      const std::string v = trim(value.data());
      if (v.empty()) throw ConfigError("empty column binding " + cols.field(key));
      if (key == "response") {
        c.response = v;
      } else {
        c.covariates.push_back({key, v});
      }
    }
  }

  const Section data = section("data");
  if (auto v = data.get("path")) c.data = *v;

  const Section opt = section("options");
  if (auto v = opt.get("alpha")) c.alphas = number_list(*v, opt.field("alpha"));
  if (auto v = opt.get("seed")) c.seed = to_integer<std::uint64_t>(*v, opt.field("seed"));
  if (auto v = opt.get("threads")) c.threads = to_integer<unsigned>(*v, opt.field("threads"));
  if (auto v = opt.get("max_iterations")) {
    c.fit_options.max_iterations = to_integer<int>(*v, opt.field("max_iterations"));
  }
  if (auto v = opt.get("score_tol")) c.fit_options.score_tol = number_field(*v, opt.field("score_tol"));
  if (auto v = opt.get("step_tol")) c.fit_options.step_tol = number_field(*v, opt.field("step_tol"));
  if (auto v = opt.get("scheme")) {
    if (*v == "joint") {
      c.fit_options.scheme = UpdateScheme::joint;
    } else if (*v == "alternating") {
      c.fit_options.scheme = UpdateScheme::alternating;
    } else {
      throw ConfigError(opt.field("scheme") + ": expected joint or alternating, got '" + *v + "'");
    }
  }
  if (auto v = opt.get("step")) {
    if (*v == "fisher") {
      c.fit_options.step_rule = StepRule::fisher;
    } else if (*v == "newton") {
      c.fit_options.step_rule = StepRule::newton_when_pd;
    } else {
      throw ConfigError(opt.field("step") + ": expected fisher or newton, got '" + *v + "'");
    }
  }

  const Section boot = section("bootstrap");
  if (auto v = boot.get("scheme")) {
    try {
      c.boot_scheme = boot_scheme_from_name(*v);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(boot.field("scheme") + ": " + e.what());
    }
  }
  if (auto v = boot.get("B")) c.boot_B = to_integer<int>(*v, boot.field("B"));
  if (auto v = boot.get("policy")) {
    if (*v == "skip") {
      c.boot_policy = RefitPolicy::skip_nonconverged;
    } else if (*v == "error") {
      c.boot_policy = RefitPolicy::error;
    } else {
      throw ConfigError(boot.field("policy") + ": expected skip or error, got '" + *v + "'");
    }
  }

  const Section sim = section("simulate");
  if (auto v = sim.get("n")) c.sim_n = to_integer<int>(*v, sim.field("n"));
  if (auto v = sim.get("replications")) {
    c.sim_replications = to_integer<int>(*v, sim.field("replications"));
  }
  if (auto v = sim.get("bootstrap_B")) c.sim_bootstrap_B = to_integer<int>(*v, sim.field("bootstrap_B"));
  if (auto v = sim.get("truth")) c.sim_truth = number_list(*v, sim.field("truth"));
  if (auto v = sim.get("alpha")) c.sim_alphas = number_list(*v, sim.field("alpha"));
  if (auto v = sim.get("covariates")) {
    if (*v == "uniform01") {
      c.sim_covariates = CovariateLaw::uniform01;
    } else if (*v == "file") {
      c.sim_covariates = CovariateLaw::file;
      c.sim_covariate_file = sim.require("covariate_file");
    } else {
      throw ConfigError(sim.field("covariates") + ": expected uniform01 or file, got '" + *v + "'");
    }
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

ModelSpec build_model(const RunConfig& c) {
  ModelSpec m;
  const auto ids = c.covariate_identifiers();
  try {
    m.family = make_family(c.family);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[model] family: ") + e.what());
  }
  try {
    m.mean_link = Link::from_name(c.mean_link);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[model] mean_link: ") + e.what());
  }
  try {
    m.disp_link = Link::from_name(c.dispersion_link);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[model] dispersion_link: ") + e.what());
  }
  try {
    m.mean = parse_predictor(c.mean_formula, c.mean_params, ids);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[mean] formula: ") + e.what());
  }
  if (!c.dispersion_formula.empty()) {
    try {
      m.disp = parse_predictor(c.dispersion_formula, c.dispersion_params, ids);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("[dispersion] formula: ") + e.what());
    }
  }
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return m;
}

std::optional<StartValues> start_values(const RunConfig& c) {
  if (!c.mean_start && !c.dispersion_start) return std::nullopt;
  if (!c.mean_start || (!c.dispersion_params.empty() && !c.dispersion_start)) {
    throw ConfigError("start values must be given for both the mean and dispersion parameters");
  }
  if (c.mean_start->size() != c.mean_params.size()) {
    throw ConfigError("[mean] start: expected " + std::to_string(c.mean_params.size()) + " values");
  }
  StartValues s;
  s.beta = Eigen::Map<const VectorXd>(c.mean_start->data(), static_cast<Eigen::Index>(c.mean_start->size()));
  s.theta = VectorXd(0);
  if (c.dispersion_start) {
    if (c.dispersion_start->size() != c.dispersion_params.size()) {
      throw ConfigError("[dispersion] start: expected " +
                        std::to_string(c.dispersion_params.size()) + " values");
    }
    s.theta = Eigen::Map<const VectorXd>(c.dispersion_start->data(),
                                         static_cast<Eigen::Index>(c.dispersion_start->size()));
  }
  return s;
}

const std::vector<double>& CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError("data has no column '" + name + "'");
  return columns[static_cast<std::size_t>(it - header.begin())];
}

CsvTable parse_csv(const std::string& text, const std::string& origin) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = split(line, ',');
    if (t.header.empty()) {
      for (const auto& h : cells) {
        if (h.empty()) throw DataError(origin + ": empty column name in the header");
        if (std::count(cells.begin(), cells.end(), h) > 1) {
          throw DataError(origin + ": duplicate column '" + h + "'");
        }
      }
      t.header = std::move(cells);
      t.columns.resize(t.header.size());
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw DataError(origin + " line " + std::to_string(lineno) + ": expected " +
                      std::to_string(t.header.size()) + " fields, found " +
                      std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const auto v = to_double(cells[j]);
      if (!v) {
        throw DataError(origin + " line " + std::to_string(lineno) + ", column '" + t.header[j] +
                        "': " + (cells[j].empty() ? std::string("empty value") : "'" + cells[j] + "' is not a number"));
      }
      t.columns[j].push_back(*v);
    }
  }
  if (t.header.empty()) throw DataError(origin + ": no header row");
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read data file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path.string());
}

Dataset bind_dataset(const CsvTable& table, const RunConfig& c) {
  if (c.response.empty()) throw ConfigError("[columns] response is not bound");
  Dataset d;
  const auto& y = table.column(c.response);
  const auto n = static_cast<Eigen::Index>(table.rows());
  d.y = Eigen::Map<const VectorXd>(y.data(), n);
  d.x.resize(n, static_cast<Eigen::Index>(c.covariates.size()));
  for (std::size_t j = 0; j < c.covariates.size(); ++j) {
    const auto& col = table.column(c.covariates[j].column);
    d.x.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const VectorXd>(col.data(), n);
    d.names.push_back(c.covariates[j].identifier);
  }
  return d;
}

StudyConfig study_config(const RunConfig& c) {
  StudyConfig s;
  s.model = build_model(c);
  if (c.sim_truth.size() != s.model.p() + s.model.q()) {
    throw ConfigError("[simulate] truth: expected " + std::to_string(s.model.p() + s.model.q()) +
                      " values, got " + std::to_string(c.sim_truth.size()));
  }
  s.truth = Eigen::Map<const VectorXd>(c.sim_truth.data(), static_cast<Eigen::Index>(c.sim_truth.size()));
  s.n = c.sim_n;
  s.replications = c.sim_replications;
  s.bootstrap_B = c.sim_bootstrap_B;
  s.covariate_law = c.sim_covariates;
  s.covariate_names = c.covariate_identifiers();
  if (c.sim_covariates == CovariateLaw::file) {
    std::filesystem::path p = c.sim_covariate_file;
    if (p.is_relative() && !c.source.empty()) p = c.source.parent_path() / p;
    const CsvTable t = read_csv(p);
    s.covariates.resize(static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(c.covariates.size()));
    for (std::size_t j = 0; j < c.covariates.size(); ++j) {
      const auto& col = t.column(c.covariates[j].column);
      for (std::size_t i = 0; i < col.size(); ++i) {
        s.covariates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
      }
    }
  }
  s.seed = c.seed;
  s.alphas = c.sim_alphas;
  s.threads = c.threads;
  s.fit_options = c.fit_options;
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[simulate] ") + e.what());
  } catch (const UnsupportedError& e) {
    throw ConfigError(std::string("[simulate] ") + e.what());
  }
  return s;
}

Json report_header(const std::string& command, const ModelSpec& model,
                   const std::vector<std::string>& covariate_names) {
  Json j;
  j["schema"] = kReportSchema;
  j["command"] = command;
  j["model"] = {{"family", model.family->name()},
                {"mean_link", model.mean_link.name()},
                {"dispersion_link", model.disp_link.name()},
                {"mean", model.mean.to_string(covariate_names)},
                {"dispersion", model.q() ? model.disp.to_string(covariate_names) : std::string()},
                {"parameters", parameter_names(model)}};
  return j;
}

Json fit_json(const ModelSpec& model, const FitResult& fit, double alpha) {
  const auto names = parameter_names(model);
  const VectorXd est = fit.zeta();
  VectorXd var(est.size());
  var << fit.K_beta_inv.diagonal(), fit.K_theta_inv.diagonal();
  const auto ci = wald_intervals(est, var, alpha);
  Json params = Json::array();
  for (std::size_t k = 0; k < names.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    params.push_back({{"name", names[k]},
                      {"block", k < model.p() ? "mean" : "dispersion"},
                      {"estimate", nullable(est(i))},
                      {"std_error", nullable(std::sqrt(std::max(0.0, var(i))))},
                      {"lower", nullable(ci[k].lower)},
                      {"upper", nullable(ci[k].upper)}});
  }
  return {{"converged", fit.converged},
          {"status", to_string(fit.status)},
          {"iterations", fit.iterations},
          {"loglik", nullable(fit.loglik)},
          {"score_norm", nullable(fit.score_norm)},
          {"alpha", alpha},
          {"warnings", fit.warnings},
          {"parameters", params}};
}

Json bias_json(const BiasReport& r) {
  return {{"beta",
           {{"B", vec_json(r.beta.B)},
            {"B1", vec_json(r.beta.B1)},
            {"B2", vec_json(r.beta.B2)},
            {"B_regression", vec_json(r.beta.B_regression)},
            {"discrepancy", nullable(r.beta.discrepancy)}}},
          {"theta",
           {{"B", vec_json(r.theta.B)},
            {"Q1", vec_json(r.theta.Q1)},
            {"Q2", vec_json(r.theta.Q2)},
            {"B_regression", vec_json(r.theta.B_regression)},
            {"discrepancy", nullable(r.theta.discrepancy)}}},
          {"corrected", {{"beta", vec_json(r.corrected.beta)}, {"theta", vec_json(r.corrected.theta)}}},
          {"mu", {{"fitted", vec_json(r.mu_hat)}, {"bias", vec_json(r.mu_phi.B_mu)}, {"corrected", vec_json(r.mu_phi.mu_tilde)}}},
          {"phi", {{"fitted", vec_json(r.phi_hat)}, {"bias", vec_json(r.mu_phi.B_phi)}, {"corrected", vec_json(r.mu_phi.phi_tilde)}}}};
}

Json bootstrap_json(const BootstrapPlan& plan, const BootstrapResult& res, const MuPhiBias& mp) {
  return {{"scheme", to_string(plan.scheme)},
          {"B", plan.B},
          {"seed", plan.seed},
          {"policy", plan.policy == RefitPolicy::error ? "error" : "skip"},
          {"replicates_used", res.replicates_used},
          {"nonconverged", res.nonconverged},
          {"zeta_hat", vec_json(res.zeta_hat)},
          {"zeta_star_mean", vec_json(res.zeta_star_mean)},
          {"bias_hat", vec_json(res.bias_hat)},
          {"zeta_bar", vec_json(res.zeta_bar)},
          {"mu", {{"bias", vec_json(mp.B_mu)}, {"corrected", vec_json(mp.mu_tilde)}}},
          {"phi", {{"bias", vec_json(mp.B_phi)}, {"corrected", vec_json(mp.phi_tilde)}}}};
}

Json study_json(const StudyReport& r) {
  Json rows = Json::array();
  for (const StudyRow& row : r.rows) {
    Json cov = Json::array();
    for (double c : row.coverage) cov.push_back(nullable(c));
    rows.push_back({{"estimator", to_string(row.estimator)},
                    {"parameter", row.parameter},
                    {"truth", row.truth},
                    {"used", row.used},
                    {"mean", nullable(row.mean)},
                    {"bias", nullable(row.bias)},
                    {"variance", nullable(row.variance)},
                    {"mse", nullable(row.mse)},
                    {"coverage", cov}});
  }
  Json x = Json::array();
  for (Eigen::Index i = 0; i < r.covariates.rows(); ++i) x.push_back(vec(r.covariates.row(i).transpose()));
  return {{"n", r.n},
          {"replications", r.replications},
          {"bootstrap_B", r.bootstrap_B},
          {"seed", r.seed},
          {"alphas", r.alphas},
          {"parameters", r.parameters},
          {"truth", vec(r.truth)},
          {"covariates", {{"names", r.covariate_names}, {"values", x}}},
          {"counts",
           {{"mle_nonconverged", r.mle_nonconverged},
            {"cox_snell_failed", r.cox_snell_failed},
            {"pboot_failed", r.pboot_failed},
            {"npboot_failed", r.npboot_failed},
            {"boot_refits_nonconverged", r.boot_refits_nonconverged},
            {"interval_fallbacks", r.interval_fallbacks}}},
          {"rows", rows}};
}

std::string dump_report(const Json& report) { return report.dump(2) + "\n"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

void write_report(const std::filesystem::path& path, const Json& report) {
  write_text(path, dump_report(report));
}

Json parse_report(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw DataError(std::string("report is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("schema") || j["schema"] != kReportSchema) {
    throw DataError(std::string("report schema is not ") + kReportSchema);
  }
  return j;
}

Json read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read report '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_report(buf.str());
}

}  // namespace dispbias
