#include "dispbias/simulate.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "dispbias/bias.hpp"
#include "dispbias/errors.hpp"
#include "dispbias/specialfns.hpp"

namespace dispbias {
namespace {

constexpr std::uint64_t kCovariateTag = 0x636f76ULL;
constexpr std::uint64_t kResponseTag = 0x726573ULL;
constexpr std::uint64_t kBootTag = 0x62747370ULL;
constexpr std::size_t kNumEstimators = std::size(kEstimators);

struct Outcome {
  bool mle_ok = false;
  std::array<std::optional<VectorXd>, kNumEstimators> estimate;
  // covered[e][a * P + j]
  std::array<std::vector<char>, kNumEstimators> covered;
  long long boot_nonconverged = 0;
  int interval_fallbacks = 0;
};

std::string number(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::mle: return "mle";
    case Estimator::cox_snell: return "cox-snell";
    case Estimator::parametric_boot: return "p-boot";
    case Estimator::nonparametric_boot: return "np-boot";
  }
  return "?";
}

void StudyConfig::validate() const {
  model.validate();
  if (!model.family->samplable()) {
    throw UnsupportedError("family '" + model.family->name() + "' cannot be sampled");
  }
  if (static_cast<std::size_t>(truth.size()) != model.p() + model.q()) {
    throw std::invalid_argument("true parameter vector has " + std::to_string(truth.size()) +
                                " entries, the model has " +
                                std::to_string(model.p() + model.q()));
  }
  if (replications < 1) throw std::invalid_argument("replications must be at least 1");
  if (bootstrap_B < 0) throw std::invalid_argument("bootstrap_B must be nonnegative");
  if (static_cast<std::size_t>(n) < model.p() + model.q()) {
    throw std::invalid_argument("n = " + std::to_string(n) + " is below the " +
                                std::to_string(model.p() + model.q()) + " model parameters");
  }
  for (double a : alphas) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  }
  if (covariate_law == CovariateLaw::file) {
    if (covariates.rows() != n) {
      throw std::invalid_argument("covariate table has " + std::to_string(covariates.rows()) +
                                  " rows, n is " + std::to_string(n));
    }
    if (static_cast<std::size_t>(covariates.cols()) != covariate_names.size()) {
      throw std::invalid_argument("covariate names do not match the covariate table");
    }
  }
}

const StudyRow& StudyReport::row(Estimator e, std::size_t param) const {
  return rows.at(static_cast<std::size_t>(e) * parameters.size() + param);
}

Dataset study_design(const StudyConfig& config) {
  Dataset d;
  d.names = config.covariate_names;
  if (config.covariate_law == CovariateLaw::file) {
    d.x = config.covariates;
  } else {
    Rng rng = make_stream(config.seed, 0, kCovariateTag);
    d.x.resize(config.n, static_cast<Eigen::Index>(d.names.size()));
    for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
      for (Eigen::Index j = 0; j < d.x.cols(); ++j) d.x(i, j) = uniform_open(rng);
    }
  }
  d.y = VectorXd::Zero(config.n);
  return d;
}

StudyReport run_study(const StudyConfig& config) {
  config.validate();
  const ModelSpec& model = config.model;
  const auto p = static_cast<Eigen::Index>(model.p());
  const auto q = static_cast<Eigen::Index>(model.q());
  const Eigen::Index P = p + q;
  const VectorXd beta0 = config.truth.head(p);
  const VectorXd theta0 = config.truth.tail(q);

  const Dataset design = study_design(config);
  const DesignState truth_state = design_build(model, design, beta0, theta0, {false, true});

  std::vector<double> z;
  for (double a : config.alphas) z.push_back(special::normal_quantile(1.0 - a / 2.0));
  const std::size_t A = config.alphas.size();

  FitOptions fo = config.fit_options;
  fo.keep_trace = false;

  std::vector<Outcome> outcomes(static_cast<std::size_t>(config.replications));
  parallel_for(outcomes.size(), resolve_threads(config.threads), [&](std::size_t r) {
    Outcome& out = outcomes[r];
    Dataset data = design;
    Rng rng = make_stream(config.seed, r, kResponseTag);
    for (Eigen::Index i = 0; i < data.y.size(); ++i) {
      data.y(i) = model.family->sample(truth_state.mu(i), truth_state.phi(i), rng);
    }
    FitResult fit;
    try {
      fit = fit_mle(model, data, fo);
    } catch (const std::runtime_error&) {
      return;
    } catch (const std::domain_error&) {
      return;
    }
    if (!fit.converged) return;
    out.mle_ok = true;
    const VectorXd zeta_hat = fit.zeta();
    out.estimate[0] = zeta_hat;

    try {
      const BiasMatrices m = bias_matrices(model, data, fit);
      VectorXd b(P);
      b << bias_beta(m).B, bias_theta(m).B;
      if (b.allFinite()) out.estimate[1] = zeta_hat - b;
    } catch (const std::runtime_error&) {
    } catch (const std::domain_error&) {
    }

    for (int s = 0; s < 2; ++s) {
      const std::size_t slot = 2 + static_cast<std::size_t>(s);
      if (config.bootstrap_B == 0) {
        out.estimate[slot] = zeta_hat;
        continue;
      }
      BootstrapPlan plan;
      plan.scheme = s == 0 ? BootScheme::parametric : BootScheme::nonparametric;
      plan.B = config.bootstrap_B;
      plan.seed = derive_seed(config.seed, r, kBootTag);
      plan.threads = 1;
      plan.fit_options = fo;
      const auto reps = bootstrap_replicates(model, data, fit, plan, 0,
                                             static_cast<std::size_t>(plan.B));
      try {
        const BootstrapResult br = bootstrap_aggregate(fit, reps, RefitPolicy::skip_nonconverged);
        out.boot_nonconverged += br.nonconverged;
        out.estimate[slot] = br.zeta_bar;
      } catch (const ConvergenceError&) {
        out.boot_nonconverged += plan.B;
      }
    }

    // Wald intervals with the information evaluated at each estimator's own point.
    for (std::size_t e = 0; e < kNumEstimators; ++e) {
      if (!out.estimate[e]) continue;
      const VectorXd& est = *out.estimate[e];
      VectorXd var(P);
      bool own = e != 0;
      if (own) {
        try {
          const Information info = information(model, data, est.head(p), est.tail(q));
          var << inverse_spd(info.K_beta).diagonal(), inverse_spd(info.K_theta).diagonal();
          own = var.allFinite() && (var.array() >= 0.0).all();
        } catch (const std::runtime_error&) {
          own = false;
        } catch (const std::domain_error&) {
          own = false;
        }
        if (!own) ++out.interval_fallbacks;
      }
      if (!own) var << fit.K_beta_inv.diagonal(), fit.K_theta_inv.diagonal();
      out.covered[e].assign(A * static_cast<std::size_t>(P), 0);
      for (std::size_t a = 0; a < A; ++a) {
        for (Eigen::Index j = 0; j < P; ++j) {
          const double half = z[a] * std::sqrt(var(j));
          out.covered[e][a * P + j] = std::abs(est(j) - config.truth(j)) <= half ? 1 : 0;
        }
      }
    }
  });

  StudyReport rep;
  rep.parameters = model.mean.param_names();
  for (const auto& s : model.disp.param_names()) rep.parameters.push_back(s);
  rep.truth = config.truth;
  rep.alphas = config.alphas;
  rep.n = config.n;
  rep.replications = config.replications;
  rep.bootstrap_B = config.bootstrap_B;
  rep.seed = config.seed;
  rep.covariates = design.x;
  rep.covariate_names = design.names;

  for (const Outcome& o : outcomes) {
    if (!o.mle_ok) {
      ++rep.mle_nonconverged;
      continue;
    }
    if (!o.estimate[1]) ++rep.cox_snell_failed;
    if (!o.estimate[2]) ++rep.pboot_failed;
    if (!o.estimate[3]) ++rep.npboot_failed;
    rep.boot_refits_nonconverged += o.boot_nonconverged;
    rep.interval_fallbacks += o.interval_fallbacks;
  }

  for (std::size_t e = 0; e < kNumEstimators; ++e) {
    for (Eigen::Index j = 0; j < P; ++j) {
      StudyRow row;
      row.estimator = kEstimators[e];
      row.parameter = rep.parameters[static_cast<std::size_t>(j)];
      row.truth = config.truth(j);
      double sum = 0.0;
      std::vector<double> hits(A, 0.0);
      for (const Outcome& o : outcomes) {
        if (!o.estimate[e]) continue;
        ++row.used;
        sum += (*o.estimate[e])(j);
        for (std::size_t a = 0; a < A; ++a) hits[a] += o.covered[e][a * P + j];
      }
      const double m = row.used ? static_cast<double>(row.used) : std::nan("");
      row.mean = sum / m;
      double ss = 0.0;
      double se = 0.0;
      for (const Outcome& o : outcomes) {
        if (!o.estimate[e]) continue;
        const double v = (*o.estimate[e])(j);
        ss += (v - row.mean) * (v - row.mean);
        se += (v - row.truth) * (v - row.truth);
      }
      row.bias = row.mean - row.truth;
      row.variance = ss / m;
      row.mse = se / m;
      for (double h : hits) row.coverage.push_back(h / m);
      rep.rows.push_back(std::move(row));
    }
  }
  return rep;
}

std::string study_table_csv(const StudyReport& report) {
  std::string out = "estimator,parameter,truth,used,mean,bias,variance,mse";
  for (double a : report.alphas) out += ",coverage_" + number(1.0 - a);
  out += '\n';
  for (const StudyRow& r : report.rows) {
    out += to_string(r.estimator) + ',' + r.parameter + ',' + number(r.truth) + ',' +
           std::to_string(r.used) + ',' + number(r.mean) + ',' + number(r.bias) + ',' +
           number(r.variance) + ',' + number(r.mse);
    for (double c : r.coverage) out += ',' + number(c);
    out += '\n';
  }
  return out;
}

}  // namespace dispbias
