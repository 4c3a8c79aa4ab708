// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "dispbias/bias.hpp"
#include "dispbias/bootstrap.hpp"
#include "dispbias/fit.hpp"
#include "dispbias/io.hpp"
#include "dispbias/simulate.hpp"
#include "dispbias/specialfns.hpp"
#include "glm_reference.hpp"
#include "support.hpp"

using namespace dispbias;
using testing::vec;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "  failed: " << what << "\n";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// 1. analytic score against central differences of the log-likelihood
void score_correctness(Verdict& v) {
  const auto t0 = Clock::now();
  int configurations = 0;
  double worst = 0.0;
  for (const auto& c : testing::score_cases()) {
    const Dataset d = testing::simulated(c.model, c.beta, c.theta, 30, 21);
    const auto p = c.beta.size();
    VectorXd z(p + c.theta.size());
    z << c.beta, c.theta;
    auto ll = [&](const VectorXd& w) { return loglik(c.model, d, w.head(p), w.tail(c.theta.size())); };
    const VectorXd u = score(c.model, d, c.beta, c.theta);
    double rel = 0.0;
    for (Eigen::Index k = 0; k < z.size(); ++k) {
      const double fd = testing::central_difference(ll, z, k, 1e-4);
      rel = std::max(rel, std::abs(u(k) - fd) / std::max(1.0, std::abs(fd)));
    }
    v.require(rel <= 1e-6, c.label + " relative error " + fmt(rel));
    worst = std::max(worst, rel);
    ++configurations;
  }
  const double secs = seconds_since(t0);
  v.require(configurations >= 20, "only " + std::to_string(configurations) + " configurations");
  v.require(secs < 60.0, "runtime " + fmt(secs) + " s");
  v.detail << "  " << configurations << " configurations, worst relative error " << fmt(worst) << "\n";
}

// 2. Monte Carlo covariance of the score against block-diag(K_beta, K_theta)
void information_identity(Verdict& v) {
  const auto t0 = Clock::now();
  const ModelSpec m = testing::gamma_log_model();
  const VectorXd beta = testing::gamma_log_beta();
  const VectorXd theta = testing::gamma_log_theta();
  Dataset d = testing::uniform_design(30, 2);
  const int draws = 20000;
  std::vector<VectorXd> u(draws);
  for (int r = 0; r < draws; ++r) {
    Rng rng = make_stream(202, static_cast<std::uint64_t>(r), 1);
    testing::simulate_response(m, d, beta, theta, rng);
    u[static_cast<std::size_t>(r)] = score(m, d, beta, theta);
  }
  const Information info = information(m, d, beta, theta);
  MatrixXd K = MatrixXd::Zero(4, 4);
  K.topLeftCorner(2, 2) = info.K_beta;
  K.bottomRightCorner(2, 2) = info.K_theta;

  VectorXd mean = VectorXd::Zero(4);
  for (const VectorXd& s : u) mean += s;
  mean /= draws;
  double worst = 0.0;
  for (int k = 0; k < 4; ++k) {
    for (int l = k; l < 4; ++l) {
      double s1 = 0.0, s2 = 0.0;
      for (const VectorXd& s : u) {
        const double prod = (s(k) - mean(k)) * (s(l) - mean(l));
        s1 += prod;
        s2 += prod * prod;
      }
      const double cov = s1 / draws;
      const double se = std::sqrt((s2 / draws - cov * cov) / draws);
      const double z = (cov - K(k, l)) / se;
      worst = std::max(worst, std::abs(z));
      v.require(std::abs(z) <= 4.0, "entry (" + std::to_string(k) + "," + std::to_string(l) + ") cov " +
                                        fmt(cov) + " vs " + fmt(K(k, l)) + ", " + fmt(z) + " SE");
    }
  }
  const double secs = seconds_since(t0);
  v.require(secs < 120.0, "runtime " + fmt(secs) + " s");
  v.detail << "  20000 draws, largest deviation " << fmt(worst) << " SE\n";
}

// 3. direct matrix biases against the weighted least-squares route
void regression_equivalence(Verdict& v) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  int models = 0;
  for (const auto& r : testing::random_bias_models(100, 2024)) {
    const BiasMatrices bm = bias_matrices(r.model, r.data, r.beta, r.theta);
    const BetaBias bb = bias_beta(bm);
    double gap = (bb.B - bb.B_regression).cwiseAbs().maxCoeff();
    if (r.theta.size() > 0) {
      const ThetaBias bt = bias_theta(bm);
      gap = std::max(gap, (bt.B - bt.B_regression).cwiseAbs().maxCoeff());
    }
    v.require(gap <= 1e-10, r.label + " gap " + fmt(gap));
    worst = std::max(worst, gap);
    ++models;
  }
  const double secs = seconds_since(t0);
  v.require(models == 100, "ran " + std::to_string(models) + " models");
  v.require(secs < 60.0, "runtime " + fmt(secs) + " s");
  v.detail << "  " << models << " models, largest absolute gap " << fmt(worst) << "\n";
}

// 4. M1 under constant dispersion against the GLM special case coded by hand
void glm_reduction(Verdict& v) {
  double worst = 0.0;
  int configurations = 0;
  for (const testing::GlmCase& c : testing::glm_cases()) {
    for (const auto& [link, mu0] : c.links) {
      const ModelSpec m = testing::linear_model(c.family, link, 3, 1);
      const double eta0 = link.apply(mu0);
      const double span = std::abs(eta0) > 0.2 ? 0.1 * std::abs(eta0) : 0.05;
      const VectorXd beta = vec({eta0 - span, span, span});
      const VectorXd theta = c.family->fixed_phi() ? VectorXd(0) : vec({0.7});
      const Dataset d = testing::uniform_design(30, 5);
      const BiasMatrices bm = bias_matrices(m, d, beta, theta);
      double rel = 0.0;
      for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
        const double eta = beta(0) + beta(1) * d.x(i, 0) + beta(2) * d.x(i, 1);
        const testing::LinkDerivatives ld = testing::link_by_hand(link.name(), eta);
        const double want = -0.5 / c.variance(ld.mu) * ld.d1 * ld.d2;
        rel = std::max(rel, std::abs(bm.M1(i) - want) / std::max(1.0, std::abs(want)));
      }
      v.require(rel <= 1e-12, c.family->name() + "/" + link.name() + " error " + fmt(rel));
      worst = std::max(worst, rel);
      ++configurations;
    }
  }
  v.detail << "  " << configurations << " family/link pairs, worst error " << fmt(worst) << "\n";
}

// 5. empirical bias of the MLE against the analytic bias at the truth
void analytic_vs_empirical(Verdict& v) {
  const auto t0 = Clock::now();
  const ModelSpec m = testing::gamma_log_model();
  const VectorXd beta = testing::gamma_log_beta();
  const VectorXd theta = testing::gamma_log_theta();
  const Dataset design = testing::uniform_design(40, 9);
  const int reps = 10000;
  std::vector<std::optional<VectorXd>> est(reps);
  parallel_for(est.size(), resolve_threads(0), [&](std::size_t r) {
    Dataset d = design;
    Rng rng = make_stream(505, r, 1);
    testing::simulate_response(m, d, beta, theta, rng);
    FitOptions fo;
    fo.keep_trace = false;
    const FitResult f = fit_mle(m, d, fo);
    if (f.converged) est[r] = f.zeta();
  });
  VectorXd truth(4);
  truth << beta, theta;
  VectorXd sum = VectorXd::Zero(4), sq = VectorXd::Zero(4);
  int used = 0;
  for (const auto& e : est) {
    if (!e) continue;
    const VectorXd dev = *e - truth;
    sum += dev;
    sq += dev.cwiseAbs2();
    ++used;
  }
  const VectorXd bias = sum / used;
  const VectorXd se = ((sq / used - bias.cwiseAbs2()) / (used - 1.0)).cwiseSqrt();
  const BiasMatrices bm = bias_matrices(m, design, beta, theta);
  VectorXd analytic(4);
  analytic << bias_beta(bm).B, bias_theta(bm).B;
  const char* names[] = {"b0", "b1", "t0", "t1"};
  for (int j = 0; j < 4; ++j) {
    const double z = (bias(j) - analytic(j)) / se(j);
    v.detail << "  " << names[j] << ": empirical " << fmt(bias(j)) << " +- " << fmt(se(j)) << ", analytic "
             << fmt(analytic(j)) << " (" << fmt(z) << " SE)\n";
    v.require(std::abs(z) <= 3.0, std::string(names[j]) + " off by " + fmt(z) + " SE");
  }
  const double secs = seconds_since(t0);
  v.require(used >= reps * 99 / 100, std::to_string(reps - used) + " fits did not converge");
  v.require(secs < 600.0, "runtime " + fmt(secs) + " s");
  v.detail << "  " << used << " of " << reps << " fits converged\n";
}

// 6 and 7 share one run of the reference study.
const StudyReport& reference_report(double* runtime) {
  static double secs = 0.0;
  static const StudyReport r = [] {
    const auto t0 = Clock::now();
    StudyConfig c = testing::reference_study(2000, 200);
    c.threads = resolve_threads(0);
    StudyReport out = run_study(c);
    secs = seconds_since(t0);
    return out;
  }();
  if (runtime) *runtime = secs;
  return r;
}

void print_study(const StudyReport& r, Verdict& v) {
  v.detail << "  counts: mle nonconverged " << r.mle_nonconverged << ", cox-snell failed " << r.cox_snell_failed
           << ", bootstrap refits skipped " << r.boot_refits_nonconverged << "\n";
  std::istringstream table(study_table_csv(r));
  for (std::string line; std::getline(table, line);) v.detail << "  | " << line << "\n";
}

void study_patterns(Verdict& v) {
  double secs = 0.0;
  const StudyReport& r = reference_report(&secs);
  int a = 0, b = 0, c = 0;
  for (std::size_t j = 0; j < 6; ++j) {
    const StudyRow& mle = r.row(Estimator::mle, j);
    const StudyRow& cs = r.row(Estimator::cox_snell, j);
    const StudyRow& pb = r.row(Estimator::parametric_boot, j);
    if (std::abs(cs.bias) < std::abs(mle.bias)) ++a;
    if (j >= 3) {
      const bool ok = cs.mse <= mle.mse;
      if (ok) ++b;
      v.require(ok, "(b) cox-snell MSE " + fmt(cs.mse) + " > MLE MSE " + fmt(mle.mse) + " for " + r.parameters[j]);
    }
    if (pb.variance <= mle.variance) ++c;
  }
  v.require(a >= 5, "(a) cox-snell |bias| below MLE |bias| for " + std::to_string(a) + " of 6");
  v.require(c >= 4, "(c) p-boot variance at most MLE variance for " + std::to_string(c) + " of 6");
  v.require(secs < 1800.0, "runtime " + fmt(secs) + " s");
  v.detail << "  (a) " << a << "/6, (b) " << b << "/3, (c) " << c << "/6, study runtime " << fmt(secs) << " s\n";
  print_study(r, v);
}

void coverage_patterns(Verdict& v) {
  const StudyReport& r = reference_report(nullptr);
  const auto level = std::find(r.alphas.begin(), r.alphas.end(), 0.10);
  if (level == r.alphas.end()) {
    v.require(false, "study has no 90% intervals");
    return;
  }
  const auto k = static_cast<std::size_t>(level - r.alphas.begin());
  int closer = 0, below = 0;
  for (std::size_t j = 0; j < 6; ++j) {
    const double mle = r.row(Estimator::mle, j).coverage[k];
    const double cs = r.row(Estimator::cox_snell, j).coverage[k];
    const double pb = r.row(Estimator::parametric_boot, j).coverage[k];
    v.detail << "  " << r.parameters[j] << ": mle " << fmt(mle) << ", cox-snell " << fmt(cs) << ", p-boot "
             << fmt(pb) << "\n";
    if (std::abs(cs - 0.90) < std::abs(mle - 0.90)) ++closer;
    if (pb < mle) ++below;
  }
  v.require(closer >= 4, "cox-snell closer to 0.90 for " + std::to_string(closer) + " of 6");
  v.require(below >= 4, "p-boot below MLE coverage for " + std::to_string(below) + " of 6");
  v.detail << "  cox-snell closer " << closer << "/6, p-boot below " << below << "/6\n";
}

// 8. normal responses with identity links carry no mean-side bias
void exact_zero_bias(Verdict& v) {
  const ModelSpec m = testing::linear_model(normal_family(), Link::identity(), 3, 2);
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Dataset d = testing::simulated(m, vec({1.0, -2.0, 0.5}), vec({0.3, 1.1}), 25, seed);
    const FitResult f = fit_mle(m, d);
    if (!f.converged) {
      v.require(false, "fit " + std::to_string(seed) + " did not converge");
      continue;
    }
    const BiasReport br = bias_report(m, d, f);
    const double gap = std::max(br.beta.B.cwiseAbs().maxCoeff(), br.mu_phi.B_mu.cwiseAbs().maxCoeff());
    worst = std::max(worst, gap);
  }
  v.require(worst <= 1e-15, "largest mean-side bias " + fmt(worst));
  v.detail << "  20 data sets, largest |B(beta)|, |B(mu)| " << fmt(worst) << "\n";
}

// 9. polygamma closed forms and the Bessel ratio derivatives
void special_functions(Verdict& v) {
  const double z3 = testing::oracles()["zeta3"].get<double>();
  const double e1 = std::abs(special::trigamma(1.0) - std::numbers::pi * std::numbers::pi / 6.0);
  const double e2 = std::abs(special::polygamma(2, 1.0) + 2.0 * z3);
  v.require(e1 <= 1e-12, "trigamma(1) error " + fmt(e1));
  v.require(e2 <= 1e-12, "polygamma(2, 1) error " + fmt(e2));
  double worst = 0.0;
  for (double phi = 0.01; phi < 100.0; phi *= 1.1) {
    const double h = 1e-5 * std::max(1.0, phi);
    const auto b = special::bessel_ratio(phi);
    const double r1 = (special::bessel_ratio(phi + h).r - special::bessel_ratio(phi - h).r) / (2 * h);
    const double r2 = (special::bessel_ratio(phi + h).r1 - special::bessel_ratio(phi - h).r1) / (2 * h);
    worst = std::max({worst, std::abs(b.r1 - r1), std::abs(b.r2 - r2)});
  }
  v.require(worst <= 1e-6, "finite-difference error " + fmt(worst));
  double oracle = 0.0;
  for (const auto& row : testing::oracles()["bessel_ratio"]) {
    const double phi = row["phi"];
    if (phi < 0.01 || phi > 100.0) continue;
    const auto b = special::bessel_ratio(phi);
    oracle = std::max({oracle, std::abs(b.r - row["r"].get<double>()), std::abs(b.r1 - row["r1"].get<double>()),
                       std::abs(b.r2 - row["r2"].get<double>())});
  }
  v.require(oracle <= 1e-6, "oracle error " + fmt(oracle));
  // small-phi series r = phi/2 - phi^3/16 + phi^5/96
  const double phi = 0.01;
  const auto b = special::bessel_ratio(phi);
  const double series = std::max({std::abs(b.r - (phi / 2 - std::pow(phi, 3) / 16 + std::pow(phi, 5) / 96)),
                                  std::abs(b.r1 - (0.5 - 3 * phi * phi / 16)), std::abs(b.r2 + 6 * phi / 16)});
  v.require(series <= 1e-6, "series error " + fmt(series));
  v.detail << "  psi' and psi'' errors " << fmt(e1) << ", " << fmt(e2) << "; ratio errors fd " << fmt(worst)
           << ", oracle " << fmt(oracle) << ", series " << fmt(series) << "\n";
}

// 10. reports are bit-identical across runs and thread counts
void reproducibility(Verdict& v) {
  const ModelSpec m = testing::gamma_log_model();
  const Dataset d = testing::simulated(m, testing::gamma_log_beta(), testing::gamma_log_theta(), 40, 44);
  const FitResult f = fit_mle(m, d);
  for (BootScheme scheme : {BootScheme::parametric, BootScheme::nonparametric}) {
    std::vector<std::string> texts;
    for (unsigned threads : {1u, 1u, 2u, 5u}) {
      BootstrapPlan plan;
      plan.scheme = scheme;
      plan.B = 100;
      plan.seed = 31;
      plan.threads = threads;
      const BootstrapResult br = bootstrap_bias(m, d, f, plan);
      const MuPhiBias mp = bias_mu_phi(bias_matrices(m, d, f),
                                       scheme == BootScheme::parametric ? BiasSource::parametric_bootstrap
                                                                        : BiasSource::nonparametric_bootstrap,
                                       br.bias_hat);
      plan.threads = 1;
      texts.push_back(dump_report(bootstrap_json(plan, br, mp)));
    }
    for (std::size_t k = 1; k < texts.size(); ++k) {
      v.require(texts[k] == texts[0], to_string(scheme) + " bootstrap report differs, run " + std::to_string(k));
    }
  }
  std::vector<std::string> studies;
  for (unsigned threads : {1u, 1u, 3u}) {
    StudyConfig c = testing::reference_study(24, 15);
    c.threads = threads;
    const StudyReport r = run_study(c);
    studies.push_back(dump_report(study_json(r)) + study_table_csv(r));
  }
  for (std::size_t k = 1; k < studies.size(); ++k) {
    v.require(studies[k] == studies[0], "study report differs, run " + std::to_string(k));
  }
  v.detail << "  bootstrap at 1, 1, 2, 5 threads; study at 1, 1, 3 threads\n";
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    std::function<void(Verdict&)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "score matches finite differences", score_correctness},
      {2, "score covariance equals the information", information_identity},
      {3, "matrix and regression bias forms agree", regression_equivalence},
      {4, "M1 reduces to the GLM form", glm_reduction},
      {5, "analytic bias matches the Monte Carlo bias", analytic_vs_empirical},
      {6, "reference study bias, MSE and variance patterns", study_patterns},
      {7, "reference study coverage pattern", coverage_patterns},
      {8, "normal identity model has zero mean-side bias", exact_zero_bias},
      {9, "special functions", special_functions},
      {10, "bit-identical reports at any thread count", reproducibility},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    Verdict v;
    const auto t0 = Clock::now();
    try {
      c.run(v);
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    std::printf("criterion %2d %s  %s (%.1f s)\n%s", c.id, v.pass ? "PASS" : "FAIL", c.title, seconds_since(t0),
                v.detail.str().c_str());
    std::fflush(stdout);
    if (!v.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
