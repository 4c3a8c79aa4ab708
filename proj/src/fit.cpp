#include "dispbias/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dispbias/errors.hpp"
#include "dispbias/specialfns.hpp"

namespace dispbias {

double loglik(const ModelSpec& model, const Dataset& data, const DesignState& design) {
  const Family& fam = *model.family;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < design.mu.size(); ++i) {
    try {
      ll += fam.log_density(data.y(i), design.mu(i), design.phi(i));
    } catch (const DomainError& e) {
      throw DomainError(e.what(), static_cast<std::size_t>(i));
    }
  }
  return ll;
}

double loglik(const ModelSpec& model, const Dataset& data, const VectorXd& beta,
              const VectorXd& theta) {
  return loglik(model, data, design_build(model, data, beta, theta));
}

VectorXd score(const ModelSpec& model, const Dataset& data, const DesignState& design) {
  const Family& fam = *model.family;
  const Eigen::Index n = design.mu.size();
  const Eigen::Index p = design.Xtilde.cols();
  const Eigen::Index q = design.Ztilde.cols();
  VectorXd wb(n);
  VectorXd wt(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    LoglikTerms lt;
    try {
      lt = fam.loglik_terms(data.y(i), design.mu(i), design.phi(i));
    } catch (const DomainError& e) {
      throw DomainError(e.what(), static_cast<std::size_t>(i));
    }
    wb(i) = design.phi(i) * design.dmu(i) * lt.tprime;
    wt(i) = design.dphi(i) * (lt.t + lt.aprime);
  }
  VectorXd u(p + q);
  u.head(p).noalias() = design.Xtilde.transpose() * wb;
  if (q > 0) u.tail(q).noalias() = design.Ztilde.transpose() * wt;
  return u;
}

VectorXd score(const ModelSpec& model, const Dataset& data, const VectorXd& beta,
               const VectorXd& theta) {
  return score(model, data, design_build(model, data, beta, theta));
}

Information information(const ModelSpec& model, const DesignState& design) {
  const Family& fam = *model.family;
  const Eigen::Index n = design.mu.size();
  const Eigen::Index q = design.Ztilde.cols();
  VectorXd wb(n);
  VectorXd wt(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const CumulantEval c = fam.cumulants(design.mu(i), design.phi(i));
    wb(i) = -design.phi(i) * c.d2 * design.dmu(i) * design.dmu(i);
    wt(i) = -c.alpha2 * design.dphi(i) * design.dphi(i);
  }
  Information info;
  info.K_beta.noalias() = design.Xtilde.transpose() * wb.asDiagonal() * design.Xtilde;
  if (q > 0) {
    info.K_theta.noalias() = design.Ztilde.transpose() * wt.asDiagonal() * design.Ztilde;
  } else {
    info.K_theta.resize(0, 0);
  }
  return info;
}

Information information(const ModelSpec& model, const Dataset& data, const VectorXd& beta,
                        const VectorXd& theta) {
  return information(model, design_build(model, data, beta, theta));
}

MatrixXd observed_information(const ModelSpec& model, const Dataset& data,
                              const DesignState& design) {
  const Family& fam = *model.family;
  const Eigen::Index n = design.mu.size();
  const Eigen::Index p = design.Xtilde.cols();
  const Eigen::Index q = design.Ztilde.cols();
  MatrixXd j = MatrixXd::Zero(p + q, p + q);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i);
    LoglikTerms lt;
    HigherDerivatives hd;
    try {
      lt = fam.loglik_terms(data.y(i), design.mu(i), design.phi(i));
      hd = fam.higher_derivatives(data.y(i), design.mu(i), design.phi(i));
    } catch (const DomainError& e) {
      throw DomainError(e.what(), row);
    }
    const double phi = design.phi(i);
    const double t1 = design.dmu(i);
    const double t2 = design.dphi(i);
    const auto x = design.Xtilde.row(i);
    j.topLeftCorner(p, p).noalias() -=
        phi * (hd.t2 * t1 * t1 + lt.tprime * design.d2mu(i)) * x.transpose() * x;
    if (!design.Xhess.empty()) j.topLeftCorner(p, p) -= phi * lt.tprime * t1 * design.Xhess[row];
    if (q > 0) {
      const auto z = design.Ztilde.row(i);
      const double v = lt.t + lt.aprime;
      j.topRightCorner(p, q).noalias() -= lt.tprime * t1 * t2 * x.transpose() * z;
      j.bottomRightCorner(q, q).noalias() -= (hd.a2 * t2 * t2 + v * design.d2phi(i)) * z.transpose() * z;
      if (!design.Zhess.empty()) j.bottomRightCorner(q, q) -= v * t2 * design.Zhess[row];
    }
  }
  if (q > 0) j.bottomLeftCorner(q, p) = j.topRightCorner(p, q).transpose();
  return j;
}

namespace {

void add_warning(std::vector<std::string>* warnings, const std::string& w) {
  if (warnings && std::find(warnings->begin(), warnings->end(), w) == warnings->end()) {
    warnings->push_back(w);
  }
}

MatrixXd clipped_pinv(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  const VectorXd& ev = es.eigenvalues();
  const double tol = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  VectorXd inv(ev.size());
  for (Eigen::Index k = 0; k < ev.size(); ++k) inv(k) = ev(k) > tol ? 1.0 / ev(k) : 0.0;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

// K⁻¹u, with the same fallback as inverse_spd.
VectorXd solve_spd(const MatrixXd& k, const VectorXd& u, std::vector<std::string>* warnings) {
  if (k.size() == 0) return VectorXd(0);
  Eigen::LLT<MatrixXd> llt(k);
  if (llt.info() == Eigen::Success) return llt.solve(u);
  add_warning(warnings, "information matrix not positive definite; used clipped pseudo-inverse");
  return clipped_pinv(k) * u;
}

struct Point {
  VectorXd beta;
  VectorXd theta;
  DesignState design;
  double ll;
};

std::optional<Point> evaluate(const ModelSpec& model, const Dataset& data, VectorXd beta,
                              VectorXd theta, bool hessians = false) {
  try {
    DesignOptions opt;
    opt.hessians = hessians;
    DesignState d = design_build(model, data, beta, theta, opt);
    const double ll = loglik(model, data, d);
    if (!std::isfinite(ll)) return std::nullopt;
    return Point{std::move(beta), std::move(theta), std::move(d), ll};
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

// Step-halving along (db, dt); replaces cur on success. Once the predicted
// gain uᵀd is below the rounding noise of ℓ, the full step is taken unless ℓ
// drops by more than that noise, since halving cannot resolve such changes.
bool line_search(const ModelSpec& model, const Dataset& data, Point& cur, const VectorXd& db,
                 const VectorXd& dt, double gain, int max_halvings, bool hessians = false) {
  const double noise = 1e-12 * (1.0 + std::abs(cur.ll));
  if (gain <= noise) {
    auto trial = evaluate(model, data, cur.beta + db, cur.theta + dt, hessians);
    if (trial && trial->ll >= cur.ll - noise) {
      cur = std::move(*trial);
      return true;
    }
  }
  double s = 1.0;
  for (int h = 0; h <= max_halvings; ++h, s *= 0.5) {
    auto trial = evaluate(model, data, cur.beta + s * db, cur.theta + s * dt, hessians);
    if (trial && trial->ll >= cur.ll) {
      cur = std::move(*trial);
      return true;
    }
  }
  return false;
}

double relative_change(const VectorXd& x, const VectorXd& dx) {
  double m = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) m = std::max(m, std::abs(dx(k)) / (std::abs(x(k)) + 1.0));
  return m;
}

void check_identifiable(const ModelSpec& model, const Dataset& data) {
  const std::size_t need = model.p() + model.q();
  if (data.n() < need) {
    throw DimensionError("n = " + std::to_string(data.n()) + " is smaller than p + q = " +
                         std::to_string(need) + "; the model is not identifiable");
  }
  if (static_cast<std::size_t>(data.x.rows()) != data.n()) {
    throw DimensionError("covariate rows do not match responses");
  }
}

// Moves v strictly inside (lo, hi).
double nudge_inside(double v, double lo, double hi) {
  constexpr double eps = 1.4901161193847656e-08;
  if (v <= lo) v = lo + eps * std::max(1.0, std::abs(lo));
  if (v >= hi) v = hi - eps * std::max(1.0, std::abs(hi));
  return v;
}

// Least squares of η₀ on the predictor with power exponents held at 1.
VectorXd linearized_start(const Predictor& pred, const MatrixXd& x, const VectorXd& eta0) {
  const auto n = eta0.size();
  const auto k = static_cast<Eigen::Index>(pred.param_count());
  VectorXd out = VectorXd::Zero(k);
  if (pred.is_custom()) return out;
  MatrixXd a = MatrixXd::Zero(n, k);
  VectorXd off = VectorXd::Zero(n);
  std::vector<bool> free(static_cast<std::size_t>(k), false);
  for (const Term& t : pred.terms()) {
    switch (t.kind) {
      case Term::Kind::intercept:
        a.col(t.param).array() += 1.0;
        free[static_cast<std::size_t>(t.param)] = true;
        break;
      case Term::Kind::linear:
        a.col(t.param) += x.col(t.covariate);
        free[static_cast<std::size_t>(t.param)] = true;
        break;
      case Term::Kind::power:
        out(t.param) = 1.0;
        off += x.col(t.covariate);
        break;
      case Term::Kind::offset: off += x.col(t.covariate); break;
    }
  }
  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (free[static_cast<std::size_t>(j)]) cols.push_back(j);
  }
  if (cols.empty()) return out;
  MatrixXd sub(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = a.col(cols[c]);
  const VectorXd coef = sub.colPivHouseholderQr().solve(eta0 - off);
  for (std::size_t c = 0; c < cols.size(); ++c) out(cols[c]) = coef(static_cast<Eigen::Index>(c));
  return out;
}

// Intercept-only fallback: every linear coefficient 0, exponents 1.
VectorXd intercept_start(const Predictor& pred, const MatrixXd& x, const VectorXd& eta0) {
  VectorXd out = VectorXd::Zero(static_cast<Eigen::Index>(pred.param_count()));
  if (pred.is_custom()) return out;
  VectorXd off = VectorXd::Zero(eta0.size());
  for (const Term& t : pred.terms()) {
    if (t.kind == Term::Kind::power) {
      out(t.param) = 1.0;
      off += x.col(t.covariate);
    } else if (t.kind == Term::Kind::offset) {
      off += x.col(t.covariate);
    }
  }
  const int ic = pred.intercept_param();
  if (ic >= 0) out(ic) = (eta0 - off).mean();
  return out;
}

// θ with linear coefficients 0, exponents 1 and the intercept scored to the
// constant-dispersion optimum given β.
std::optional<VectorXd> dispersion_start(const ModelSpec& model, const Dataset& data,
                                         const VectorXd& beta) {
  const Predictor& pred = model.disp;
  VectorXd theta = VectorXd::Zero(static_cast<Eigen::Index>(pred.param_count()));
  if (theta.size() == 0) return theta;
  if (!pred.is_custom()) {
    for (const Term& t : pred.terms()) {
      if (t.kind == Term::Kind::power) theta(t.param) = 1.0;
    }
  }
  const int ic = pred.intercept_param();
  if (ic < 0 || pred.is_custom()) {
    if (evaluate(model, data, beta, theta)) return theta;
    return std::nullopt;
  }
  // Centre the offsets so that φ starts at 1 on average on the link scale.
  {
    VectorXd grad(theta.size());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < data.x.rows(); ++i) sum += pred.eval(data.x, i, theta, grad, nullptr);
    theta(ic) = model.disp_link.apply(1.0) - sum / static_cast<double>(data.x.rows());
  }
  auto cur = evaluate(model, data, beta, theta);
  if (!cur) return std::nullopt;
  for (int it = 0; it < 100; ++it) {
    const VectorXd u = score(model, data, cur->design);
    const Information info = information(model, cur->design);
    const auto k = static_cast<Eigen::Index>(model.p()) + ic;
    const double kk = info.K_theta(ic, ic);
    if (!(kk > 0.0)) break;
    const double step = u(k) / kk;
    VectorXd dt = VectorXd::Zero(theta.size());
    dt(ic) = step;
    if (!line_search(model, data, *cur, VectorXd::Zero(beta.size()), dt, u(k) * step, 30)) break;
    if (std::abs(step) <= 1e-10 * (1.0 + std::abs(cur->theta(ic)))) break;
  }
  return cur->theta;
}

}  // namespace

MatrixXd inverse_spd(const MatrixXd& m, std::vector<std::string>* warnings) {
  if (m.size() == 0) return MatrixXd(0, 0);
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) {
    return llt.solve(MatrixXd::Identity(m.rows(), m.cols()));
  }
  add_warning(warnings, "information matrix not positive definite; used clipped pseudo-inverse");
  return clipped_pinv(m);
}

std::string to_string(FitStatus s) {
  switch (s) {
    case FitStatus::converged: return "converged";
    case FitStatus::max_iterations: return "max-iterations";
    case FitStatus::line_search_failed: return "line-search-failed";
    case FitStatus::singular_information: return "singular-information";
  }
  return "unknown";
}

VectorXd FitResult::zeta() const {
  VectorXd z(beta.size() + theta.size());
  z << beta, theta;
  return z;
}

namespace {

constexpr double kSingularInformation = 1e-10;

// Smallest eigenvalue after scaling to unit diagonal; 0 when a diagonal entry vanishes.
double scaled_min_eigenvalue(const MatrixXd& k) {
  if (k.rows() == 0) return 1.0;
  const double top = k.diagonal().maxCoeff();
  if (!(top > 0.0)) return 0.0;
  const VectorXd d = k.diagonal();
  if ((d.array() <= top * 1e-300).any() || !d.allFinite()) return 0.0;
  const VectorXd s = d.cwiseSqrt().cwiseInverse();
  const MatrixXd c = s.asDiagonal() * k * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(c, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace

StartValues default_start(const ModelSpec& model, const Dataset& data) {
  model.validate();
  check_identifiable(model, data);
  const OpenInterval fd = model.family->mu_domain();
  const OpenInterval ld = model.mean_link.mu_domain();
  const double lo = std::max(fd.lo, ld.lo);
  const double hi = std::min(fd.hi, ld.hi);
  const auto n = static_cast<Eigen::Index>(data.n());
  const double ybar = data.y.mean();
  bool boundary = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(data.y(i) > lo && data.y(i) < hi)) boundary = true;
  }
  VectorXd eta0(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = boundary ? 0.5 * (data.y(i) + ybar) : data.y(i);
    eta0(i) = model.mean_link.apply(nudge_inside(m, lo, hi));
  }
  for (auto make : {linearized_start, intercept_start}) {
    const VectorXd beta = make(model.mean, data.x, eta0);
    try {
      if (auto theta = dispersion_start(model, data, beta)) return {beta, *theta};
    } catch (const DomainError&) {
    }
  }
  throw DomainError("no valid starting point: the linearized start leaves the link domain");
}

FitResult fit_mle(const ModelSpec& model, const Dataset& data, const FitOptions& options,
                  const std::optional<StartValues>& init) {
  model.validate();
  check_identifiable(model, data);
  FitResult res;

  std::optional<Point> cur;
  if (init) cur = evaluate(model, data, init->beta, init->theta);
  if (!cur) {
    const StartValues s = default_start(model, data);
    cur = evaluate(model, data, s.beta, s.theta);
    if (!cur) {
      // Surface the underlying domain error with its row.
      const DesignState d = design_build(model, data, s.beta, s.theta);
      loglik(model, data, d);
      throw DomainError("log-likelihood is not finite at the starting point");
    }
  }
  {
    DesignOptions ro;
    ro.rank_check = true;
    design_build(model, data, cur->beta, cur->theta, ro);
  }
  if (options.keep_trace) res.trace.push_back(cur->ll);

  const auto p = static_cast<Eigen::Index>(model.p());
  const auto q = static_cast<Eigen::Index>(model.q());
  const bool newton = options.step_rule == StepRule::newton_when_pd;
  const bool hess = newton && !(model.mean.is_linear() && model.disp.is_linear());
  if (hess) cur = evaluate(model, data, cur->beta, cur->theta, true);

  // Newton direction on a block of the observed information when it is
  // positive definite, otherwise the scoring direction.
  auto direction = [&](const MatrixXd& jblock, const MatrixXd& kblock, const VectorXd& ublock) {
    if (newton && ublock.size() > 0) {
      Eigen::LLT<MatrixXd> llt(jblock);
      if (llt.info() == Eigen::Success) return VectorXd(llt.solve(ublock));
    }
    return solve_spd(kblock, ublock, &res.warnings);
  };

  VectorXd u;
  bool done = false;
  for (int iter = 0; iter < options.max_iterations && !done; ++iter) {
    u = score(model, data, cur->design);
    Information info = information(model, cur->design);
    VectorXd db;
    VectorXd dt;
    MatrixXd j;
    if (newton) j = observed_information(model, data, cur->design);
    bool joint_newton = false;
    if (newton && options.scheme == UpdateScheme::joint) {
      Eigen::LLT<MatrixXd> llt(j);
      if (llt.info() == Eigen::Success) {
        const VectorXd d = llt.solve(u);
        db = d.head(p);
        dt = d.tail(q);
        joint_newton = true;
      }
    }
    if (!joint_newton) {
      db = direction(newton ? MatrixXd(j.topLeftCorner(p, p)) : MatrixXd(), info.K_beta, u.head(p));
      dt = direction(newton ? MatrixXd(j.bottomRightCorner(q, q)) : MatrixXd(), info.K_theta,
                     u.tail(q));
    }
    const double unorm = u.size() ? u.lpNorm<Eigen::Infinity>() : 0.0;
    const double rel = std::max(relative_change(cur->beta, db), relative_change(cur->theta, dt));
    if (unorm <= options.score_tol && rel <= options.step_tol) {
      res.status = FitStatus::converged;
      done = true;
      break;
    }
    bool moved;
    if (options.scheme == UpdateScheme::joint || q == 0) {
      const double gain = u.head(p).dot(db) + u.tail(q).dot(dt);
      moved = line_search(model, data, *cur, db, dt, gain, options.max_halvings, hess);
    } else {
      const bool mb = line_search(model, data, *cur, db, VectorXd::Zero(q), u.head(p).dot(db),
                                  options.max_halvings, hess);
      const VectorXd u2 = score(model, data, cur->design);
      info = information(model, cur->design);
      if (newton) j = observed_information(model, data, cur->design);
      dt = direction(newton ? MatrixXd(j.bottomRightCorner(q, q)) : MatrixXd(), info.K_theta,
                     u2.tail(q));
      const bool mt = line_search(model, data, *cur, VectorXd::Zero(p), dt, u2.tail(q).dot(dt),
                                  options.max_halvings, hess);
      moved = mb || mt;
    }
    if (!moved) {
      res.status = unorm <= options.score_tol ? FitStatus::converged : FitStatus::line_search_failed;
      done = true;
      break;
    }
    ++res.iterations;
    if (options.keep_trace) res.trace.push_back(cur->ll);
  }
  if (!done) {
    res.status = FitStatus::max_iterations;
    u = score(model, data, cur->design);
  }
  const Information info = information(model, cur->design);
  if (scaled_min_eigenvalue(info.K_beta) < kSingularInformation ||
      scaled_min_eigenvalue(info.K_theta) < kSingularInformation) {
    res.status = FitStatus::singular_information;
  }
  res.converged = res.status == FitStatus::converged;
  res.score_norm = u.size() ? u.lpNorm<Eigen::Infinity>() : 0.0;
  res.beta = cur->beta;
  res.theta = cur->theta;
  res.loglik = cur->ll;
  res.K_beta_inv = inverse_spd(info.K_beta, &res.warnings);
  res.K_theta_inv = inverse_spd(info.K_theta, &res.warnings);
  return res;
}

std::vector<Interval> wald_intervals(const VectorXd& estimate, const VectorXd& inv_info_diag,
                                     double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (estimate.size() != inv_info_diag.size()) throw DimensionError("interval size mismatch");
  const double z = special::normal_quantile(1.0 - 0.5 * alpha);
  std::vector<Interval> out;
  out.reserve(static_cast<std::size_t>(estimate.size()));
  for (Eigen::Index k = 0; k < estimate.size(); ++k) {
    const double half = z * std::sqrt(std::max(0.0, inv_info_diag(k)));
    out.push_back({estimate(k) - half, estimate(k) + half});
  }
  return out;
}

std::vector<Interval> wald_intervals(const FitResult& fit, double alpha) {
  VectorXd diag(fit.beta.size() + fit.theta.size());
  diag << fit.K_beta_inv.diagonal(), fit.K_theta_inv.diagonal();
  return wald_intervals(fit.zeta(), diag, alpha);
}

}  // namespace dispbias
