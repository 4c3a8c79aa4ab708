#include "dispbias/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "dispbias/errors.hpp"

namespace dispbias {

int Dataset::column(std::string_view name) const {
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (names[j] == name) return static_cast<int>(j);
  }
  return -1;
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.names = names;
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(rows[k]);
    out.y(static_cast<Eigen::Index>(k)) = y(i);
    out.x.row(static_cast<Eigen::Index>(k)) = x.row(i);
  }
  return out;
}

Predictor::Predictor(std::vector<Term> terms, std::vector<std::string> param_names)
    : terms_(std::move(terms)), names_(std::move(param_names)) {
  std::vector<bool> seen(names_.size(), false);
  for (const Term& t : terms_) {
    if (t.kind == Term::Kind::offset) continue;
    if (t.param < 0 || static_cast<std::size_t>(t.param) >= names_.size()) {
      throw std::invalid_argument("predictor term refers to an undeclared parameter");
    }
    seen[static_cast<std::size_t>(t.param)] = true;
  }
  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (!seen[k]) throw std::invalid_argument("parameter '" + names_[k] + "' appears in no term");
  }
}

Predictor::Predictor(std::shared_ptr<const CustomPredictor> custom,
                     std::vector<std::string> param_names)
    : names_(std::move(param_names)), custom_(std::move(custom)) {
  if (!custom_) throw std::invalid_argument("null custom predictor");
  if (custom_->param_count() != names_.size()) {
    throw DimensionError("custom predictor parameter count does not match its names");
  }
}

bool Predictor::is_linear() const {
  if (custom_) return custom_->is_linear();
  return std::none_of(terms_.begin(), terms_.end(),
                      [](const Term& t) { return t.kind == Term::Kind::power; });
}

int Predictor::intercept_param() const {
  for (const Term& t : terms_) {
    if (t.kind == Term::Kind::intercept) return t.param;
  }
  return -1;
}

double Predictor::eval(const MatrixXd& x, Eigen::Index row, const VectorXd& params,
                       Eigen::Ref<VectorXd> grad, MatrixXd* hess) const {
  if (static_cast<std::size_t>(params.size()) != names_.size()) {
    throw DimensionError("predictor expects " + std::to_string(names_.size()) +
                         " parameters, got " + std::to_string(params.size()));
  }
  if (custom_) return custom_->eval(x.row(row), params, grad, hess);
  grad.setZero();
  if (hess) hess->setZero(params.size(), params.size());
  double eta = 0.0;
  for (const Term& t : terms_) {
    switch (t.kind) {
      case Term::Kind::intercept:
        eta += params(t.param);
        grad(t.param) += 1.0;
        break;
      case Term::Kind::linear: {
        const double xv = x(row, t.covariate);
        eta += params(t.param) * xv;
        grad(t.param) += xv;
        break;
      }
      case Term::Kind::power: {
        const double xv = x(row, t.covariate);
        if (!(xv > 0.0)) {
          throw DomainError("power term needs a positive covariate, got " + std::to_string(xv));
        }
        const double lx = std::log(xv);
        const double v = std::exp(params(t.param) * lx);
        eta += v;
        grad(t.param) += lx * v;
        if (hess) (*hess)(t.param, t.param) += lx * lx * v;
        break;
      }
      case Term::Kind::offset:
        eta += x(row, t.covariate);
        break;
    }
  }
  return eta;
}

std::string Predictor::to_string(const std::vector<std::string>& covariate_names) const {
  if (custom_) return "<custom>";
  std::string out;
  for (const Term& t : terms_) {
    if (!out.empty()) out += " + ";
    switch (t.kind) {
      case Term::Kind::intercept: out += names_[t.param]; break;
      case Term::Kind::linear:
        out += names_[t.param] + "*" + covariate_names.at(t.covariate);
        break;
      case Term::Kind::power:
        out += covariate_names.at(t.covariate) + "^" + names_[t.param];
        break;
      case Term::Kind::offset: out += covariate_names.at(t.covariate); break;
    }
  }
  return out;
}

namespace {

struct Lexer {
  std::string_view s;
  std::size_t pos = 0;

  void skip() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool at_end() {
    skip();
    return pos >= s.size();
  }
  bool accept(char c) {
    skip();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  std::string ident() {
    skip();
    const std::size_t start = pos;
    auto ok = [](char c, bool first) {
      return std::isalpha(static_cast<unsigned char>(c)) || c == '_' ||
             (!first && (std::isdigit(static_cast<unsigned char>(c)) || c == '.'));
    };
    while (pos < s.size() && ok(s[pos], pos == start)) ++pos;
    if (pos == start) {
      throw std::invalid_argument("expected an identifier at position " + std::to_string(start) +
                                  " in '" + std::string(s) + "'");
    }
    return std::string(s.substr(start, pos - start));
  }
};

}  // namespace

Predictor parse_predictor(std::string_view text, const std::vector<std::string>& params,
                          const std::vector<std::string>& covariates) {
  auto find = [](const std::vector<std::string>& v, const std::string& id) {
    const auto it = std::find(v.begin(), v.end(), id);
    return it == v.end() ? -1 : static_cast<int>(it - v.begin());
  };
  struct Operand {
    std::string id;
    int param;
    int covariate;
  };
  auto resolve = [&](const std::string& id) {
    Operand o{id, find(params, id), find(covariates, id)};
    if (o.param >= 0 && o.covariate >= 0) {
      throw std::invalid_argument("identifier '" + id + "' is both a parameter and a covariate");
    }
    if (o.param < 0 && o.covariate < 0) {
      throw std::invalid_argument("unresolved identifier '" + id +
                                  "': not a declared parameter or bound column");
    }
    return o;
  };

  Lexer lex{text};
  std::vector<Term> terms;
  if (lex.at_end()) throw std::invalid_argument("empty predictor");
  do {
    const Operand a = resolve(lex.ident());
    if (lex.accept('*')) {
      const Operand b = resolve(lex.ident());
      if (a.param >= 0 && b.covariate >= 0) {
        terms.push_back({Term::Kind::linear, a.param, b.covariate});
      } else if (a.covariate >= 0 && b.param >= 0) {
        terms.push_back({Term::Kind::linear, b.param, a.covariate});
      } else {
        throw std::invalid_argument("product '" + a.id + "*" + b.id +
                                    "' must pair one parameter with one covariate");
      }
    } else if (lex.accept('^')) {
      const Operand b = resolve(lex.ident());
      if (a.covariate < 0 || b.param < 0) {
        throw std::invalid_argument("power '" + a.id + "^" + b.id +
                                    "' must raise a covariate to a parameter");
      }
      terms.push_back({Term::Kind::power, b.param, a.covariate});
    } else if (a.param >= 0) {
      terms.push_back({Term::Kind::intercept, a.param, -1});
    } else {
      terms.push_back({Term::Kind::offset, -1, a.covariate});
    }
  } while (lex.accept('+'));
  if (!lex.at_end()) {
    throw std::invalid_argument("unexpected character '" + std::string(1, text[lex.pos]) +
                                "' in predictor '" + std::string(text) + "'");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const bool used = std::any_of(terms.begin(), terms.end(),
                                  [&](const Term& t) { return t.param == static_cast<int>(k); });
    if (!used) throw std::invalid_argument("parameter '" + params[k] + "' does not appear in the predictor");
  }
  return Predictor(std::move(terms), params);
}

void ModelSpec::validate() const {
  if (!family) throw std::invalid_argument("model has no family");
  if (p() == 0) throw std::invalid_argument("mean predictor has no parameters");
  if (family->fixed_phi() && q() != 0) {
    throw std::invalid_argument("family '" + family->name() +
                                "' has fixed precision and takes no dispersion predictor");
  }
  if (!family->fixed_phi() && q() == 0) {
    throw std::invalid_argument("family '" + family->name() + "' needs a dispersion predictor");
  }
}

Eigen::Index numerical_rank(const MatrixXd& m) {
  if (m.cols() == 0) return 0;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(m);
  qr.setThreshold(1e-10);
  return qr.rank();
}

DesignState design_build(const ModelSpec& model, const Dataset& data, const VectorXd& beta,
                         const VectorXd& theta, const DesignOptions& options) {
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto p = static_cast<Eigen::Index>(model.p());
  const auto q = static_cast<Eigen::Index>(model.q());
  if (data.x.rows() != n) throw DimensionError("covariate rows do not match responses");
  if (beta.size() != p || theta.size() != q) {
    throw DimensionError("parameter vector sizes do not match the model (p = " +
                         std::to_string(p) + ", q = " + std::to_string(q) + ")");
  }
  DesignState d;
  d.Xtilde.resize(n, p);
  d.Ztilde.resize(n, q);
  d.eta1.resize(n);
  d.eta2.resize(n);
  d.mu.resize(n);
  d.phi.resize(n);
  d.dmu.resize(n);
  d.d2mu.resize(n);
  d.dphi.resize(n);
  d.d2phi.resize(n);
  if (options.hessians) {
    d.Xhess.assign(static_cast<std::size_t>(n), MatrixXd::Zero(p, p));
    d.Zhess.assign(static_cast<std::size_t>(n), MatrixXd::Zero(q, q));
  }
  const bool mean_hess = options.hessians && !model.mean.is_linear();
  const bool disp_hess = options.hessians && !model.disp.is_linear();
  const auto fixed = model.family->fixed_phi();
  const OpenInterval mu_dom = model.family->mu_domain();

  VectorXd grad1(p);
  VectorXd grad2(q);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i);
    try {
      d.eta1(i) = model.mean.eval(data.x, i, beta, grad1,
                                  mean_hess ? &d.Xhess[row] : nullptr);
      const LinkEval le = model.mean_link.eval(d.eta1(i));
      if (!mu_dom.contains(le.mu)) {
        throw DomainError("mu = " + std::to_string(le.mu) + " outside the " +
                          model.family->name() + " domain");
      }
      d.mu(i) = le.mu;
      d.dmu(i) = le.dmu;
      d.d2mu(i) = le.d2mu;
      if (fixed) {
        d.eta2(i) = 0.0;
        d.phi(i) = *fixed;
        d.dphi(i) = 0.0;
        d.d2phi(i) = 0.0;
      } else {
        d.eta2(i) = model.disp.eval(data.x, i, theta, grad2,
                                    disp_hess ? &d.Zhess[row] : nullptr);
        const LinkEval pe = model.disp_link.eval(d.eta2(i));
        if (!(pe.mu > 0.0) || !std::isfinite(pe.mu)) {
          throw DomainError("phi = " + std::to_string(pe.mu) + " is not positive");
        }
        d.phi(i) = pe.mu;
        d.dphi(i) = pe.dmu;
        d.d2phi(i) = pe.d2mu;
      }
    } catch (const DomainError& e) {
      if (e.row()) throw;
      throw DomainError(e.what(), row);
    }
    d.Xtilde.row(i) = grad1.transpose();
    if (q > 0) d.Ztilde.row(i) = grad2.transpose();
  }
  if (options.rank_check) {
    if (numerical_rank(d.Xtilde) < p) {
      throw RankDeficientError("mean design matrix is rank deficient");
    }
    if (q > 0 && numerical_rank(d.Ztilde) < q) {
      throw RankDeficientError("dispersion design matrix is rank deficient");
    }
  }
  return d;
}

}  // namespace dispbias
