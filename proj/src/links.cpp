#include "dispbias/links.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "dispbias/errors.hpp"
#include "dispbias/specialfns.hpp"

namespace dispbias {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void eta_out_of_domain(const Link& link, double eta) {
  throw DomainError(link.name() + " link: eta = " + std::to_string(eta) +
                    " has no preimage in the mu-domain");
}

}  // namespace

Link::Link(LinkKind kind) : kind_(kind) {
  if (kind == LinkKind::custom) {
    throw std::invalid_argument("custom links must be constructed from a CustomLink");
  }
}

Link::Link(std::shared_ptr<const CustomLink> custom)
    : kind_(LinkKind::custom), custom_(std::move(custom)) {
  if (!custom_) throw std::invalid_argument("null custom link");
}

Link Link::from_name(std::string_view name) {
  if (name == "logit") return logit();
  if (name == "probit") return probit();
  if (name == "log") return log();
  if (name == "identity") return identity();
  if (name == "reciprocal") return reciprocal();
  if (name == "sqrt-reciprocal" || name == "square-reciprocal") return square_reciprocal();
  if (name == "sqrt") return sqrt();
  if (name == "cloglog") return cloglog();
  if (name == "tangent") return tangent();
  throw std::invalid_argument("unknown link '" + std::string(name) + "'");
}

std::string Link::name() const {
  switch (kind_) {
    case LinkKind::logit: return "logit";
    case LinkKind::probit: return "probit";
    case LinkKind::log: return "log";
    case LinkKind::identity: return "identity";
    case LinkKind::reciprocal: return "reciprocal";
    case LinkKind::square_reciprocal: return "sqrt-reciprocal";
    case LinkKind::sqrt: return "sqrt";
    case LinkKind::cloglog: return "cloglog";
    case LinkKind::tangent: return "tangent";
    case LinkKind::custom: return custom_->name();
  }
  return "unknown";
}

OpenInterval Link::mu_domain() const {
  switch (kind_) {
    case LinkKind::logit:
    case LinkKind::probit:
    case LinkKind::cloglog: return {0.0, 1.0};
    case LinkKind::log:
    case LinkKind::reciprocal:
    case LinkKind::square_reciprocal:
    case LinkKind::sqrt: return {0.0, kInf};
    case LinkKind::identity: return {-kInf, kInf};
    case LinkKind::tangent: return {-std::numbers::pi / 2, std::numbers::pi / 2};
    case LinkKind::custom: return custom_->mu_domain();
  }
  return {-kInf, kInf};
}

LinkEval Link::eval(double eta) const {
  if (!std::isfinite(eta)) eta_out_of_domain(*this, eta);
  LinkEval out{};
  switch (kind_) {
    case LinkKind::logit: {
      const double mu = 1.0 / (1.0 + std::exp(-eta));
      const double v = mu * (1.0 - mu);
      out = {mu, v, v * (1.0 - 2.0 * mu)};
      break;
    }
    case LinkKind::probit: {
      const double f = special::normal_pdf(eta);
      out = {special::normal_cdf(eta), f, -eta * f};
      break;
    }
    case LinkKind::log: {
      const double mu = std::exp(eta);
      out = {mu, mu, mu};
      break;
    }
    case LinkKind::identity:
      out = {eta, 1.0, 0.0};
      break;
    case LinkKind::reciprocal: {
      if (!(eta > 0.0)) eta_out_of_domain(*this, eta);
      const double mu = 1.0 / eta;
      out = {mu, -mu * mu, 2.0 * mu * mu * mu};
      break;
    }
    case LinkKind::square_reciprocal: {
      if (!(eta > 0.0)) eta_out_of_domain(*this, eta);
      const double mu = 1.0 / std::sqrt(eta);
      const double mu3 = mu * mu * mu;
      out = {mu, -0.5 * mu3, 0.75 * mu3 * mu * mu};
      break;
    }
    case LinkKind::sqrt: {
      if (!(eta > 0.0)) eta_out_of_domain(*this, eta);
      const double mu = eta * eta;
      out = {mu, 2.0 * eta, 2.0};
      break;
    }
    case LinkKind::cloglog: {
      const double e = std::exp(eta);
      const double one_minus = std::exp(-e);  // 1 − μ
      const double mu = -std::expm1(-e);
      // −log(1 − μ) = e^η
      out = {mu, e * one_minus, e * one_minus * (1.0 - e)};
      break;
    }
    case LinkKind::tangent: {
      const double mu = std::atan(eta);
      const double c = std::cos(mu);
      const double c2 = c * c;
      // d²μ/dη² = −2 sin μ cos³ μ (derivative of cos²μ = 1/(1+η²))
      out = {mu, c2, -2.0 * c2 * c * std::sin(mu)};
      break;
    }
    case LinkKind::custom:
      return custom_->inverse(eta);
  }
  if (!mu_domain().contains(out.mu)) eta_out_of_domain(*this, eta);
  return out;
}

double Link::apply(double mu) const {
  if (!mu_domain().contains(mu)) {
    throw DomainError(name() + " link: mu = " + std::to_string(mu) + " outside the link domain");
  }
  switch (kind_) {
    case LinkKind::logit: return std::log(mu / (1.0 - mu));
    case LinkKind::probit: return special::normal_quantile(mu);
    case LinkKind::log: return std::log(mu);
    case LinkKind::identity: return mu;
    case LinkKind::reciprocal: return 1.0 / mu;
    case LinkKind::square_reciprocal: return 1.0 / (mu * mu);
    case LinkKind::sqrt: return std::sqrt(mu);
    case LinkKind::cloglog: return std::log(-std::log1p(-mu));
    case LinkKind::tangent: return std::tan(mu);
    case LinkKind::custom: return custom_->apply(mu);
  }
  return mu;
}

}  // namespace dispbias
