#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace dispbias {

/// Open interval (lo, hi); infinities allowed.
struct OpenInterval {
  double lo;
  double hi;
  bool contains(double v) const { return v > lo && v < hi; }
};

enum class LinkKind {
  logit,
  probit,
  log,
  identity,
  reciprocal,
  square_reciprocal,
  sqrt,
  cloglog,
  tangent,
  custom,
};

/// μ = g⁻¹(η) together with dμ/dη and d²μ/dη².
struct LinkEval {
  double mu;
  double dmu;
  double d2mu;
};

/// User-supplied link for library callers; the CLI only exposes the built-in catalog.
class CustomLink {
 public:
  virtual ~CustomLink() = default;
  virtual std::string name() const = 0;
  virtual OpenInterval mu_domain() const = 0;
  virtual LinkEval inverse(double eta) const = 0;
  virtual double apply(double mu) const = 0;
};

/// A strictly monotone C² link g with g(μ) = η. Cheap to copy.
class Link {
 public:
  explicit Link(LinkKind kind);
  explicit Link(std::shared_ptr<const CustomLink> custom);

  static Link logit() { return Link(LinkKind::logit); }
  static Link probit() { return Link(LinkKind::probit); }
  static Link log() { return Link(LinkKind::log); }
  static Link identity() { return Link(LinkKind::identity); }
  static Link reciprocal() { return Link(LinkKind::reciprocal); }
  static Link square_reciprocal() { return Link(LinkKind::square_reciprocal); }
  static Link sqrt() { return Link(LinkKind::sqrt); }
  static Link cloglog() { return Link(LinkKind::cloglog); }
  static Link tangent() { return Link(LinkKind::tangent); }

  /// Accepts the configuration names: logit, probit, log, identity, reciprocal,
  /// sqrt-reciprocal, sqrt, cloglog, tangent.
  static Link from_name(std::string_view name);

  LinkKind kind() const { return kind_; }
  std::string name() const;
  OpenInterval mu_domain() const;

  /// Inverse link and its derivatives. Throws DomainError when η has no
  /// preimage inside the μ-domain.
  LinkEval eval(double eta) const;

  /// η = g(μ). Throws DomainError outside the μ-domain.
  double apply(double mu) const;

 private:
  LinkKind kind_;
  std::shared_ptr<const CustomLink> custom_;
};

}  // namespace dispbias
