#include "dispbias/bootstrap.hpp"

#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "dispbias/errors.hpp"

namespace dispbias {
namespace {

constexpr std::uint64_t kParametricTag = 0x70626f6f74ULL;     // "pboot"
constexpr std::uint64_t kNonparametricTag = 0x6e70626f6fULL;  // "npboo"

Dataset parametric_sample(const ModelSpec& model, const Dataset& data, const VectorXd& mu,
                          const VectorXd& phi, Rng& rng) {
  Dataset out = data;
  for (Eigen::Index i = 0; i < out.y.size(); ++i) out.y(i) = model.family->sample(mu(i), phi(i), rng);
  return out;
}

Dataset row_resample(const Dataset& data, Rng& rng) {
  const std::size_t n = data.n();
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) {
    r = static_cast<std::size_t>(uniform_open(rng) * static_cast<double>(n));
    if (r >= n) r = n - 1;
  }
  return data.subset(rows);
}

}  // namespace

std::string to_string(BootScheme s) {
  return s == BootScheme::parametric ? "parametric" : "nonparametric";
}

BootScheme boot_scheme_from_name(std::string_view name) {
  if (name == "parametric") return BootScheme::parametric;
  if (name == "nonparametric") return BootScheme::nonparametric;
  throw std::invalid_argument("unknown bootstrap scheme '" + std::string(name) + "'");
}

void BootstrapPlan::validate() const {
  if (B < 1) throw std::invalid_argument("bootstrap B must be at least 1");
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DISPBIAS_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += threads) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::vector<std::optional<VectorXd>> bootstrap_replicates(const ModelSpec& model,
                                                          const Dataset& data,
                                                          const FitResult& fit,
                                                          const BootstrapPlan& plan,
                                                          std::size_t first, std::size_t count) {
  if (plan.scheme == BootScheme::parametric && !plan.resampler && !model.family->samplable()) {
    throw UnsupportedError("family '" + model.family->name() +
                           "' cannot be sampled for the parametric bootstrap");
  }
  const DesignState base = design_build(model, data, fit.beta, fit.theta);
  const std::uint64_t tag =
      plan.scheme == BootScheme::parametric ? kParametricTag : kNonparametricTag;
  FitOptions fo = plan.fit_options;
  fo.keep_trace = false;
  const StartValues warm{fit.beta, fit.theta};

  std::vector<std::optional<VectorXd>> out(count);
  parallel_for(count, resolve_threads(plan.threads), [&](std::size_t k) {
    Rng rng = make_stream(plan.seed, first + k, tag);
    Dataset sample;
    if (plan.resampler) {
      sample = plan.resampler(data, base.mu, base.phi, rng);
    } else if (plan.scheme == BootScheme::parametric) {
      sample = parametric_sample(model, data, base.mu, base.phi, rng);
    } else {
      sample = row_resample(data, rng);
    }
    try {
      const FitResult r = fit_mle(model, sample, fo, warm);
      if (r.converged) out[k] = r.zeta();
    } catch (const std::runtime_error&) {
    } catch (const std::domain_error&) {
    }
  });
  return out;
}

BootstrapResult bootstrap_aggregate(const FitResult& fit,
                                    const std::vector<std::optional<VectorXd>>& replicates,
                                    RefitPolicy policy) {
  BootstrapResult res;
  res.zeta_hat = fit.zeta();
  VectorXd sum = VectorXd::Zero(res.zeta_hat.size());
  for (const auto& r : replicates) {
    if (r) {
      sum += *r;
      ++res.replicates_used;
    } else {
      ++res.nonconverged;
    }
  }
  if (policy == RefitPolicy::error && res.nonconverged > 0) {
    throw ConvergenceError(std::to_string(res.nonconverged) + " bootstrap refits did not converge");
  }
  if (res.replicates_used == 0) throw ConvergenceError("no bootstrap refit converged");
  res.zeta_star_mean = sum / static_cast<double>(res.replicates_used);
  res.bias_hat = res.zeta_star_mean - res.zeta_hat;
  res.zeta_bar = 2.0 * res.zeta_hat - res.zeta_star_mean;
  return res;
}

BootstrapResult bootstrap_bias(const ModelSpec& model, const Dataset& data, const FitResult& fit,
                               const BootstrapPlan& plan) {
  plan.validate();
  if (!fit.converged) throw ConvergenceError("bootstrap needs a converged base fit");
  const auto reps =
      bootstrap_replicates(model, data, fit, plan, 0, static_cast<std::size_t>(plan.B));
  return bootstrap_aggregate(fit, reps, plan.policy);
}

}  // namespace dispbias
