#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dispbias/fit.hpp"
#include "dispbias/model.hpp"
#include "dispbias/rng.hpp"

namespace dispbias {

enum class BootScheme { parametric, nonparametric };
enum class RefitPolicy { skip_nonconverged, error };

std::string to_string(BootScheme s);
BootScheme boot_scheme_from_name(std::string_view name);

/// Replacement pseudo-sample generator; receives the fitted μ̂ and φ̂.
using Resampler =
    std::function<Dataset(const Dataset& data, const VectorXd& mu, const VectorXd& phi, Rng& rng)>;

struct BootstrapPlan {
  BootScheme scheme = BootScheme::parametric;
  int B = 200;
  std::uint64_t seed = 1;
  RefitPolicy policy = RefitPolicy::skip_nonconverged;
  unsigned threads = 1;  // 0 picks the hardware concurrency
  Resampler resampler;   // overrides the scheme when set
  FitOptions fit_options;

  void validate() const;
};

struct BootstrapResult {
  VectorXd zeta_hat;
  VectorXd zeta_star_mean;  // ζ̂*(·)
  VectorXd bias_hat;        // ζ̂*(·) − ζ̂
  VectorXd zeta_bar;        // 2ζ̂ − ζ̂*(·)
  int replicates_used = 0;
  int nonconverged = 0;
};

/// Refits for replicates first .. first+count−1; a disengaged entry marks a
/// replicate whose refit failed. Replicate b always draws from the same
/// substream, so any partition of the range reproduces the same values.
std::vector<std::optional<VectorXd>> bootstrap_replicates(const ModelSpec& model,
                                                          const Dataset& data,
                                                          const FitResult& fit,
                                                          const BootstrapPlan& plan,
                                                          std::size_t first, std::size_t count);

/// Aggregates replicate estimates in index order.
BootstrapResult bootstrap_aggregate(const FitResult& fit,
                                    const std::vector<std::optional<VectorXd>>& replicates,
                                    RefitPolicy policy);

BootstrapResult bootstrap_bias(const ModelSpec& model, const Dataset& data, const FitResult& fit,
                               const BootstrapPlan& plan);

/// Runs body(i) for i in [0, count) on up to `threads` workers with a static
/// stride partition; exceptions are rethrown on the calling thread.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

/// Worker count honoring DISPBIAS_THREADS when requested is 0.
unsigned resolve_threads(unsigned requested);

}  // namespace dispbias
