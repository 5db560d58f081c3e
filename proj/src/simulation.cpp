#include "ptlab/simulation.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "ptlab/distributions.hpp"
#include "ptlab/error.hpp"
#include "ptlab/random.hpp"
#include "ptlab/wald.hpp"

namespace ptlab {

double CounterRng::normal() { return normal_quantile(uniform()); }

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::kA: return "a";
    case Regime::kB: return "b";
    case Regime::kC: return "c";
  }
  return "?";
}

Regime parse_regime(const std::string& name) {
  if (name == "a") return Regime::kA;
  if (name == "b") return Regime::kB;
  if (name == "c") return Regime::kC;
  raise(ErrorKind::kInvalidInput, "unknown variance regime '" + name + "' (expected a, b or c)");
}

TrueParameters study_truth(Regime regime, int replicas) {
  constexpr int p = 5;
  constexpr int m = 5;
  const double step = regime == Regime::kA ? 0.1 : regime == Regime::kB ? 0.2 : 0.3;
  Vector mu(m), sigma_x(m);
  mu << 10, 20, 30, 40, 50;
  sigma_x << 0.24, 0.31, 0.38, 0.45, 0.52;
  Matrix sigma2(p, m);
  for (int j = 0; j < m; ++j) sigma2.col(j).setConstant(std::pow(step * (j + 1), 2));
  return {ParameterVector::null_hypothesis(mu, p),
          StudyDesign::make(std::vector<int>(p, replicas), sigma_x.array().square(), sigma2)};
}

Measurements simulate_given_latent(const TrueParameters& truth, const Vector& latent,
                                   std::uint64_t seed, double noise_scale) {
  const StudyDesign& d = truth.design;
  if (latent.size() != d.levels) {
    raise(ErrorKind::kDimensionMismatch, "latent vector does not match the number of levels");
  }
  CounterRng rng(seed);
  std::vector<std::vector<Vector>> values(d.labs, std::vector<Vector>(d.levels));
  for (int i = 0; i < d.labs; ++i) {
    const double alpha = truth.theta.alpha_of(i);
    const double beta = truth.theta.beta_of(i);
    for (int j = 0; j < d.levels; ++j) {
      const double sd = std::sqrt(d.sigma2(i, j)) * noise_scale;
      Vector& cell = values[i][j];
      cell.resize(d.replicas[i]);
      for (int k = 0; k < d.replicas[i]; ++k) {
        cell[k] = alpha + beta * latent[j] + sd * rng.normal();
      }
    }
  }
  return Measurements(std::move(values));
}

Measurements simulate_dataset(const TrueParameters& truth, std::uint64_t seed) {
  const StudyDesign& d = truth.design;
  CounterRng rng(derive_seed(seed, 0));
  Vector latent(d.levels);
  for (int j = 0; j < d.levels; ++j) {
    latent[j] = truth.theta.mu_x[j] + std::sqrt(d.sigma2_x[j]) * rng.normal();
  }
  return simulate_given_latent(truth, latent, derive_seed(seed, 1));
}

void StudyConfig::validate() const {
  if (replications < 1) raise(ErrorKind::kInvalidInput, "replications must be >= 1");
  for (double l : levels) {
    if (!(l > 0.0 && l < 1.0)) raise(ErrorKind::kInvalidInput, "nominal levels must be in (0, 1)");
  }
  for (int n : replica_counts) {
    if (n < 1) raise(ErrorKind::kInvalidInput, "replica counts must be >= 1");
  }
  if (tested_lab < 1 || tested_lab > 4) {
    raise(ErrorKind::kInvalidInput, "tested lab must be a participant (1..4)");
  }
  for (int lab : deviated_labs) {
    if (lab < 1 || lab > 4) raise(ErrorKind::kInvalidInput, "deviated labs must be in 1..4");
  }
  em.validate();
}

std::uint64_t replication_seed(std::uint64_t master, int replica_count, int replication) {
  return derive_seed(derive_seed(master, static_cast<std::uint64_t>(replica_count)),
                     static_cast<std::uint64_t>(replication));
}

namespace {

// Evaluates task(r) for r in [0, count) on `threads` workers; each result lands
// in its own slot so the output does not depend on scheduling.
template <typename Task>
std::vector<double> run_parallel(int count, int threads, const Task& task) {
  std::vector<double> out(count);
  unsigned workers = threads > 0 ? static_cast<unsigned>(threads)
                                 : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(count));
  std::atomic<int> next{0};
  auto drain = [&] {
    for (int r = next++; r < count; r = next++) out[r] = task(r);
  };
  if (workers <= 1) {
    drain();
    return out;
  }
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(drain);
  pool.clear();
  return out;
}

double rejection_se(double rate, int n) {
  return n > 0 ? std::sqrt(rate * (1.0 - rate) / n) : 0.0;
}

}  // namespace

std::vector<double> replicate_statistics(const StudyConfig& config, const TrueParameters& truth,
                                         int replica_count) {
  return run_parallel(config.replications, config.threads, [&](int r) {
    const Measurements data =
        simulate_dataset(truth, replication_seed(config.master_seed, replica_count, r));
    try {
      const FitResult fit = fit_em(data, truth.design, config.em);
      if (!fit.converged) return std::numeric_limits<double>::quiet_NaN();
      return config.hypothesis == Hypothesis::kGlobal
                 ? wald_global(fit).statistic
                 : wald_individual(fit, config.tested_lab).statistic;
    } catch (const Error&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  });
}

StudyResult empirical_size_study(const StudyConfig& config) {
  config.validate();
  StudyResult result;
  result.config = config;
  const int df = config.hypothesis == Hypothesis::kGlobal ? 8 : 2;
  for (int n : config.replica_counts) {
    const TrueParameters truth = study_truth(config.regime, n);
    std::vector<double> stats = replicate_statistics(config, truth, n);
    for (double level : config.levels) {
      const double critical = chi2_quantile(1.0 - level, df);
      SizeCell cell{n, level, to_string(config.regime)};
      int rejected = 0;
      for (double q : stats) {
        if (std::isnan(q)) {
          ++cell.failed;
        } else {
          ++cell.n_effective;
          if (q > critical) ++rejected;
        }
      }
      cell.rate = cell.n_effective > 0 ? static_cast<double>(rejected) / cell.n_effective : 0.0;
      cell.se = rejection_se(cell.rate, cell.n_effective);
      result.cells.push_back(cell);
    }
    result.statistics[n] = std::move(stats);
  }
  return result;
}

PowerResult power_study(const StudyConfig& config, double level) {
  config.validate();
  if (config.deviations.empty()) raise(ErrorKind::kInvalidInput, "deviation grid is empty");
  if (!(level > 0.0 && level < 1.0)) raise(ErrorKind::kInvalidInput, "level must be in (0, 1)");

  StudyConfig global = config;
  global.hypothesis = Hypothesis::kGlobal;
  PowerResult result;
  result.config = config;
  result.level = level;
  result.threshold = chi2_quantile(1.0 - level, 8);

  for (int n : config.replica_counts) {
    for (double d : config.deviations) {
      TrueParameters truth = study_truth(config.regime, n);
      for (int lab : config.deviated_labs) {
        truth.theta.alpha[lab - 1] += d * config.alpha_scale;
        truth.theta.beta[lab - 1] += d * config.beta_scale;
      }
      const std::vector<double> stats = replicate_statistics(global, truth, n);
      PowerPoint point{n, d, to_string(config.regime)};
      int rejected = 0;
      for (double q : stats) {
        if (std::isnan(q)) {
          ++point.failed;
        } else {
          ++point.n_effective;
          if (q > result.threshold) ++rejected;
        }
      }
      point.power = point.n_effective > 0 ? static_cast<double>(rejected) / point.n_effective : 0.0;
      point.se = rejection_se(point.power, point.n_effective);
      result.points.push_back(point);
    }
  }
  return result;
}

}  // namespace ptlab
