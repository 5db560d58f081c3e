#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ptlab/em.hpp"
#include "ptlab/model.hpp"

namespace ptlab {

struct TrueParameters {
  ParameterVector theta;
  StudyDesign design;
};

/// Error standard-deviation regimes of the size/power study.
enum class Regime { kA, kB, kC };

std::string to_string(Regime regime);
Regime parse_regime(const std::string& name);

/// Five labs, five levels, mu_x = 10..50, sigma_x = 0.24..0.52, every lab at
/// the regime's error standard deviations, alpha = 0, beta = 1.
TrueParameters study_truth(Regime regime, int replicas);

/// Draws x_j ~ N(mu_x_j, sigma2_x_j) once per dataset, shared by every lab and
/// replicate, then Y_ijk = alpha_i + beta_i x_j + e_ijk.
Measurements simulate_dataset(const TrueParameters& truth, std::uint64_t seed);

/// Same with the latent values fixed; `noise_scale` multiplies every error draw
/// (0 gives the noiseless data alpha_i + beta_i x_j).
Measurements simulate_given_latent(const TrueParameters& truth, const Vector& latent,
                                   std::uint64_t seed, double noise_scale = 1.0);

enum class Hypothesis { kGlobal, kIndividual };

struct StudyConfig {
  int replications = 2000;
  std::vector<double> levels{0.01, 0.05, 0.10};
  std::vector<int> replica_counts{3, 7, 15, 30};
  Regime regime = Regime::kA;
  Hypothesis hypothesis = Hypothesis::kGlobal;
  int tested_lab = 1;  ///< 0-based, so 1 is the second laboratory

  // Power grid: labs in `deviated_labs` get alpha += d * alpha_scale and
  // beta += d * beta_scale for every d in `deviations`.
  std::vector<double> deviations{0.0, 0.0025, 0.005, 0.0075, 0.01};
  std::vector<int> deviated_labs{1, 3};
  double alpha_scale = 1.0;
  double beta_scale = 1.0;

  std::uint64_t master_seed = 20190721;
  int threads = 0;  ///< 0 = hardware concurrency
  EmSettings em;

  void validate() const;
};

struct SizeCell {
  int replica_count = 0;
  double level = 0.0;
  std::string regime;
  double rate = 0.0;
  double se = 0.0;
  int n_effective = 0;
  int failed = 0;
};

struct StudyResult {
  StudyConfig config;
  std::vector<SizeCell> cells;
  /// Wald statistic of every replication per replica count (NaN = failed fit).
  std::map<int, std::vector<double>> statistics;
};

struct PowerPoint {
  int replica_count = 0;
  double deviation = 0.0;
  std::string regime;
  double power = 0.0;
  double se = 0.0;
  int n_effective = 0;
  int failed = 0;
};

struct PowerResult {
  StudyConfig config;
  double level = 0.05;
  double threshold = 0.0;  ///< chi-square quantile the statistic is compared with
  std::vector<PowerPoint> points;
};

/// Seed of replication r in the cell with `replica_count` replicas. Independent
/// of deviation and regime, so those comparisons use common random numbers.
std::uint64_t replication_seed(std::uint64_t master, int replica_count, int replication);

/// Wald statistic (global or individual, per config) of each replication.
std::vector<double> replicate_statistics(const StudyConfig& config, const TrueParameters& truth,
                                         int replica_count);

StudyResult empirical_size_study(const StudyConfig& config);

/// Global-test power at nominal level `level` along the deviation grid.
PowerResult power_study(const StudyConfig& config, double level = 0.05);

}  // namespace ptlab
