#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gsc/green.hpp"
#include "gsc/random.hpp"

namespace gsc {

struct Provenance {
  enum class Kind { Exact, Gibbs };
  Kind kind = Kind::Exact;
  std::uint64_t step = 0;  // gibbs: sweep index
  std::uint32_t chain = 0;
};

/// One field configuration on the keep set of an operator (local indexing).
struct FieldSample {
  Eigen::VectorXd values;
  Provenance provenance;
  std::uint64_t seed = 0;  // seed of the stream that produced it
};

/// Exact free-field draw: phi = P^T L^{-T} z, so Cov(phi) = L^{-1}.
FieldSample sample_gff(const DirichletOperator& op, Rng& rng, std::uint64_t seed = 0);

/// n exact draws as the columns of a matrix (one batched triangular solve).
Eigen::MatrixXd sample_gff_batch(const DirichletOperator& op, Rng& rng, Eigen::Index n);

struct CovarianceEstimate {
  double value = 0;
  double stderr = 0;  // jackknife
};

/// Unbiased sample covariance of columns (i, j) of `samples` (one sample per
/// row) with leave-one-out jackknife standard errors. Needs at least three
/// rows.
std::vector<CovarianceEstimate> empirical_covariance(const Eigen::MatrixXd& samples,
                                                     std::span<const std::pair<Eigen::Index, Eigen::Index>> pairs);

// ---------------------------------------------------------------------------
// Conditioning on a grid

/// Splits the field into its conditional mean given the values on a grid D
/// and an independent residual. The off-grid vertices of the keep set fall
/// into blocks (connected components of K minus D); the mean is the harmonic
/// extension of phi|_D into each block with zero exterior.
class ConditionalDecomposer {
 public:
  /// `representatives` (local indices), when given, must lie in distinct
  /// blocks; otherwise StructuralError.
  ConditionalDecomposer(const DirichletOperator& op, std::span<const LocalIndex> grid,
                        std::span<const LocalIndex> representatives = {});

  struct Parts {
    Eigen::VectorXd mu;        // equals phi on the grid
    Eigen::VectorXd residual;  // zero on the grid
  };
  Parts operator()(const Eigen::VectorXd& phi) const;

  std::size_t block_count() const { return blocks_.size(); }
  const std::vector<LocalIndex>& block(std::size_t b) const { return blocks_[b]; }
  /// Block of an off-grid vertex, -1 on the grid.
  std::int64_t block_of(LocalIndex x) const { return block_of_[static_cast<std::size_t>(x)]; }
  /// Var(residual_x) = inverse of the block operator at (x, x).
  double residual_variance(LocalIndex x) const;

 private:
  const DirichletOperator* op_;
  std::vector<LocalIndex> grid_;
  std::vector<LocalIndex> free_;            // off-grid, ascending
  std::vector<std::int64_t> free_pos_;      // local -> position in free_ or -1
  std::vector<std::vector<LocalIndex>> blocks_;
  std::vector<std::int64_t> block_of_;
  std::shared_ptr<const SparseCholesky> interior_;
  SparseMatrix coupling_;  // L restricted to rows free_, columns grid_
};

// ---------------------------------------------------------------------------
// Hard-wall Gibbs sampler

enum class SweepOrder { Lexicographic, RandomPermutation };

/// How vertices off the wall are refreshed each sweep.
enum class ExteriorUpdate {
  SingleSite,  // same single-site heat bath as the wall vertices
  ExactBlock,  // one exact draw of the off-wall field given the wall values
};

struct ChainConfig {
  std::uint64_t n_burnin = 500;
  std::uint64_t n_steps = 5000;  // sweeps after burn-in; every thinning-th is recorded
  std::uint64_t thinning = 5;
  SweepOrder order = SweepOrder::RandomPermutation;
  ExteriorUpdate exterior = ExteriorUpdate::ExactBlock;
  std::uint64_t master_seed = 1;
  std::uint32_t chains = 2;

  /// Throws InputError when a count is not positive.
  void validate() const;
};

struct Observable {
  std::string name;
  std::function<double(const Eigen::VectorXd&)> evaluate;
};

struct ObservableStats {
  std::string name;
  double mean = 0;
  double variance = 0;
  double stderr = 0;  // integrated-autocorrelation adjusted
  double iat = 1;     // integrated autocorrelation time, in recorded samples
  double rhat = 1;    // potential scale reduction across chains
  std::vector<double> chain_means;
};

struct WallRunStats {
  std::vector<ObservableStats> observables;
  std::uint32_t chains = 0;
  std::uint64_t samples_per_chain = 0;
  double max_rhat() const;
};

/// Receives every recorded (thinned, post burn-in) sample.
using SampleSink = std::function<void(const FieldSample&)>;

/// Gibbs chains for the free field on the keep set conditioned on phi >= 0
/// on `wall` (local indices). Wall vertices are updated one at a time from
/// their truncated normal full conditionals; chains start at zero and run
/// sequentially with seeds derive_seed(master_seed, chain id).
WallRunStats gibbs_hard_wall(const DirichletOperator& op, std::span<const LocalIndex> wall,
                             const ChainConfig& config, const std::vector<Observable>& observables,
                             const SampleSink& sink = {});

/// Draw from Normal(mean, sd^2) conditioned on [0, inf) by inverse CDF on
/// the complementary error function scale. The result is never negative.
double truncated_normal_nonnegative(double mean, double sd, Rng& rng);

/// Integrated autocorrelation time of a series, initial positive sequence
/// estimator. Returns 1 for constant or very short series.
double integrated_autocorrelation_time(std::span<const double> series);

// ---------------------------------------------------------------------------
// Wall probability by tilting

struct WallProbability {
  double p_hat = 0;
  double log_p_hat = 0;   // -inf when no_hit
  double stderr = 0;      // of p_hat
  double log_stderr = 0;  // delta method: stderr / p_hat
  double shift = 0;
  std::uint64_t samples = 0;
  std::uint64_t hits = 0;
  bool no_hit = false;
};

/// Importance-sampling estimate of P(phi >= 0 on W) under the free field of
/// `op`. Proposals are free-field draws shifted by the constant a; each hit
/// is weighted by the likelihood ratio of the W-marginals,
///   exp(-a <mu_W, phi_W> + a^2 Cap(W) / 2),
/// with mu_W the equilibrium measure of W. When W is the whole keep set this
/// is exp(-a 1^T L phi + a^2 1^T L 1 / 2).
WallProbability estimate_wall_probability(const DirichletOperator& op, std::span<const LocalIndex> wall,
                                          double a, std::uint64_t n_samples, Rng& rng);

/// KL( N(a 1, G_S) || N(0, G_S) ) = a^2 <1, G_S^{-1} 1> / 2.
double relative_entropy(const DirichletOperator& op, std::span<const LocalIndex> subset, double a);

// ---------------------------------------------------------------------------
// Observables

/// Mean of phi over a set (e.g. a cubic neighbourhood).
double set_mean(const Eigen::VectorXd& phi, std::span<const LocalIndex> set);

/// Mean over each block, blocks given as lists of local indices.
std::vector<double> block_means(const Eigen::VectorXd& phi, const std::vector<std::vector<LocalIndex>>& blocks);

/// Fraction of the set with phi <= t. Under the hard wall this is the
/// empirical measure of [0, t].
double empirical_cdf(const Eigen::VectorXd& phi, std::span<const LocalIndex> set, double t);

/// Number of points of the set with value <= threshold.
std::size_t count_at_most(const Eigen::VectorXd& values, std::span<const LocalIndex> set, double threshold);

struct ThetaCounts {
  std::size_t field = 0;  // |Theta_N(alpha)|
  std::size_t mean = 0;   // |Theta-bar_N(alpha)|, from the conditional mean
};

/// Counts of rip points with phi, respectively mu, at most sqrt(alpha N).
ThetaCounts theta_counts(const Eigen::VectorXd& phi, const Eigen::VectorXd& mu,
                         std::span<const LocalIndex> rip, double alpha, int level);

}  // namespace gsc
