#include "gsc/gff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/special_functions/erf.hpp>

#include "gsc/error.hpp"

namespace gsc {

namespace {

Eigen::VectorXd standard_normals(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> n01;
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = n01(rng);
  return z;
}

void check_indices(LocalIndex n, std::span<const LocalIndex> idx, const char* what) {
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (auto i : idx) {
    if (i < 0 || i >= n) throw InputError(std::string(what) + " index outside the keep set");
    if (seen[static_cast<std::size_t>(i)]) throw InputError(std::string(what) + " has a repeated index");
    seen[static_cast<std::size_t>(i)] = 1;
  }
}

std::vector<LocalIndex> complement_of(LocalIndex n, std::span<const LocalIndex> idx) {
  std::vector<char> in(static_cast<std::size_t>(n), 0);
  for (auto i : idx) in[static_cast<std::size_t>(i)] = 1;
  std::vector<LocalIndex> out;
  for (LocalIndex i = 0; i < n; ++i)
    if (!in[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

/// Rows `rows`, columns `cols` of a sparse matrix.
SparseMatrix submatrix(const SparseMatrix& m, std::span<const LocalIndex> rows, std::span<const LocalIndex> cols) {
  std::vector<std::int64_t> pos(static_cast<std::size_t>(m.rows()), -1);
  for (std::size_t i = 0; i < rows.size(); ++i) pos[static_cast<std::size_t>(rows[i])] = static_cast<std::int64_t>(i);
  std::vector<Eigen::Triplet<double, int>> t;
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (SparseMatrix::InnerIterator it(m, cols[j]); it; ++it) {
      const auto i = pos[static_cast<std::size_t>(it.row())];
      if (i >= 0) t.emplace_back(static_cast<int>(i), static_cast<int>(j), it.value());
    }
  SparseMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

}  // namespace

FieldSample sample_gff(const DirichletOperator& op, Rng& rng, std::uint64_t seed) {
  FieldSample s;
  s.values = op.factor().correlate(standard_normals(rng, op.size()));
  s.seed = seed;
  return s;
}

Eigen::MatrixXd sample_gff_batch(const DirichletOperator& op, Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> n01;
  Eigen::MatrixXd z(op.size(), n);
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index i = 0; i < op.size(); ++i) z(i, c) = n01(rng);
  return op.factor().correlate(z);
}

std::vector<CovarianceEstimate> empirical_covariance(const Eigen::MatrixXd& samples,
                                                     std::span<const std::pair<Eigen::Index, Eigen::Index>> pairs) {
  const Eigen::Index n = samples.rows();
  if (n < 3) throw InputError("covariance with jackknife errors needs at least 3 samples");
  const double dn = static_cast<double>(n);
  std::vector<CovarianceEstimate> out;
  out.reserve(pairs.size());
  for (auto [i, j] : pairs) {
    if (i < 0 || j < 0 || i >= samples.cols() || j >= samples.cols()) throw InputError("pair index out of range");
    const Eigen::VectorXd x = samples.col(i).array() - samples.col(i).mean();
    const Eigen::VectorXd y = samples.col(j).array() - samples.col(j).mean();
    // Sums of the centred data are zero, so leaving out sample k gives
    // sum x = -x_k and the covariance below.
    const double sxy = x.dot(y);
    Eigen::VectorXd loo(n);
    for (Eigen::Index k = 0; k < n; ++k)
      loo[k] = (sxy - x[k] * y[k] - x[k] * y[k] / (dn - 1)) / (dn - 2);
    const double mean_loo = loo.mean();
    const double var = (dn - 1) / dn * (loo.array() - mean_loo).square().sum();
    out.push_back({sxy / (dn - 1), std::sqrt(var)});
  }
  return out;
}

// ---------------------------------------------------------------------------

ConditionalDecomposer::ConditionalDecomposer(const DirichletOperator& op, std::span<const LocalIndex> grid,
                                             std::span<const LocalIndex> representatives)
    : op_(&op), grid_(grid.begin(), grid.end()) {
  check_indices(op.size(), grid, "grid");
  std::sort(grid_.begin(), grid_.end());
  free_ = complement_of(op.size(), grid_);
  free_pos_.assign(static_cast<std::size_t>(op.size()), -1);
  for (std::size_t k = 0; k < free_.size(); ++k) free_pos_[static_cast<std::size_t>(free_[k])] = static_cast<std::int64_t>(k);

  const auto& m = op.matrix();
  block_of_.assign(static_cast<std::size_t>(op.size()), -1);
  for (auto s : free_) {
    if (block_of_[static_cast<std::size_t>(s)] >= 0) continue;
    const auto id = static_cast<std::int64_t>(blocks_.size());
    blocks_.emplace_back();
    std::vector<LocalIndex> stack{s};
    block_of_[static_cast<std::size_t>(s)] = id;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      blocks_.back().push_back(u);
      for (SparseMatrix::InnerIterator it(m, u); it; ++it) {
        const auto v = it.row();
        if (v != u && free_pos_[static_cast<std::size_t>(v)] >= 0 && block_of_[static_cast<std::size_t>(v)] < 0) {
          block_of_[static_cast<std::size_t>(v)] = id;
          stack.push_back(v);
        }
      }
    }
    std::sort(blocks_.back().begin(), blocks_.back().end());
  }

  std::vector<char> taken(blocks_.size(), 0);
  for (auto r : representatives) {
    if (r < 0 || r >= op.size()) throw InputError("representative index outside the keep set");
    const auto b = block_of_[static_cast<std::size_t>(r)];
    if (b < 0) throw StructuralError("representative " + std::to_string(r) + " lies on the grid");
    if (taken[static_cast<std::size_t>(b)])
      throw StructuralError("grid does not separate the representatives: two share block " + std::to_string(b));
    taken[static_cast<std::size_t>(b)] = 1;
  }

  if (!free_.empty()) {
    interior_ = std::make_shared<const SparseCholesky>(principal_submatrix(m, free_));
    coupling_ = submatrix(m, free_, grid_);
  }
}

ConditionalDecomposer::Parts ConditionalDecomposer::operator()(const Eigen::VectorXd& phi) const {
  if (phi.size() != op_->size()) throw InputError("field size mismatch");
  Parts p{phi, Eigen::VectorXd::Zero(phi.size())};
  if (free_.empty()) return p;
  Eigen::VectorXd on_grid(static_cast<Eigen::Index>(grid_.size()));
  for (std::size_t k = 0; k < grid_.size(); ++k) on_grid[static_cast<Eigen::Index>(k)] = phi[grid_[k]];
  const Eigen::VectorXd mu = grid_.empty() ? Eigen::VectorXd::Zero(static_cast<Eigen::Index>(free_.size()))
                                           : Eigen::VectorXd(-interior_->solve(Eigen::VectorXd(coupling_ * on_grid)));
  for (std::size_t k = 0; k < free_.size(); ++k) {
    const auto x = free_[k];
    p.mu[x] = mu[static_cast<Eigen::Index>(k)];
    p.residual[x] = phi[x] - p.mu[x];
  }
  return p;
}

double ConditionalDecomposer::residual_variance(LocalIndex x) const {
  if (x < 0 || x >= op_->size()) throw InputError("index outside the keep set");
  const auto k = free_pos_[static_cast<std::size_t>(x)];
  if (k < 0) return 0;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(free_.size()));
  e[k] = 1;
  return interior_->solve(e)[k];
}

// ---------------------------------------------------------------------------

void ChainConfig::validate() const {
  if (n_steps == 0) throw InputError("n_steps must be positive");
  if (thinning == 0) throw InputError("thinning must be positive");
  if (chains == 0) throw InputError("chain count must be positive");
  if (n_steps / thinning < 4) throw InputError("fewer than 4 recorded samples per chain");
}

double WallRunStats::max_rhat() const {
  double r = 1;
  for (const auto& o : observables) r = std::max(r, o.rhat);
  return r;
}

double truncated_normal_nonnegative(double mean, double sd, Rng& rng) {
  const double alpha = -mean / sd;  // standardized truncation point
  const double sqrt2 = std::sqrt(2.0);
  double z;
  if (alpha < -8) {
    // Truncation removes less than 1e-15 of the mass.
    std::normal_distribution<double> n01;
    do z = n01(rng);
    while (z < alpha);
  } else {
    const double tail = std::erfc(alpha / sqrt2);  // 2 Q(alpha)
    if (tail > 1e-300) {
      z = sqrt2 * boost::math::erfc_inv(uniform_open_closed(rng) * tail);
    } else {
      // Far tail: exact exponential rejection sampler.
      const double lambda = 0.5 * (alpha + std::sqrt(alpha * alpha + 4));
      for (;;) {
        z = alpha - std::log(uniform_open_closed(rng)) / lambda;
        if (uniform_open_closed(rng) <= std::exp(-0.5 * (z - lambda) * (z - lambda))) break;
      }
    }
    z = std::max(z, alpha);
  }
  return std::max(0.0, mean + sd * z);
}

double integrated_autocorrelation_time(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 4) return 1;
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  auto gamma = [&](std::size_t t) {
    double s = 0;
    for (std::size_t i = 0; i + t < n; ++i) s += (series[i] - mean) * (series[i + t] - mean);
    return s / static_cast<double>(n);
  };
  const double g0 = gamma(0);
  if (!(g0 > 0)) return 1;
  double sum = -g0;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    const double pair = gamma(2 * k) + gamma(2 * k + 1);
    if (pair <= 0) break;
    sum += 2 * pair;
  }
  // Conservative floor: never report less than independent sampling.
  return std::max(1.0, sum / g0);
}

namespace {

ObservableStats summarize(const std::string& name, const std::vector<std::vector<double>>& chains) {
  ObservableStats s;
  s.name = name;
  const std::size_t c = chains.size();
  const std::size_t n = chains.front().size();
  const double dn = static_cast<double>(n);
  double total = 0, within = 0, iat = 0;
  for (const auto& x : chains) {
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / dn;
    double v = 0;
    for (double xi : x) v += (xi - m) * (xi - m);
    within += v / (dn - 1);
    s.chain_means.push_back(m);
    total += m;
    iat += integrated_autocorrelation_time(x);
  }
  s.mean = total / static_cast<double>(c);
  within /= static_cast<double>(c);
  iat /= static_cast<double>(c);
  double between = 0, pooled = 0;
  for (std::size_t k = 0; k < c; ++k) {
    between += (s.chain_means[k] - s.mean) * (s.chain_means[k] - s.mean);
    for (double xi : chains[k]) pooled += (xi - s.mean) * (xi - s.mean);
  }
  s.variance = pooled / (static_cast<double>(c) * dn - 1);
  s.iat = iat;
  s.stderr = std::sqrt(s.variance * iat / (static_cast<double>(c) * dn));
  if (c >= 2) {
    const double b = dn * between / static_cast<double>(c - 1);
    if (within > 0) {
      s.rhat = std::sqrt(((dn - 1) / dn * within + b / dn) / within);
    } else {
      s.rhat = b > 0 ? std::numeric_limits<double>::infinity() : 1.0;
    }
  } else {
    s.rhat = std::numeric_limits<double>::quiet_NaN();
  }
  return s;
}

}  // namespace

WallRunStats gibbs_hard_wall(const DirichletOperator& op, std::span<const LocalIndex> wall, const ChainConfig& config,
                             const std::vector<Observable>& observables, const SampleSink& sink) {
  config.validate();
  check_indices(op.size(), wall, "wall");
  const LocalIndex n = op.size();
  const auto& m = op.matrix();
  std::vector<char> on_wall(static_cast<std::size_t>(n), 0);
  for (auto x : wall) on_wall[static_cast<std::size_t>(x)] = 1;

  const bool block = config.exterior == ExteriorUpdate::ExactBlock;
  std::vector<LocalIndex> sites;  // single-site update set
  if (block) {
    sites.assign(wall.begin(), wall.end());
    std::sort(sites.begin(), sites.end());
  } else {
    sites.resize(static_cast<std::size_t>(n));
    std::iota(sites.begin(), sites.end(), LocalIndex{0});
  }
  std::vector<LocalIndex> exterior;
  std::shared_ptr<const SparseCholesky> ext_factor;
  SparseMatrix ext_coupling;
  std::vector<LocalIndex> wall_sorted(wall.begin(), wall.end());
  std::sort(wall_sorted.begin(), wall_sorted.end());
  if (block) {
    exterior = complement_of(n, wall_sorted);
    if (!exterior.empty()) {
      ext_factor = std::make_shared<const SparseCholesky>(principal_submatrix(m, exterior));
      ext_coupling = submatrix(m, exterior, wall_sorted);
    }
  }

  WallRunStats stats;
  stats.chains = config.chains;
  stats.samples_per_chain = config.n_steps / config.thinning;
  // per observable, per chain
  std::vector<std::vector<std::vector<double>>> traces(observables.size(),
                                                       std::vector<std::vector<double>>(config.chains));

  for (std::uint32_t chain = 0; chain < config.chains; ++chain) {
    const std::uint64_t seed = derive_seed(config.master_seed, chain);
    Rng rng(seed);
    std::normal_distribution<double> n01;
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(n);
    std::vector<LocalIndex> order = sites;
    Eigen::VectorXd wall_values(static_cast<Eigen::Index>(wall_sorted.size()));
    const std::uint64_t total = config.n_burnin + config.n_steps;
    for (std::uint64_t sweep = 1; sweep <= total; ++sweep) {
      if (config.order == SweepOrder::RandomPermutation) std::shuffle(order.begin(), order.end(), rng);
      for (auto x : order) {
        double diag = 0, pull = 0;
        for (SparseMatrix::InnerIterator it(m, x); it; ++it) {
          if (it.row() == x) diag = it.value();
          else pull -= it.value() * phi[it.row()];
        }
        const double mean = pull / diag;
        const double sd = 1 / std::sqrt(diag);
        phi[x] = on_wall[static_cast<std::size_t>(x)] ? truncated_normal_nonnegative(mean, sd, rng)
                                                      : mean + sd * n01(rng);
      }
      if (ext_factor) {
        for (std::size_t k = 0; k < wall_sorted.size(); ++k) wall_values[static_cast<Eigen::Index>(k)] = phi[wall_sorted[k]];
        Eigen::VectorXd drive = ext_coupling * wall_values;
        const Eigen::VectorXd mean = -ext_factor->solve(drive);
        const Eigen::VectorXd noise = ext_factor->correlate(standard_normals(rng, ext_factor->size()));
        for (std::size_t k = 0; k < exterior.size(); ++k)
          phi[exterior[k]] = mean[static_cast<Eigen::Index>(k)] + noise[static_cast<Eigen::Index>(k)];
      }
      if (!std::isfinite(phi.sum()))
        throw NumericError("non-finite field value in chain " + std::to_string(chain) + " at sweep " +
                           std::to_string(sweep));
      if (sweep > config.n_burnin && (sweep - config.n_burnin) % config.thinning == 0 &&
          (sweep - config.n_burnin) / config.thinning <= stats.samples_per_chain) {
        for (std::size_t o = 0; o < observables.size(); ++o) traces[o][chain].push_back(observables[o].evaluate(phi));
        if (sink) sink(FieldSample{phi, {Provenance::Kind::Gibbs, sweep, chain}, seed});
      }
    }
  }
  for (std::size_t o = 0; o < observables.size(); ++o)
    stats.observables.push_back(summarize(observables[o].name, traces[o]));
  return stats;
}

// ---------------------------------------------------------------------------

WallProbability estimate_wall_probability(const DirichletOperator& op, std::span<const LocalIndex> wall, double a,
                                          std::uint64_t n_samples, Rng& rng) {
  if (!(a >= 0) || !std::isfinite(a)) throw InputError("tilt a must be a finite nonnegative number");
  if (n_samples < 2) throw InputError("need at least 2 samples");
  if (wall.empty()) throw InputError("wall set must be nonempty");
  check_indices(op.size(), wall, "wall");
  Eigen::VectorXd measure = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(wall.size()));
  double capacity = 0;
  if (a > 0) {
    const auto eq = equilibrium_potential(op, wall);
    measure = eq.measure;
    capacity = eq.capacity;
  }
  std::vector<double> log_weights;
  constexpr Eigen::Index kBatch = 256;
  for (std::uint64_t done = 0; done < n_samples;) {
    const auto count = static_cast<Eigen::Index>(std::min<std::uint64_t>(kBatch, n_samples - done));
    const Eigen::MatrixXd batch = sample_gff_batch(op, rng, count);
    for (Eigen::Index c = 0; c < count; ++c) {
      bool hit = true;
      double pairing = 0;
      for (std::size_t k = 0; k < wall.size(); ++k) {
        const double v = batch(wall[k], c) + a;
        if (v < 0) {
          hit = false;
          break;
        }
        pairing += measure[static_cast<Eigen::Index>(k)] * v;
      }
      if (hit) log_weights.push_back(-a * pairing + 0.5 * a * a * capacity);
    }
    done += static_cast<std::uint64_t>(count);
  }
  WallProbability r;
  r.shift = a;
  r.samples = n_samples;
  r.hits = log_weights.size();
  const double n = static_cast<double>(n_samples);
  if (log_weights.empty()) {
    r.no_hit = true;
    r.p_hat = 0;
    r.log_p_hat = -std::numeric_limits<double>::infinity();
    r.stderr = 0;
    r.log_stderr = std::numeric_limits<double>::infinity();
    return r;
  }
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  double s1 = 0, s2 = 0;  // scaled by exp(-top), exp(-2 top)
  for (double l : log_weights) {
    const double w = std::exp(l - top);
    s1 += w;
    s2 += w * w;
  }
  const double mean_scaled = s1 / n;
  // Sample variance of the weighted indicator, scaled by exp(-2 top).
  const double var_scaled = std::max(0.0, (s2 - n * mean_scaled * mean_scaled) / (n - 1));
  const double rel = std::sqrt(var_scaled / n) / mean_scaled;
  r.log_p_hat = top + std::log(mean_scaled);
  r.p_hat = std::exp(r.log_p_hat);
  r.log_stderr = rel;
  r.stderr = r.p_hat * rel;
  return r;
}

double relative_entropy(const DirichletOperator& op, std::span<const LocalIndex> subset, double a) {
  if (a == 0) return 0;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(subset.size()));
  return 0.5 * a * a * quad_form_inverse_green(op, subset, ones);
}

// ---------------------------------------------------------------------------

double set_mean(const Eigen::VectorXd& phi, std::span<const LocalIndex> set) {
  if (set.empty()) throw InputError("mean over an empty set");
  double s = 0;
  for (auto x : set) s += phi[x];
  return s / static_cast<double>(set.size());
}

std::vector<double> block_means(const Eigen::VectorXd& phi, const std::vector<std::vector<LocalIndex>>& blocks) {
  std::vector<double> out;
  out.reserve(blocks.size());
  for (const auto& b : blocks) out.push_back(set_mean(phi, b));
  return out;
}

double empirical_cdf(const Eigen::VectorXd& phi, std::span<const LocalIndex> set, double t) {
  if (set.empty()) throw InputError("empirical measure of an empty set");
  return static_cast<double>(count_at_most(phi, set, t)) / static_cast<double>(set.size());
}

std::size_t count_at_most(const Eigen::VectorXd& values, std::span<const LocalIndex> set, double threshold) {
  std::size_t c = 0;
  for (auto x : set) c += values[x] <= threshold;
  return c;
}

ThetaCounts theta_counts(const Eigen::VectorXd& phi, const Eigen::VectorXd& mu, std::span<const LocalIndex> rip,
                         double alpha, int level) {
  if (rip.empty()) throw InputError("no rip points");
  if (alpha <= 0) throw InputError("alpha must be positive");
  const double t = std::sqrt(alpha * level);
  return {count_at_most(phi, rip, t), count_at_most(mu, rip, t)};
}

}  // namespace gsc
