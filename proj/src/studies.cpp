#include "gsc/studies.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gsc/error.hpp"
#include "gsc/graphs.hpp"

namespace gsc {

void StudyPlan::validate() const {
  if (n_min < 0) throw InputError("n_min must be >= 0");
  if (n_max < n_min) throw InputError("n_max must be >= n_min");
  if (pad < 1) throw InputError("pad must be >= 1");
  if (max_ambient_level < 0) throw InputError("max_ambient_level must be >= 0");
  if (k < 0) throw InputError("k must be >= 0");
  if (alpha < 0) throw InputError("alpha must be >= 0");
  if (wall_samples < 2) throw InputError("wall_samples must be >= 2");
  if (rho_hat && !(*rho_hat > 0)) throw InputError("rho_hat must be positive");
  if (rho_level < 2) throw InputError("rho_level must be >= 2");
  for (double e : eps)
    if (!(e > 0)) throw InputError("eps values must be positive");
  for (const auto& c : centres) {
    if (static_cast<int>(c.size()) != spec.dimension()) throw InputError("centre arity does not match the dimension");
    for (double y : c)
      if (y < 0 || y > 1) throw InputError("centres must lie in [0,1]^d");
  }
  if (trials < 1) throw InputError("trials must be >= 1");
  if (refinement < 0) throw InputError("refinement must be >= 0");
  chains.validate();
}

int StudyPlan::ambient_level(int level) const {
  int m = level + pad;
  if (max_ambient_level > 0) m = std::min(m, max_ambient_level);
  return std::max(m, level + 1);
}

void StudyReport::append(const StudyReport& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
  for (const auto& [k, v] : other.environment) environment[k] = v;
}

const ReportRow* StudyReport::find(const std::string& study, int level, const std::string& quantity) const {
  for (const auto& r : rows)
    if (r.study == study && r.level == level && r.quantity == quantity) return &r;
  return nullptr;
}

double plan_rho(const StudyPlan& plan) {
  if (plan.rho_hat) return *plan.rho_hat;
  return estimate_rho(plan.spec, plan.rho_level);
}

namespace {

using Clock = std::chrono::steady_clock;

class Task {
 public:
  Task(const StudyPlan& plan, std::string study, int level, std::uint64_t study_id)
      : plan_(plan), study_(std::move(study)), level_(level),
        seed_(derive_seed(derive_seed(plan.master_seed, study_id), static_cast<std::uint64_t>(level))),
        start_(Clock::now()) {}

  std::uint64_t seed() const { return seed_; }

  void add(StudyReport& report, std::string quantity, double value, double stderr = 0, std::string flags = {}) const {
    double ms = 0;
    if (plan_.record_runtime)
      ms = std::chrono::duration<double, std::milli>(Clock::now() - start_).count();
    report.rows.push_back({study_, plan_.spec.id(), level_, std::move(quantity), value, stderr, std::move(flags),
                           seed_, ms});
  }

 private:
  const StudyPlan& plan_;
  std::string study_;
  int level_;
  std::uint64_t seed_;
  Clock::time_point start_;
};

std::string join_flags(const std::vector<std::string>& flags) {
  std::string out;
  for (const auto& f : flags) {
    if (!out.empty()) out += ';';
    out += f;
  }
  return out;
}

double log_time_factor(const StudyPlan& plan, double rho) {
  return std::log(static_cast<double>(plan.spec.mass()) * rho);
}

PaddedAmbient ambient_for(const StudyPlan& plan, int level) {
  return padded_ambient(plan.spec, level, plan.ambient_level(level) - level);
}

std::string pad_flag(const StudyPlan& plan, int level) {
  const int pad = plan.ambient_level(level) - level;
  return pad == plan.pad ? std::string{} : "pad=" + std::to_string(pad);
}

/// Green diagonal over at most `limit` core vertices (evenly strided).
std::pair<std::vector<double>, bool> core_green_diagonal(const PaddedAmbient& amb, std::size_t limit) {
  std::vector<LocalIndex> pick;
  const std::size_t n = amb.core.size();
  const bool sub = n > limit;
  if (!sub) {
    pick = amb.core;
  } else {
    for (std::size_t i = 0; i < limit; ++i) pick.push_back(amb.core[i * n / limit]);
  }
  return {amb.op.green_diagonal(pick), sub};
}

}  // namespace

// ---------------------------------------------------------------------------

StudyReport capacity_sequence(const StudyPlan& plan) {
  plan.validate();
  StudyReport report;
  const double rho = plan_rho(plan);
  {
    Task t(plan, "capacity_sequence", plan.rho_level, 0);
    t.add(report, "rho_hat", rho, 0, plan.rho_hat ? "given" : "crosswire");
  }
  double lo = INFINITY, hi = 0;
  for (int n = plan.n_min; n <= plan.n_max; ++n) {
    Task t(plan, "capacity_sequence", n, 0);
    const auto amb = ambient_for(plan, n);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(amb.core.size()));
    const double scale = std::pow(rho, n);
    const double a = scale * quad_form_inverse_green(amb.op, amb.core, ones);
    const double b = scale * equilibrium_potential(amb.op, amb.core).capacity;
    const std::string pf = pad_flag(plan, n);
    t.add(report, "inverse_green_form", a, 0, pf);
    t.add(report, "capacity", b, 0, pf);
    const double ratio = a / b;
    t.add(report, "ratio", ratio, 0, std::abs(ratio - 1) <= 1e-8 ? pf : join_flags({pf, "identity_violation"}));
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  Task t(plan, "capacity_sequence", plan.n_max, 0);
  t.add(report, "spread", hi / lo, 0, hi / lo <= 8 ? "sanity_gate_[1/8,8]" : "sanity_gate_[1/8,8];outside");
  return report;
}

StudyReport wall_probability_scaling(const StudyPlan& plan) {
  plan.validate();
  StudyReport report;
  const double rho = plan_rho(plan);
  const double log_t = log_time_factor(plan, rho);
  for (int n = plan.n_min; n <= std::min(plan.n_max, 2); ++n) {
    Task t(plan, "wall_probability", n, 1);
    const auto amb = ambient_for(plan, n);
    const auto [diag, sub] = core_green_diagonal(amb, 4096);
    const double g_max = *std::max_element(diag.begin(), diag.end());
    const double alpha = plan.alpha > 0 ? plan.alpha : 2 * g_max;
    // At N = 0 the default tilt would vanish; use the N = 1 value so the
    // rejection/tilted cross-check is informative.
    const int tilt_level = std::max(n, 1);
    const double a = log_t > 0 ? std::sqrt(alpha * tilt_level * log_t) : 0.0;
    Rng rng(t.seed());
    const auto est = estimate_wall_probability(amb.op, amb.core, a, plan.wall_samples, rng);
    const bool usable = !est.no_hit && est.hits >= 10;
    std::vector<std::string> base{pad_flag(plan, n)};
    base.erase(std::remove(base.begin(), base.end(), std::string{}), base.end());
    if (!usable) base.push_back(est.no_hit ? "unusable;no_hit" : "unusable;few_hits");
    const std::string flags = join_flags(base);

    t.add(report, "tilt", a, 0, flags);
    t.add(report, "log_p_direct", est.log_p_hat, est.log_stderr, flags);
    const double pa = static_cast<double>(est.hits) / static_cast<double>(est.samples);
    const double pa_se = std::sqrt(pa * (1 - pa) / static_cast<double>(est.samples));
    t.add(report, "tilted_hit_fraction", pa, pa_se, flags);
    if (n >= 1) {
      const double norm = std::pow(rho, -n) * n * log_t;
      t.add(report, "rate_ratio", est.log_p_hat / norm, est.log_stderr / norm, flags);
    }
    const double ent = relative_entropy(amb.op, amb.core, a);
    t.add(report, "relative_entropy", ent, 0, flags);
    if (usable) {
      const double c = ent + std::exp(-1.0);
      const double bound = std::log(pa) - c / pa;
      const double bound_se = (1 / pa + c / (pa * pa)) * pa_se;
      t.add(report, "entropy_lower_bound", bound, bound_se, flags);
      const double gap = bound - est.log_p_hat;
      const double gap_se = std::hypot(bound_se, est.log_stderr);
      t.add(report, "bound_minus_direct", gap, gap_se,
            gap <= 3 * gap_se ? flags : join_flags({flags, "bound_exceeds_direct"}));
    }
    if (n == 0) {
      Rng rng0(derive_seed(t.seed(), 1));
      const auto rej = estimate_wall_probability(amb.op, amb.core, 0.0, plan.wall_samples, rng0);
      t.add(report, "log_p_rejection", rej.log_p_hat, rej.log_stderr, rej.no_hit ? "unusable;no_hit" : "");
      if (!rej.no_hit && usable) {
        const double diff = rej.p_hat - est.p_hat;
        const double se = std::hypot(rej.stderr, est.stderr);
        t.add(report, "rejection_minus_tilted", diff, se, std::abs(diff) <= 3 * se ? "" : "disagree");
      }
    }
  }
  return report;
}

StudyReport height_scaling(const StudyPlan& plan) {
  plan.validate();
  StudyReport report;
  const double rho = plan_rho(plan);
  const double log_t = log_time_factor(plan, rho);
  auto centres = plan.centres;
  if (centres.empty()) centres.push_back(std::vector<double>(static_cast<std::size_t>(plan.spec.dimension()), 0.5));
  for (int n = plan.n_min; n <= plan.n_max; ++n) {
    Task t(plan, "height", n, 2);
    const auto amb = ambient_for(plan, n);
    const auto& small = *amb.inner_graph;
    std::vector<Observable> obs;
    const auto core = amb.core;
    obs.push_back({"mean_height", [core](const Eigen::VectorXd& phi) { return set_mean(phi, core); }});
    for (std::size_t c = 0; c < centres.size(); ++c)
      for (double e : plan.eps) {
        std::vector<LocalIndex> set;
        for (auto v : cubic_neighborhood(plan.spec, small, centres[c], e)) set.push_back(core[v]);
        std::ostringstream name;
        name << "phi_bar[c" << c << ",eps=" << e << "]";
        obs.push_back({name.str(), [set](const Eigen::VectorXd& phi) { return set_mean(phi, set); }});
      }
    const auto [diag, sub] = core_green_diagonal(amb, 256);
    const double g_min = *std::min_element(diag.begin(), diag.end());
    const double g_max = *std::max_element(diag.begin(), diag.end());
    const double alpha = plan.alpha > 0 ? plan.alpha : 2 * g_max;
    std::shared_ptr<const ConditionalDecomposer> dec;
    if (n > plan.k) {
      const auto x0 = plan.x0 ? *plan.x0 : default_x0(plan.spec, plan.k);
      const auto cs = coarse_sets(plan.spec, small, plan.k, x0, x0);
      std::vector<VertexId> grid, rip;
      for (auto v : cs.grid) grid.push_back(v);
      for (auto v : cs.rip) rip.push_back(v);
      std::vector<LocalIndex> grid_l, rip_l;
      for (auto v : grid) grid_l.push_back(core[v]);
      for (auto v : rip) rip_l.push_back(core[v]);
      const double size = static_cast<double>(rip_l.size());
      obs.push_back({"theta_fraction", [rip_l, alpha, n, size](const Eigen::VectorXd& phi) {
                       return static_cast<double>(count_at_most(phi, rip_l, std::sqrt(alpha * n))) / size;
                     }});
      if (cs.separated) {
        dec = std::make_shared<const ConditionalDecomposer>(amb.op, grid_l, rip_l);
        obs.push_back({"theta_bar_fraction", [dec, rip_l, alpha, n, size](const Eigen::VectorXd& phi) {
                         const auto parts = (*dec)(phi);
                         return static_cast<double>(count_at_most(parts.mu, rip_l, std::sqrt(alpha * n))) / size;
                       }});
      }
    }
    ChainConfig cfg = plan.chains;
    cfg.master_seed = t.seed();
    const auto stats = gibbs_hard_wall(amb.op, amb.core, cfg, obs);
    const double reference = std::sqrt(2 * g_min);
    std::vector<std::string> base;
    if (auto pf = pad_flag(plan, n); !pf.empty()) base.push_back(pf);
    if (stats.max_rhat() > 1.1) base.push_back("rhat>1.1");
    const std::string flags = join_flags(base);
    for (const auto& o : stats.observables) {
      t.add(report, o.name, o.mean, o.stderr, flags);
      if (n >= 1 && log_t > 0 && !o.name.starts_with("theta")) {
        const double norm = std::sqrt(n * log_t);
        t.add(report, o.name + "/sqrt(N log t)", o.mean / norm, o.stderr / norm, flags);
      }
    }
    const auto& mh = stats.observables.front();
    t.add(report, "z_mean_height", mh.stderr > 0 ? mh.mean / mh.stderr : 0.0, 0, flags);
    t.add(report, "max_rhat", stats.max_rhat(), 0, flags);
    t.add(report, "sqrt(2 G_min)", reference, 0, sub ? join_flags({flags, "G_min_subsampled"}) : flags);
  }
  return report;
}

StudyReport green_form_convergence(const StudyPlan& plan) {
  plan.validate();
  StudyReport report;
  const double rho = plan_rho(plan);
  const auto h = [&plan](std::span<const double> y) {
    return plan.density == Density::Constant ? 1.0 : 1.0 + y[0];
  };
  double previous = 0;
  for (int n = plan.n_min; n <= plan.n_max; ++n) {
    Task t(plan, "green_form", n, 3);
    const auto inner = std::make_shared<const LatticeGraph>(build_inner_graph(plan.spec, n));
    const auto op = DirichletOperator::whole(inner);
    const int m = n + plan.refinement;
    const auto projected = mean_value_operator(plan.spec, n, m, sample_at_centers(plan.spec, m, h));
    std::vector<LocalIndex> all(static_cast<std::size_t>(op.size()));
    for (LocalIndex i = 0; i < op.size(); ++i) all[static_cast<std::size_t>(i)] = i;
    const double g = green_form(op, all, projected, rho, n);
    t.add(report, "g_N", g);
    if (n > plan.n_min) {
      const double r = g / previous;
      t.add(report, "ratio", r, 0, r >= 0.125 && r <= 8 ? "sanity_gate_[1/8,8]" : "sanity_gate_[1/8,8];outside");
    }
    previous = g;
  }
  return report;
}

StudyReport comparison_audit(const StudyPlan& plan) {
  plan.validate();
  StudyReport report;
  const int d = plan.spec.dimension();
  const double factor = std::pow(2.0, 2 * d);
  for (int n = plan.n_min; n <= plan.n_max; ++n) {
    Task t(plan, "comparison_audit", n, 4);
    Rng rng(t.seed());
    std::uniform_real_distribution<double> u01(0, 1);
    const auto outer = std::make_shared<const LatticeGraph>(build_outer_graph(plan.spec, n));
    const auto inner = std::make_shared<const LatticeGraph>(build_inner_graph(plan.spec, n));
    const auto outer_up = build_outer_graph(plan.spec, n + 1);
    const auto inner_up = build_inner_graph(plan.spec, n + 1);
    std::vector<VertexId> embed(outer->size());
    for (VertexId v = 0; v < outer->size(); ++v) embed[v] = *outer_up.find(outer->coord(v));

    // Nonnegative test functions on V_N: constants, i.i.d. uniforms, sparse
    // point masses, and exponentials of random affine functions.
    const auto nv = static_cast<Eigen::Index>(outer->size());
    Eigen::MatrixXd f(nv, plan.trials);
    for (int k = 0; k < plan.trials; ++k) {
      auto col = f.col(k);
      switch (k % 4) {
        case 0:
          if (k == 0) {
            col.setOnes();
          } else {
            for (Eigen::Index i = 0; i < nv; ++i) col[i] = u01(rng);
          }
          break;
        case 1: {
          col.setZero();
          const int masses = 1 + static_cast<int>(u01(rng) * 3);
          for (int j = 0; j < masses; ++j) {
            const auto at = std::min<Eigen::Index>(static_cast<Eigen::Index>(u01(rng) * static_cast<double>(nv)), nv - 1);
            col[at] += u01(rng) + 0.1;
          }
          break;
        }
        case 2: {
          std::vector<double> w(static_cast<std::size_t>(d));
          for (auto& x : w) x = 4 * (u01(rng) - 0.5);
          const double side = static_cast<double>(ipow(plan.spec.length_scale(), n));
          for (VertexId v = 0; v < outer->size(); ++v) {
            double s = 0;
            for (int i = 0; i < d; ++i)
              s += w[static_cast<std::size_t>(i)] * static_cast<double>(outer->coord(v)[static_cast<std::size_t>(i)]) / side;
            col[static_cast<Eigen::Index>(v)] = std::exp(s);
          }
          break;
        }
        default:
          for (Eigen::Index i = 0; i < nv; ++i) col[i] = u01(rng) < 0.3 ? u01(rng) : 0.0;
      }
    }

    int energy_violations = 0;
    double energy_slack = INFINITY;
    for (int k = 0; k < plan.trials; ++k) {
      Eigen::VectorXd up = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(outer_up.size()));
      for (VertexId v = 0; v < outer->size(); ++v) up[embed[v]] = f(v, k);
      const double lhs = dirichlet_energy(outer_up, up, false);
      const double rhs = dirichlet_energy(inner_up, project_to_inner(outer_up, inner_up, up), false);
      if (rhs > lhs * (1 + 1e-12) + 1e-300) ++energy_violations;
      if (lhs > 0) energy_slack = std::min(energy_slack, (lhs - rhs) / lhs);
    }

    const auto go = DirichletOperator::whole(outer);
    const auto gi = DirichletOperator::whole(inner);
    Eigen::MatrixXd q(static_cast<Eigen::Index>(inner->size()), plan.trials);
    for (int k = 0; k < plan.trials; ++k) q.col(k) = project_to_inner(*outer, *inner, f.col(k));
    const Eigen::MatrixXd gf = go.factor().solve(f);
    const Eigen::MatrixXd gq = gi.factor().solve(q);
    int green_violations = 0;
    double green_slack = INFINITY;
    for (int k = 0; k < plan.trials; ++k) {
      const double lhs = f.col(k).dot(gf.col(k));
      const double rhs = factor * q.col(k).dot(gq.col(k));
      if (lhs > rhs * (1 + 1e-12)) ++green_violations;
      if (rhs > 0) green_slack = std::min(green_slack, (rhs - lhs) / rhs);
    }
    t.add(report, "trials", plan.trials);
    t.add(report, "energy_violations", energy_violations, 0, energy_violations ? "violation" : "");
    t.add(report, "energy_worst_slack", energy_slack);
    t.add(report, "green_violations", green_violations, 0, green_violations ? "violation" : "");
    t.add(report, "green_worst_slack", green_slack);
  }
  return report;
}

StudyReport run_all_studies(const StudyPlan& plan) {
  StudyReport report;
  report.append(capacity_sequence(plan));
  report.append(green_form_convergence(plan));
  report.append(comparison_audit(plan));
  report.append(wall_probability_scaling(plan));
  report.append(height_scaling(plan));
  return report;
}

}  // namespace gsc
