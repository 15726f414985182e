#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gsc/carpet.hpp"
#include "gsc/gff.hpp"

namespace gsc {

enum class Density { Constant, Linear };

struct StudyPlan {
  CarpetSpec spec = sierpinski_carpet();
  int n_min = 1;
  int n_max = 2;
  int pad = 2;
  /// Largest ambient level to build; N + pad is clamped to it (never below
  /// N + 1). Zero means no clamp.
  int max_ambient_level = 0;
  int k = 1;                               // coarse level
  std::optional<std::vector<Coord>> x0;    // default: default_x0(spec, k)
  ChainConfig chains;
  double alpha = 0;                        // tilt; 0 means 2 * max G(x,x)
  std::uint64_t wall_samples = 20000;
  std::optional<double> rho_hat;           // default: crosswire estimate
  int rho_level = 3;                       // N_max of the crosswire estimate
  std::vector<std::vector<double>> centres;  // default: cube centre
  std::vector<double> eps{0.25, 1.0};
  int trials = 1000;                       // comparison audit
  int refinement = 2;                      // green form quadrature: M = N + refinement
  Density density = Density::Constant;
  std::uint64_t master_seed = 1;
  bool record_runtime = true;              // false: runtime_ms = 0 for byte-identical replay

  /// Throws InputError on an inconsistent plan.
  void validate() const;
  int ambient_level(int level) const;
};

struct ReportRow {
  std::string study;
  std::string spec;
  int level = 0;
  std::string quantity;
  double value = 0;
  double stderr = 0;
  std::string flags;
  std::uint64_t seed = 0;
  double runtime_ms = 0;
};

struct StudyReport {
  std::vector<ReportRow> rows;
  std::map<std::string, std::string> environment;

  void append(const StudyReport& other);
  /// First row with the given study, level and quantity, if any.
  const ReportRow* find(const std::string& study, int level, const std::string& quantity) const;
};

/// Resistance scale factor used by the studies: the plan's value, else the
/// crosswire ratio at rho_level.
double plan_rho(const StudyPlan& plan);

/// rho^N <1, (G^box)^{-1} 1> and rho^N Cap(V_N) in the padded ambient, with
/// their ratio.
StudyReport capacity_sequence(const StudyPlan& plan);

/// Tilted estimates of log P(phi >= 0 on V_N) and the entropy lower bound
/// log P_a(A) - (Ent + 1/e) / P_a(A), for N in the plan range (at most 2).
StudyReport wall_probability_scaling(const StudyPlan& plan);

/// Hard-wall Gibbs heights: local sample means around each centre, the
/// global mean, their normalisation by sqrt(N log t), and sqrt(2 G_min).
StudyReport height_scaling(const StudyPlan& plan);

/// g_N = rho^{-N} m^{-2N} sum G_I(w,w') (P h)(w) (P h)(w') and successive
/// ratios.
StudyReport green_form_convergence(const StudyPlan& plan);

/// Randomized audit of the energy and Green-form comparison inequalities
/// between outer and inner graphs.
StudyReport comparison_audit(const StudyPlan& plan);

/// Every study above, concatenated.
StudyReport run_all_studies(const StudyPlan& plan);

}  // namespace gsc
