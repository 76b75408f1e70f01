#pragma once

// Gradient verification and loss-landscape probes along one parameter.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "sdec/training.hpp"

namespace sdec {

/// One scalar parameter, written "name[i]" (flat index) or "name[r,c]".
struct ParamSelector {
  std::size_t param = 0;
  std::size_t offset = 0;
  std::string text;
};

ParamSelector parse_selector(const Model& model, std::string_view text);
ParamSelector select(const Model& model, std::string_view name, std::size_t offset);
double get_param(const Model& model, const ParamSelector& sel);
void set_param(Model& model, const ParamSelector& sel, double value);

/// Relative errors below this denominator are measured absolutely.
inline constexpr double kGradCheckFloor = 1e-4;

struct GradCheckReport {
  double loss = 0.0;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::string worst_param;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

/// Analytic gradient of the rollout loss against central differences over
/// every parameter, with rollout randomness fixed by `noise_seed`.
GradCheckReport gradient_check(const Model& model, const SequencePair& pair,
                               const RolloutOptions& options, std::uint64_t noise_seed,
                               double step = 1e-5);

/// Model choice at `step_index` (argmax of s, or of s + G for sample
/// regimes) in the rollout at the given options.
std::size_t choice_at(const Model& model, const SequencePair& pair, const RolloutOptions& options,
                      std::uint64_t noise_seed, std::size_t step_index);

struct FlipBracket {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t choice_lo = 0;
  std::size_t choice_hi = 0;
};

/// Bisects [lo, hi] on `sel` until the interval around a change of the
/// step-`step_index` choice is at most `tol` wide. Empty when the choice
/// is the same at both ends.
std::optional<FlipBracket> bracket_choice_flip(const Model& model, const ParamSelector& sel,
                                               double lo, double hi, const SequencePair& pair,
                                               const RolloutOptions& options,
                                               std::uint64_t noise_seed, std::size_t step_index,
                                               double tol = 1e-9);

struct Discontinuity {
  ParamSelector selector;
  FlipBracket bracket;
  std::size_t step_index = 0;
  double loss_lo = 0.0;
  double loss_hi = 0.0;
};

/// Searches output-bias lines that promote the runner-up token of each
/// step until a choice flip with a loss jump above `min_jump` is bracketed.
std::optional<Discontinuity> find_discontinuity(const Model& model, const SequencePair& pair,
                                                const RolloutOptions& options,
                                                std::uint64_t noise_seed, double min_jump = 1e-6);

struct SweepCurve {
  std::string label;
  double alpha = 0.0;  // 0 for the hard curve
  std::vector<double> loss;
  double max_jump = 0.0;
};

struct SweepResult {
  std::vector<double> theta;
  SweepCurve hard;
  std::vector<SweepCurve> relaxed;
};

/// Evaluates SS-hard-greedy and relaxed-greedy (one curve per alpha) on an
/// evenly spaced grid of `points` values of `sel` in [lo, hi].
SweepResult sweep_line(const Model& model, const ParamSelector& sel, double lo, double hi,
                       std::size_t points, const SequencePair& pair, double eps,
                       const std::vector<double>& alphas, std::uint64_t noise_seed);

double max_adjacent_jump(const std::vector<double>& values);
double sup_distance(const std::vector<double>& a, const std::vector<double>& b);

/// Header "theta,loss_hard,loss_alpha_<v>..." then one row per grid point.
void write_sweep_csv(std::ostream& out, const SweepResult& result);
std::string alpha_label(double alpha);

}  // namespace sdec
