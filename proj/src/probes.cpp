#include "sdec/probes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace sdec {

ParamSelector select(const Model& model, std::string_view name, std::size_t offset) {
  const auto idx = model.params.find(name);
  if (!idx) throw std::invalid_argument("unknown parameter '" + std::string(name) + "'");
  const Tensor& t = model.params.tensor(*idx);
  if (offset >= t.size()) {
    throw std::invalid_argument("index " + std::to_string(offset) + " out of range for '" +
                                std::string(name) + "' with " + std::to_string(t.size()) + " entries");
  }
  return {*idx, offset, std::string(name) + "[" + std::to_string(offset) + "]"};
}

ParamSelector parse_selector(const Model& model, std::string_view text) {
  const auto open = text.find('[');
  if (open == std::string_view::npos || text.back() != ']') {
    throw std::invalid_argument("selector '" + std::string(text) + "' must look like name[i] or name[r,c]");
  }
  const std::string name(text.substr(0, open));
  const std::string inside(text.substr(open + 1, text.size() - open - 2));
  const auto idx = model.params.find(name);
  if (!idx) throw std::invalid_argument("unknown parameter '" + name + "' in selector");
  const Tensor& t = model.params.tensor(*idx);
  try {
    const auto comma = inside.find(',');
    std::size_t offset = 0;
    if (comma == std::string::npos) {
      offset = std::stoul(inside);
    } else {
      const std::size_t r = std::stoul(inside.substr(0, comma));
      const std::size_t c = std::stoul(inside.substr(comma + 1));
      if (r >= t.rows || c >= t.cols) throw std::out_of_range("index");
      offset = r * t.cols + c;
    }
    ParamSelector sel = select(model, name, offset);
    sel.text = std::string(text);
    return sel;
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("bad index in selector '" + std::string(text) + "'");
  } catch (const std::out_of_range&) {
    throw std::invalid_argument("index out of range in selector '" + std::string(text) + "'");
  }
}

double get_param(const Model& model, const ParamSelector& sel) {
  return model.params.tensor(sel.param).data.at(sel.offset);
}

void set_param(Model& model, const ParamSelector& sel, double value) {
  model.params.tensor(sel.param).data.at(sel.offset) = value;
}

// ---------------------------------------------------------------------------

GradCheckReport gradient_check(const Model& model, const SequencePair& pair,
                               const RolloutOptions& options, std::uint64_t noise_seed,
                               double step) {
  RolloutRandom rnd = RolloutRandom::from_seed(noise_seed);
  const LossAndGradient analytic = loss_and_gradient(model, pair, options, rnd);

  Model probe = model;
  const std::vector<double> theta = model.params.flatten();
  auto f = [&](std::span<const double> x) {
    probe.params.assign_flat(x);
    return rollout_loss_value(probe, pair, options, noise_seed);
  };
  const std::vector<double> numeric = finite_difference_gradient(f, theta, step);

  GradCheckReport rep;
  rep.loss = analytic.loss;
  rep.checked = theta.size();
  for (std::size_t j = 0; j < theta.size(); ++j) {
    const double e = relative_error(analytic.gradient[j], numeric[j], kGradCheckFloor);
    if (e > rep.max_rel_error || j == 0) {
      rep.max_rel_error = e;
      rep.worst_index = j;
      rep.worst_analytic = analytic.gradient[j];
      rep.worst_numeric = numeric[j];
    }
  }
  std::size_t at = 0;
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    const std::size_t n = model.params.tensor(i).size();
    if (rep.worst_index < at + n) {
      rep.worst_param = model.params.name(i) + "[" + std::to_string(rep.worst_index - at) + "]";
      break;
    }
    at += n;
  }
  return rep;
}

std::size_t choice_at(const Model& model, const SequencePair& pair, const RolloutOptions& options,
                      std::uint64_t noise_seed, std::size_t step_index) {
  Tape tape;
  const BoundParams p = bind(tape, model, false);
  RolloutRandom rnd = RolloutRandom::from_seed(noise_seed);
  const Rollout r = rollout(p, pair, options, rnd);
  return r.steps.at(step_index).model_choice;
}

std::optional<FlipBracket> bracket_choice_flip(const Model& model, const ParamSelector& sel,
                                               double lo, double hi, const SequencePair& pair,
                                               const RolloutOptions& options,
                                               std::uint64_t noise_seed, std::size_t step_index,
                                               double tol) {
  Model m = model;
  auto choice = [&](double theta) {
    set_param(m, sel, theta);
    return choice_at(m, pair, options, noise_seed, step_index);
  };
  FlipBracket b{lo, hi, choice(lo), choice(hi)};
  if (b.choice_lo == b.choice_hi) return std::nullopt;
  while (b.hi - b.lo > tol) {
    const double mid = 0.5 * (b.lo + b.hi);
    if (mid <= b.lo || mid >= b.hi) break;
    const std::size_t c = choice(mid);
    if (c == b.choice_lo) {
      b.lo = mid;
    } else {
      b.hi = mid;
      b.choice_hi = c;
    }
  }
  return b;
}

std::optional<Discontinuity> find_discontinuity(const Model& model, const SequencePair& pair,
                                                const RolloutOptions& options,
                                                std::uint64_t noise_seed, double min_jump) {
  if (pair.target.size() < 2) return std::nullopt;
  Tape tape;
  const BoundParams p = bind(tape, model, false);
  RolloutRandom rnd = RolloutRandom::from_seed(noise_seed);
  const Rollout r = rollout(p, pair, options, rnd);

  Model m = model;
  for (std::size_t k = 0; k + 1 < r.steps.size(); ++k) {
    std::vector<double> s(r.steps[k].out.scores.value().begin(), r.steps[k].out.scores.value().end());
    if (r.steps[k].noise) {
      for (std::size_t i = 0; i < s.size(); ++i) s[i] += r.steps[k].noise->noise[i];
    }
    const std::size_t top = argmax(s);
    std::size_t runner = top == 0 ? 1 : 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i != top && s[i] > s[runner]) runner = i;
    }
    const ParamSelector sel = select(model, param::kOutB, runner);
    const double theta0 = get_param(model, sel);
    const double hi = theta0 + (s[top] - s[runner]) + 1.0;
    const auto bracket = bracket_choice_flip(model, sel, theta0, hi, pair, options, noise_seed, k);
    if (!bracket) continue;
    set_param(m, sel, bracket->lo);
    const double loss_lo = rollout_loss_value(m, pair, options, noise_seed);
    set_param(m, sel, bracket->hi);
    const double loss_hi = rollout_loss_value(m, pair, options, noise_seed);
    set_param(m, sel, theta0);
    if (std::abs(loss_hi - loss_lo) > min_jump) return Discontinuity{sel, *bracket, k, loss_lo, loss_hi};
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

double max_adjacent_jump(const std::vector<double>& values) {
  double m = 0.0;
  for (std::size_t i = 1; i < values.size(); ++i) m = std::max(m, std::abs(values[i] - values[i - 1]));
  return m;
}

double sup_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("sup_distance: curves differ in length");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::string alpha_label(double alpha) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", alpha);
  return buf;
}

SweepResult sweep_line(const Model& model, const ParamSelector& sel, double lo, double hi,
                       std::size_t points, const SequencePair& pair, double eps,
                       const std::vector<double>& alphas, std::uint64_t noise_seed) {
  if (points < 3) throw std::invalid_argument("sweep: need at least 3 grid points");
  if (!(hi > lo)) throw std::invalid_argument("sweep: empty range");
  SweepResult res;
  res.hard.label = "loss_hard";
  for (double a : alphas) {
    Temperature{a};
    res.relaxed.push_back({"loss_alpha_" + alpha_label(a), a, {}, 0.0});
  }
  Model m = model;
  for (std::size_t i = 0; i < points; ++i) {
    const double theta = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    res.theta.push_back(theta);
    set_param(m, sel, theta);
    res.hard.loss.push_back(rollout_loss_value(m, pair, {Regime::ss_hard_greedy, eps, 1.0}, noise_seed));
    for (auto& c : res.relaxed) {
      c.loss.push_back(rollout_loss_value(m, pair, {Regime::relaxed_greedy, eps, c.alpha}, noise_seed));
    }
  }
  res.hard.max_jump = max_adjacent_jump(res.hard.loss);
  for (auto& c : res.relaxed) c.max_jump = max_adjacent_jump(c.loss);
  return res;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << "theta," << result.hard.label;
  for (const auto& c : result.relaxed) out << ',' << c.label;
  out << '\n';
  char buf[40];
  for (std::size_t i = 0; i < result.theta.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", result.theta[i]);
    out << buf;
    std::snprintf(buf, sizeof buf, "%.17g", result.hard.loss[i]);
    out << ',' << buf;
    for (const auto& c : result.relaxed) {
      std::snprintf(buf, sizeof buf, "%.17g", c.loss[i]);
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace sdec
