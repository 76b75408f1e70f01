#include "sdec/relaxation.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sdec {

Temperature::Temperature(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("temperature must be positive and finite, got " +
                                std::to_string(alpha));
  }
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax: empty score vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

namespace {

void check_scores(const char* op, Var scores, Var table) {
  if (scores.size() == 0) throw ShapeError(op, "empty score vector");
  if (scores.cols() != 1) throw ShapeError(op, "scores must be a vector");
  if (table.rows() != scores.size()) {
    throw ShapeError(op, std::to_string(scores.size()) + " scores vs " +
                             std::to_string(table.rows()) + " embedding rows");
  }
  for (double v : scores.value()) {
    if (!std::isfinite(v)) throw NumericError(op, "non-finite score");
  }
}

}  // namespace

ArgmaxEmbedding hard_argmax_embedding(Var scores, Var table) {
  check_scores("hard_argmax_embedding", scores, table);
  const std::size_t idx = argmax(scores.value());
  return {ad::row(table, idx), idx};
}

Var soft_argmax_embedding(Var scores, Temperature alpha, Var table) {
  check_scores("soft_argmax_embedding", scores, table);
  const Var weights = ad::softmax(ad::scale(scores, alpha.alpha()));
  return ad::vecmat(weights, table);
}

Var soft_argmax_embedding(Var scores, Var alpha, Var table) {
  check_scores("soft_argmax_embedding", scores, table);
  Temperature{alpha.scalar()};
  const Var weights = ad::softmax(ad::scale(scores, alpha));
  return ad::vecmat(weights, table);
}

double clamp_uniform(double u) {
  const double lo = std::nextafter(0.0, 1.0);
  const double hi = std::nextafter(1.0, 0.0);
  return u < lo ? lo : (u > hi ? hi : u);
}

double gumbel_transform(double u) { return -std::log(-std::log(clamp_uniform(u))); }

GumbelSample gumbel_noise(Rng& rng, std::size_t n) {
  if (n == 0) throw std::invalid_argument("gumbel_noise: count must be >= 1");
  GumbelSample g;
  g.uniforms.reserve(n);
  g.noise.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = clamp_uniform(rng.uniform());
    g.uniforms.push_back(u);
    g.noise.push_back(gumbel_transform(u));
  }
  return g;
}

Var soft_sample_embedding(Var scores, Temperature alpha, const GumbelSample& g, Var table) {
  check_scores("soft_sample_embedding", scores, table);
  if (g.noise.size() != scores.size()) {
    throw ShapeError("soft_sample_embedding", std::to_string(g.noise.size()) +
                                                  " noise draws for " +
                                                  std::to_string(scores.size()) + " scores");
  }
  Tape& t = *scores.tape();
  const Var noise = t.constant(g.noise, g.noise.size(), 1);
  const Var weights = ad::softmax(ad::scale(ad::add(scores, noise), alpha.alpha()));
  return ad::vecmat(weights, table);
}

std::size_t gumbel_max_index(std::span<const double> scores, const GumbelSample& g) {
  if (g.noise.size() != scores.size()) {
    throw ShapeError("gumbel_max_index", "noise length differs from score length");
  }
  std::vector<double> perturbed(scores.begin(), scores.end());
  for (std::size_t i = 0; i < perturbed.size(); ++i) perturbed[i] += g.noise[i];
  return argmax(perturbed);
}

bool draw_gold(double eps, Rng& rng) {
  if (!(eps >= 0.0 && eps <= 1.0)) {
    throw std::invalid_argument("mixing probability must lie in [0, 1], got " + std::to_string(eps));
  }
  return rng.uniform() < eps;
}

MixedInput mix_step_input(Var gold, Var model, double eps, Rng& rng) {
  if (draw_gold(eps, rng)) return {gold, true};
  return {model, false};
}

}  // namespace sdec
