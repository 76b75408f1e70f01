#pragma once

// Hard and relaxed choices of the embedding fed to the next decoder step.
//
// `scores` is the decoder's score vector over the vocabulary and `table`
// the |V| x d embedding matrix whose row y is e(y).

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "sdec/autodiff.hpp"
#include "sdec/rng.hpp"

namespace sdec {

/// Peaked-softmax temperature; always strictly positive.
class Temperature {
 public:
  explicit Temperature(double alpha);
  double alpha() const { return alpha_; }

 private:
  double alpha_;
};

/// Index of the maximum entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

struct ArgmaxEmbedding {
  Var embedding;
  std::size_t index = 0;
};

/// e(argmax s). The choice carries no gradient to the scores; the table row
/// is an ordinary lookup.
ArgmaxEmbedding hard_argmax_embedding(Var scores, Var table);

/// Sum_y e(y) softmax(alpha * s)_y, differentiable in scores and table.
Var soft_argmax_embedding(Var scores, Temperature alpha, Var table);
/// Same, with alpha as a scalar node so it can receive a gradient.
Var soft_argmax_embedding(Var scores, Var alpha, Var table);

struct GumbelSample {
  std::vector<double> uniforms;  // clamped U draws
  std::vector<double> noise;     // -log(-log U)
};

/// -log(-log u) after clamping u into [nextafter(0,1), nextafter(1,0)].
double gumbel_transform(double u);
double clamp_uniform(double u);

GumbelSample gumbel_noise(Rng& rng, std::size_t n);

/// Sum_y e(y) softmax(alpha * (s + G))_y. The noise enters as a constant.
Var soft_sample_embedding(Var scores, Temperature alpha, const GumbelSample& g, Var table);

/// Exact categorical sample from softmax(s): argmax(s + G).
std::size_t gumbel_max_index(std::span<const double> scores, const GumbelSample& g);

struct MixedInput {
  Var embedding;
  bool gold = false;
};

/// One Bernoulli(eps) draw: true means feed the gold token.
bool draw_gold(double eps, Rng& rng);

MixedInput mix_step_input(Var gold, Var model, double eps, Rng& rng);

/// Lazy variant: `make_model` is only invoked on the model branch.
template <typename MakeModel>
MixedInput mix_step_input_lazy(Var gold, MakeModel&& make_model, double eps, Rng& rng) {
  if (draw_gold(eps, rng)) return {gold, true};
  return {std::forward<MakeModel>(make_model)(), false};
}

}  // namespace sdec
