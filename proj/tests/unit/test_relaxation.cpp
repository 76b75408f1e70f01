#include <doctest.h>

#include <cmath>
#include <vector>

#include "sdec/relaxation.hpp"

using namespace sdec;

namespace {

std::vector<double> values(Var v) { return {v.value().begin(), v.value().end()}; }

}  // namespace

TEST_CASE("argmax picks the first maximum") {
  CHECK(argmax(std::vector<double>{0.1, 0.9, 0.3}) == 1);
  CHECK(argmax(std::vector<double>{0.5, 0.5}) == 0);
  CHECK_THROWS(argmax(std::vector<double>{}));

  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(7);
    for (double& v : s) v = rng.uniform(-3, 3);
    std::size_t best = 0;
    for (std::size_t i = 1; i < s.size(); ++i) best = s[i] > s[best] ? i : best;
    CHECK(argmax(s) == best);
  }
}

TEST_CASE("hard argmax embedding is a row lookup with no score gradient") {
  Tape tape;
  const Var s = tape.variable({0.1, 0.9, 0.3});
  const Var e = tape.variable({1, 0, 0, 0, 1, 0, 0, 0, 1}, 3, 3);
  const ArgmaxEmbedding h = hard_argmax_embedding(s, e);
  CHECK(h.index == 1);
  CHECK(values(h.embedding) == std::vector<double>{0, 1, 0});
  tape.backward(ad::sum(h.embedding));
  for (double g : s.grad()) CHECK(g == 0.0);
  CHECK(e.grad()[3] == 1.0);
  CHECK(e.grad()[0] == 0.0);
}

TEST_CASE("soft argmax embedding") {
  Tape tape;
  const Var table = tape.constant({1, 0, 0, 1}, 2, 2);
  const Var s = tape.constant({2.0, 1.0});
  const auto e1 = values(soft_argmax_embedding(s, Temperature(1.0), table));
  CHECK(e1[0] == doctest::Approx(0.7310585786300049).epsilon(1e-14));
  CHECK(e1[1] == doctest::Approx(0.2689414213699951).epsilon(1e-14));

  const auto e50 = values(soft_argmax_embedding(s, Temperature(50.0), table));
  CHECK(std::abs(e50[0] - 1.0) <= 1e-12);
  CHECK(std::abs(e50[1]) <= 1e-12);

  const auto tiny = values(soft_argmax_embedding(s, Temperature(1e-12), table));
  CHECK(tiny[0] == doctest::Approx(0.5));
  CHECK(tiny[1] == doctest::Approx(0.5));

  CHECK_THROWS(Temperature(0.0));
  CHECK_THROWS(Temperature(-1.0));
  CHECK_THROWS(Temperature(INFINITY));
  CHECK_THROWS_AS(soft_argmax_embedding(tape.constant({1.0, NAN}), Temperature(1.0), table), NumericError);
  CHECK_THROWS_AS(soft_argmax_embedding(tape.constant({1.0, 2.0, 3.0}), Temperature(1.0), table), ShapeError);
}

TEST_CASE("soft argmax is differentiable in scores, table and alpha") {
  auto eval = [](std::vector<double> s, std::vector<double> e, double alpha, bool grads,
                 std::vector<double>* gs, std::vector<double>* ge, double* ga) {
    Tape tape;
    const Var sv = tape.variable(s, s.size());
    const Var ev = tape.variable(e, s.size(), 2);
    const Var av = tape.variable({alpha});
    const Var out = soft_argmax_embedding(sv, av, ev);
    const Var f = ad::dot(out, tape.constant({0.7, -1.3}));
    if (grads) {
      tape.backward(f);
      *gs = {sv.grad().begin(), sv.grad().end()};
      *ge = {ev.grad().begin(), ev.grad().end()};
      *ga = av.grad()[0];
    }
    return f.scalar();
  };
  const std::vector<double> s = {0.4, -0.2, 1.1};
  const std::vector<double> e = {0.5, -1.0, 2.0, 0.3, -0.7, 1.2};
  std::vector<double> gs, ge;
  double ga = 0;
  eval(s, e, 1.7, true, &gs, &ge, &ga);
  const double h = 1e-6;
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto up = s, dn = s;
    up[i] += h;
    dn[i] -= h;
    CHECK(gs[i] == doctest::Approx((eval(up, e, 1.7, false, 0, 0, 0) - eval(dn, e, 1.7, false, 0, 0, 0)) / (2 * h)).epsilon(1e-6));
  }
  for (std::size_t i = 0; i < e.size(); ++i) {
    auto up = e, dn = e;
    up[i] += h;
    dn[i] -= h;
    CHECK(ge[i] == doctest::Approx((eval(s, up, 1.7, false, 0, 0, 0) - eval(s, dn, 1.7, false, 0, 0, 0)) / (2 * h)).epsilon(1e-6));
  }
  CHECK(ga == doctest::Approx((eval(s, e, 1.7 + h, false, 0, 0, 0) - eval(s, e, 1.7 - h, false, 0, 0, 0)) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("soft argmax is continuous across a score flip, hard argmax jumps") {
  auto soft = [](double x, double alpha) {
    Tape tape;
    const Var table = tape.constant({1, 0, 0, 1}, 2, 2);
    return values(soft_argmax_embedding(tape.constant({x, 0.0}), Temperature(alpha), table))[0];
  };
  auto hard = [](double x) {
    Tape tape;
    const Var table = tape.constant({1, 0, 0, 1}, 2, 2);
    return values(hard_argmax_embedding(tape.constant({x, 0.0}), table).embedding)[0];
  };
  for (double alpha : {1.0, 5.0}) {
    auto max_jump = [&](int points, auto&& f) {
      double m = 0, prev = f(-1.0);
      for (int i = 1; i < points; ++i) {
        const double v = f(-1.0 + 2.0 * i / (points - 1));
        m = std::max(m, std::abs(v - prev));
        prev = v;
      }
      return m;
    };
    const double coarse = max_jump(100, [&](double x) { return soft(x, alpha); });
    const double fine = max_jump(1000, [&](double x) { return soft(x, alpha); });
    CHECK(coarse / fine > 5.0);
    CHECK(max_jump(1000, hard) == 1.0);
  }
}

TEST_CASE("Gumbel transform") {
  CHECK(gumbel_transform(std::exp(-1.0)) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(gumbel_transform(std::exp(-std::exp(1.0))) == doctest::Approx(-1.0));
  CHECK(gumbel_transform(0.5) == doctest::Approx(0.36651292058166435).epsilon(1e-14));
  CHECK(std::isfinite(gumbel_transform(0.0)));
  CHECK(std::isfinite(gumbel_transform(1.0)));
  CHECK(clamp_uniform(0.0) > 0.0);
  CHECK(clamp_uniform(1.0) < 1.0);

  Rng rng(42, Stream::gumbel);
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += gumbel_noise(rng, 1).noise[0];
  CHECK(std::abs(sum / n - 0.5772156649) <= 0.02);
}

TEST_CASE("soft sample embedding") {
  Tape tape;
  const Var table = tape.constant({1, 0, 0, 1}, 2, 2);
  const Var s = tape.constant({1.0, 1.0});
  const GumbelSample g{{0.5, std::exp(-1.0)}, {0.3665, 0.0}};
  const auto e = values(soft_sample_embedding(s, Temperature(1.0), g, table));
  CHECK(e[0] == doctest::Approx(0.5906129850950715).epsilon(1e-12));
  CHECK(e[1] == doctest::Approx(0.4093870149049285).epsilon(1e-12));

  const GumbelSample zero{{}, {0.0, 0.0}};
  const Var s2 = tape.constant({0.3, -0.8});
  CHECK(values(soft_sample_embedding(s2, Temperature(2.0), zero, table)) ==
        values(soft_argmax_embedding(s2, Temperature(2.0), table)));
  CHECK_THROWS_AS(soft_sample_embedding(s2, Temperature(1.0), GumbelSample{{}, {0.0}}, table), ShapeError);
}

TEST_CASE("soft sample gradient equals soft argmax gradient at shifted scores") {
  Rng rng(1, Stream::gumbel);
  const GumbelSample g = gumbel_noise(rng, 3);
  const std::vector<double> s = {0.2, 0.1, -0.3};
  const std::vector<double> e = {1, 0, 0, 1, 1, 1};

  Tape a;
  const Var sa = a.variable(s, 3);
  a.backward(ad::dot(soft_sample_embedding(sa, Temperature(2.0), g, a.constant(e, 3, 2)), a.constant({1.0, -2.0})));

  Tape b;
  std::vector<double> shifted = s;
  for (std::size_t i = 0; i < 3; ++i) shifted[i] += g.noise[i];
  const Var sb = b.variable(shifted, 3);
  b.backward(ad::dot(soft_argmax_embedding(sb, Temperature(2.0), b.constant(e, 3, 2)), b.constant({1.0, -2.0})));
  for (std::size_t i = 0; i < 3; ++i) CHECK(sa.grad()[i] == doctest::Approx(sb.grad()[i]).epsilon(1e-12));
}

TEST_CASE("Gumbel-max sampling follows softmax") {
  const std::vector<double> s = {0.5, -1.0, 2.0, 0.0, 1.0, -0.5, 0.3, 1.5, -2.0, 0.8};
  std::vector<double> p(s.size());
  double z = 0;
  for (std::size_t i = 0; i < s.size(); ++i) z += p[i] = std::exp(s[i]);
  Rng rng(9, Stream::gumbel);
  std::vector<int> count(s.size(), 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++count[gumbel_max_index(s, gumbel_noise(rng, s.size()))];
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(count[i] / double(n) - p[i] / z) <= 0.01);
}

TEST_CASE("gold mixing draws") {
  Rng rng(5, Stream::mixing);
  for (int i = 0; i < 100; ++i) {
    CHECK(draw_gold(1.0, rng));
    CHECK_FALSE(draw_gold(0.0, rng));
  }
  int gold = 0;
  for (int i = 0; i < 10000; ++i) gold += draw_gold(0.5, rng);
  CHECK(gold >= 4800);
  CHECK(gold <= 5200);
  CHECK_THROWS(draw_gold(1.5, rng));
  CHECK_THROWS(draw_gold(-0.1, rng));

  Tape tape;
  const Var g = tape.constant({1.0});
  const Var m = tape.constant({2.0});
  CHECK(mix_step_input(g, m, 1.0, rng).gold);
  CHECK(mix_step_input(g, m, 0.0, rng).embedding.id() == m.id());

  bool called = false;
  const MixedInput lazy = mix_step_input_lazy(g, [&] { called = true; return m; }, 1.0, rng);
  CHECK(lazy.gold);
  CHECK_FALSE(called);
}
