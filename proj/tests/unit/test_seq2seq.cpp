#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "sdec/seq2seq.hpp"

using namespace sdec;

namespace {

std::vector<double> values(Var v) { return {v.value().begin(), v.value().end()}; }

ModelShape tiny_shape(AttentionMode mode = AttentionMode::learned, bool bidi = true) {
  ModelShape s;
  s.source_vocab = 5;
  s.target_vocab = 5;
  s.embed = 4;
  s.hidden = 4;
  s.attention_units = 3;
  s.bidirectional = bidi;
  s.attention = mode;
  return s;
}

Model zero_model(const ModelShape& shape) {
  Rng rng(1);
  Model m = Model::init(shape, rng);
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    for (double& v : m.params.tensor(i).data) v = 0.0;
  }
  return m;
}

}  // namespace

TEST_CASE("LSTM cell closed forms with zero parameters") {
  Tape tape;
  const LstmCellParams p{tape.constant(std::vector<double>(4 * 2 * 5, 0.0), 8, 5),
                         tape.constant(std::vector<double>(8, 0.0), 8)};
  const Var x = tape.constant({0.3, -0.2, 0.9});
  const LstmState zero = zero_state(tape, 2);
  const LstmState a = lstm_cell(x, zero, p);
  CHECK(values(a.h) == std::vector<double>{0, 0});
  CHECK(values(a.c) == std::vector<double>{0, 0});

  const LstmState prev{tape.constant({0.0, 0.0}), tape.constant({1.2, -0.6})};
  const LstmState b = lstm_cell(x, prev, p);
  CHECK(values(b.c)[0] == doctest::Approx(0.6));
  CHECK(values(b.c)[1] == doctest::Approx(-0.3));
  CHECK(values(b.h)[0] == doctest::Approx(0.5 * std::tanh(0.6)));
  CHECK(values(b.h)[1] == doctest::Approx(0.5 * std::tanh(-0.3)));

  const LstmCellParams bad{tape.constant(std::vector<double>(8 * 4, 0.0), 8, 4), p.bias};
  CHECK_THROWS_AS(lstm_cell(x, zero, bad), ShapeError);
}

TEST_CASE("LSTM cell gate order: input, forget, output, candidate") {
  // Hidden size 1, empty effective input: only biases matter.
  Tape tape;
  const double bi = 0.3, bf = -0.4, bo = 1.1, bg = 0.7;
  const LstmCellParams p{tape.constant(std::vector<double>(4 * 2, 0.0), 4, 2),
                         tape.constant({bi, bf, bo, bg})};
  const LstmState prev{tape.constant({0.0}), tape.constant({0.8})};
  const LstmState s = lstm_cell(tape.constant({0.0}), prev, p);
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  const double c = sig(bf) * 0.8 + sig(bi) * std::tanh(bg);
  CHECK(s.c.scalar() == doctest::Approx(c).epsilon(1e-14));
  CHECK(s.h.scalar() == doctest::Approx(sig(bo) * std::tanh(c)).epsilon(1e-14));
}

TEST_CASE("LSTM cell gradient of |h|^2 matches finite differences") {
  Rng rng(4);
  std::vector<double> w(4 * 3 * 5), b(12), x(2), h0(3), c0(3);
  for (auto* v : {&w, &b, &x, &h0, &c0}) {
    for (double& e : *v) e = rng.uniform(-1, 1);
  }
  auto f = [&](bool grads, std::vector<double>* gw) {
    Tape tape;
    const LstmCellParams p{tape.variable(w, 12, 5), tape.variable(b, 12)};
    const LstmState s = lstm_cell(tape.constant(x, 2), {tape.constant(h0, 3), tape.constant(c0, 3)}, p);
    const Var out = ad::dot(s.h, s.h);
    if (grads) {
      tape.backward(out);
      gw->assign(p.weights.grad().begin(), p.weights.grad().end());
      gw->insert(gw->end(), p.bias.grad().begin(), p.bias.grad().end());
    }
    return out.scalar();
  };
  std::vector<double> g;
  f(true, &g);
  for (std::size_t j = 0; j < w.size() + b.size(); ++j) {
    double& v = j < w.size() ? w[j] : b[j - w.size()];
    const double keep = v;
    v = keep + 1e-5;
    const double up = f(false, nullptr);
    v = keep - 1e-5;
    const double dn = f(false, nullptr);
    v = keep;
    CHECK(relative_error(g[j], (up - dn) / 2e-5, 1e-4) <= 1e-4);
  }
}

TEST_CASE("model shapes and parameter inventory") {
  Rng rng(2);
  const Model learned = Model::init(tiny_shape(), rng);
  CHECK(learned.params.find(param::kAttnV).has_value());
  CHECK(learned.params.find(param::kEncBwdW).has_value());
  CHECK(learned.params.at(param::kDecW).cols == 4 + 8 + 4);
  CHECK(learned.params.at(param::kOutW).cols == 4 + 8);

  const Model fixed = Model::init(tiny_shape(AttentionMode::fixed, false), rng);
  CHECK_FALSE(fixed.params.find(param::kAttnV).has_value());
  CHECK_FALSE(fixed.params.find(param::kEncBwdW).has_value());
  CHECK(fixed.params.at(param::kDecW).cols == 4 + 4 + 4);

  const Model none = Model::init(tiny_shape(AttentionMode::none), rng);
  CHECK(none.params.at(param::kOutW).cols == 4);

  for (std::size_t i = 0; i < learned.params.size(); ++i) {
    for (double v : learned.params.tensor(i).data) CHECK(std::abs(v) <= 0.08);
  }
  ModelShape bad = tiny_shape();
  bad.hidden = 0;
  CHECK_THROWS(bad.validate());
  CHECK(parse_attention_mode("fixed") == AttentionMode::fixed);
  CHECK_THROWS(parse_attention_mode("global"));
}

TEST_CASE("ParamSet flatten and assign round trip") {
  Rng rng(3);
  Model m = Model::init(tiny_shape(), rng);
  std::vector<double> flat = m.params.flatten();
  CHECK(flat.size() == m.params.total_size());
  for (double& v : flat) v += 1.0;
  m.params.assign_flat(flat);
  CHECK(m.params.flatten() == flat);
  CHECK_THROWS(m.params.assign_flat(std::vector<double>(3, 0.0)));
}

TEST_CASE("encoder") {
  Rng rng(5);
  const Model m = Model::init(tiny_shape(), rng, 0.5);
  Tape tape;
  const BoundParams p = bind(tape, m, false);

  SUBCASE("length-1 source is one cell application per direction") {
    const std::vector<int> src = {3};
    const EncoderOutput enc = encode(src, p);
    REQUIRE(enc.states.size() == 1);
    CHECK(enc.states[0].size() == 8);
    const Var x = ad::row(p.source_embed, 3);
    const LstmState f = lstm_cell(x, zero_state(tape, 4), p.enc_fwd);
    const LstmState b = lstm_cell(x, zero_state(tape, 4), *p.enc_bwd);
    const auto s = values(enc.states[0]);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(s[i] == values(f.h)[i]);
      CHECK(s[4 + i] == values(b.h)[i]);
    }
  }
  SUBCASE("reversing the input reverses the backward component order") {
    const std::vector<int> src = {3, 4, 1, 2};
    const std::vector<int> rev(src.rbegin(), src.rend());
    const EncoderOutput a = encode(src, p);
    const EncoderOutput b = encode(rev, p);
    // Backward half on src equals forward run on reversed input, read backwards.
    Tape t2;
    Model swapped = m;
    swapped.params.at(param::kEncFwdW) = m.params.at(param::kEncBwdW);
    swapped.params.at(param::kEncFwdB) = m.params.at(param::kEncBwdB);
    const BoundParams q = bind(t2, swapped, false);
    const EncoderOutput c = encode(rev, q);
    for (std::size_t i = 0; i < src.size(); ++i) {
      const auto bwd = values(a.states[i]);
      const auto fwd = values(c.states[src.size() - 1 - i]);
      for (std::size_t k = 0; k < 4; ++k) CHECK(bwd[4 + k] == doctest::Approx(fwd[k]).epsilon(1e-15));
    }
    CHECK(b.states.size() == 4);
  }
  SUBCASE("unknown token id") {
    const std::vector<int> src = {3, 9};
    CHECK_THROWS(encode(src, p));
    CHECK_THROWS(encode(std::vector<int>{}, p));
  }
}

TEST_CASE("attention modes") {
  Rng rng(6);
  SUBCASE("learned attention on one state puts weight 1 on it") {
    const Model m = Model::init(tiny_shape(), rng, 0.5);
    Tape tape;
    const BoundParams p = bind(tape, m, false);
    const EncoderOutput enc = encode(std::vector<int>{3}, p);
    const AttentionResult a = attend(tape.constant(std::vector<double>(4, 0.2), 4), enc, p, 0);
    CHECK(a.weights.scalar() == 1.0);
    CHECK(values(a.context) == values(enc.states[0]));
  }
  SUBCASE("learned weights sum to one") {
    const Model m = Model::init(tiny_shape(), rng, 0.5);
    Tape tape;
    const BoundParams p = bind(tape, m, false);
    const EncoderOutput enc = encode(std::vector<int>{3, 4, 2}, p);
    const AttentionResult a = attend(tape.constant({0.1, -0.3, 0.5, 0.0}), enc, p, 0);
    double total = 0;
    for (double w : a.weights.value()) total += w;
    CHECK(total == doctest::Approx(1.0));
  }
  SUBCASE("fixed attention returns state i verbatim") {
    const Model m = Model::init(tiny_shape(AttentionMode::fixed), rng, 0.5);
    Tape tape;
    const BoundParams p = bind(tape, m, false);
    const EncoderOutput enc = encode(std::vector<int>{3, 4, 2}, p);
    const Var h = tape.constant(std::vector<double>(4, 0.0), 4);
    CHECK(values(attend(h, enc, p, 2).context) == values(enc.states[2]));
    CHECK_THROWS_AS(attend(h, enc, p, 3), std::out_of_range);
  }
}

TEST_CASE("decoder step") {
  SUBCASE("zero parameters give uniform scores") {
    const Model m = zero_model(tiny_shape());
    Tape tape;
    const BoundParams p = bind(tape, m, false);
    const EncoderOutput enc = encode(std::vector<int>{3, 4}, p);
    const DecoderStepOutput out = decode_step(ad::row(p.target_embed, kSos), initial_decoder_state(enc), enc, p, 0);
    for (double s : out.scores.value()) CHECK(s == 0.0);
  }
  SUBCASE("wrong input width") {
    Rng rng(1);
    const Model m = Model::init(tiny_shape(), rng);
    Tape tape;
    const BoundParams p = bind(tape, m, false);
    const EncoderOutput enc = encode(std::vector<int>{3}, p);
    CHECK_THROWS_AS(decode_step(tape.constant({1.0}), initial_decoder_state(enc), enc, p, 0), ShapeError);
  }
  SUBCASE("full-step gradient matches finite differences") {
    for (AttentionMode mode : {AttentionMode::learned, AttentionMode::fixed, AttentionMode::none}) {
      Rng rng(7);
      Model m = Model::init(tiny_shape(mode), rng, 0.5);
      const std::vector<int> src = {3, 4, 1};
      auto f = [&](const Model& model, std::vector<double>* grad) {
        Tape tape;
        const BoundParams p = bind(tape, model, grad != nullptr);
        const EncoderOutput enc = encode(src, p);
        const DecoderStepOutput o1 = decode_step(ad::row(p.target_embed, kSos), initial_decoder_state(enc), enc, p, 0);
        const DecoderStepOutput o2 = decode_step(ad::row(p.target_embed, 3), o1.state, enc, p, 1);
        const Var loss = ad::sub(ad::log_sum_exp(o2.scores), ad::pick(o2.scores, 2));
        if (grad) {
          tape.backward(loss);
          for (const Var& v : p.vars) grad->insert(grad->end(), v.grad().begin(), v.grad().end());
        }
        return loss.scalar();
      };
      std::vector<double> g;
      f(m, &g);
      const std::vector<double> theta = m.params.flatten();
      Model probe = m;
      const auto numeric = finite_difference_gradient(
          [&](std::span<const double> t) {
            probe.params.assign_flat(t);
            return f(probe, nullptr);
          },
          theta, 1e-5);
      double worst = 0;
      for (std::size_t j = 0; j < theta.size(); ++j) worst = std::max(worst, relative_error(g[j], numeric[j], 1e-4));
      CAPTURE(to_string(mode));
      CHECK(worst <= 1e-4);
    }
  }
}

TEST_CASE("checkpoint round trip is bit-exact") {
  Rng rng(8);
  Model m = Model::init(tiny_shape(), rng, 0.3);
  m.params.at(param::kOutB).data[0] = 0.1 + 0.2;  // not exactly representable in decimal
  m.params.at(param::kOutB).data[1] = -1e-300;
  const std::string path = "seq2seq_roundtrip.ckpt";
  save_checkpoint(path, m);
  const Model back = load_checkpoint(path);
  CHECK(back == m);
  save_checkpoint("seq2seq_roundtrip2.ckpt", back);
  std::ifstream a(path), b("seq2seq_roundtrip2.ckpt");
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().rfind("sdec-checkpoint 1\n", 0) == 0);

  std::ofstream("bad.ckpt") << "not a checkpoint\n";
  CHECK_THROWS(load_checkpoint("bad.ckpt"));
  CHECK_THROWS(load_checkpoint("missing.ckpt"));

  // Truncated file.
  const std::string text = sa.str();
  std::ofstream("truncated.ckpt") << text.substr(0, text.size() / 2);
  CHECK_THROWS(load_checkpoint("truncated.ckpt"));
}
