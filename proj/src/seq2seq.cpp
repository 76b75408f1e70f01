#include "sdec/seq2seq.hpp"

#include <stdexcept>

namespace sdec {

std::string_view to_string(AttentionMode mode) {
  switch (mode) {
    case AttentionMode::learned: return "learned";
    case AttentionMode::fixed: return "fixed";
    case AttentionMode::none: return "none";
  }
  return "?";
}

AttentionMode parse_attention_mode(std::string_view name) {
  if (name == "learned") return AttentionMode::learned;
  if (name == "fixed") return AttentionMode::fixed;
  if (name == "none") return AttentionMode::none;
  throw std::invalid_argument("unknown attention mode '" + std::string(name) +
                              "' (expected learned, fixed or none)");
}

void ModelShape::validate() const {
  if (source_vocab == 0 || target_vocab == 0) throw std::invalid_argument("model: empty vocabulary");
  if (embed == 0 || hidden == 0) throw std::invalid_argument("model: embed and hidden must be >= 1");
  if (attention == AttentionMode::learned && attention_units == 0) {
    throw std::invalid_argument("model: learned attention needs attention_units >= 1");
  }
}

// ---------------------------------------------------------------------------

void ParamSet::add(std::string name, Tensor t) {
  if (find(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  entries_.emplace_back(std::move(name), std::move(t));
}

std::optional<std::size_t> ParamSet::find(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].first == name) return i;
  }
  return std::nullopt;
}

Tensor& ParamSet::at(std::string_view name) {
  auto i = find(name);
  if (!i) throw std::out_of_range("no parameter named '" + std::string(name) + "'");
  return entries_[*i].second;
}

const Tensor& ParamSet::at(std::string_view name) const {
  auto i = find(name);
  if (!i) throw std::out_of_range("no parameter named '" + std::string(name) + "'");
  return entries_[*i].second;
}

std::size_t ParamSet::total_size() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.size();
  return n;
}

std::vector<double> ParamSet::flatten() const {
  std::vector<double> out;
  out.reserve(total_size());
  for (const auto& e : entries_) out.insert(out.end(), e.second.data.begin(), e.second.data.end());
  return out;
}

void ParamSet::assign_flat(std::span<const double> flat) {
  if (flat.size() != total_size()) {
    throw std::invalid_argument("assign_flat: got " + std::to_string(flat.size()) +
                                " values for " + std::to_string(total_size()) + " parameters");
  }
  std::size_t at = 0;
  for (auto& e : entries_) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(at), e.second.size(), e.second.data.begin());
    at += e.second.size();
  }
}

// ---------------------------------------------------------------------------

Model Model::init(const ModelShape& shape, Rng& rng, double scale) {
  shape.validate();
  const std::size_t h = shape.hidden;
  const std::size_t e = shape.embed;
  const std::size_t ctx = shape.context_dim();
  Model m;
  m.shape = shape;
  auto make = [&](std::size_t r, std::size_t c) {
    Tensor t(r, c);
    for (auto& v : t.data) v = rng.uniform(-scale, scale);
    return t;
  };
  m.params.add(std::string(param::kSourceEmbed), make(shape.source_vocab, e));
  m.params.add(std::string(param::kTargetEmbed), make(shape.target_vocab, e));
  m.params.add(std::string(param::kEncFwdW), make(4 * h, e + h));
  m.params.add(std::string(param::kEncFwdB), make(4 * h, 1));
  if (shape.bidirectional) {
    m.params.add(std::string(param::kEncBwdW), make(4 * h, e + h));
    m.params.add(std::string(param::kEncBwdB), make(4 * h, 1));
  }
  if (shape.attention == AttentionMode::learned) {
    m.params.add(std::string(param::kAttnDec), make(shape.attention_units, h));
    m.params.add(std::string(param::kAttnEnc), make(shape.attention_units, shape.encoder_dim()));
    m.params.add(std::string(param::kAttnV), make(shape.attention_units, 1));
  }
  m.params.add(std::string(param::kDecW), make(4 * h, e + ctx + h));
  m.params.add(std::string(param::kDecB), make(4 * h, 1));
  m.params.add(std::string(param::kOutW), make(shape.target_vocab, h + ctx));
  m.params.add(std::string(param::kOutB), make(shape.target_vocab, 1));
  return m;
}

BoundParams bind(Tape& tape, const Model& model, bool trainable) {
  BoundParams b;
  b.shape = &model.shape;
  b.vars.reserve(model.params.size());
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    const Tensor& t = model.params.tensor(i);
    b.vars.push_back(trainable ? tape.variable(t) : tape.constant(t));
  }
  auto get = [&](std::string_view name) {
    auto i = model.params.find(name);
    if (!i) throw std::invalid_argument("model is missing parameter '" + std::string(name) + "'");
    return b.vars[*i];
  };
  const auto& s = model.shape;
  b.source_embed = get(param::kSourceEmbed);
  b.target_embed = get(param::kTargetEmbed);
  b.enc_fwd = {get(param::kEncFwdW), get(param::kEncFwdB)};
  if (s.bidirectional) b.enc_bwd = LstmCellParams{get(param::kEncBwdW), get(param::kEncBwdB)};
  if (s.attention == AttentionMode::learned) {
    b.attn_dec = get(param::kAttnDec);
    b.attn_enc = get(param::kAttnEnc);
    b.attn_v = get(param::kAttnV);
  }
  b.dec = {get(param::kDecW), get(param::kDecB)};
  b.out_w = get(param::kOutW);
  b.out_b = get(param::kOutB);
  return b;
}

LstmState zero_state(Tape& tape, std::size_t hidden) {
  return {tape.constant(std::vector<double>(hidden, 0.0), hidden),
          tape.constant(std::vector<double>(hidden, 0.0), hidden)};
}

LstmState lstm_cell(Var x, const LstmState& prev, const LstmCellParams& p) {
  const std::size_t h = prev.h.size();
  if (prev.c.size() != h) throw ShapeError("lstm_cell", "hidden and cell sizes differ");
  if (p.weights.rows() != 4 * h || p.weights.cols() != x.size() + h || p.bias.size() != 4 * h) {
    throw ShapeError("lstm_cell", "weights " + std::to_string(p.weights.rows()) + "x" +
                                      std::to_string(p.weights.cols()) + " for input " +
                                      std::to_string(x.size()) + " and hidden " +
                                      std::to_string(h));
  }
  const Var z = ad::add(ad::matvec(p.weights, ad::concat({x, prev.h})), p.bias);
  const Var in_gate = ad::sigmoid(ad::slice(z, 0, h));
  const Var forget_gate = ad::sigmoid(ad::slice(z, h, h));
  const Var out_gate = ad::sigmoid(ad::slice(z, 2 * h, h));
  const Var candidate = ad::tanh(ad::slice(z, 3 * h, h));
  const Var c = ad::add(ad::mul(forget_gate, prev.c), ad::mul(in_gate, candidate));
  const Var hs = ad::mul(out_gate, ad::tanh(c));
  return {hs, c};
}

EncoderOutput encode(std::span<const int> source, const BoundParams& p) {
  if (source.empty()) throw std::invalid_argument("encode: empty source sequence");
  const ModelShape& s = *p.shape;
  Tape& tape = *p.source_embed.tape();
  std::vector<Var> embedded;
  embedded.reserve(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    const int id = source[i];
    if (id < 0 || static_cast<std::size_t>(id) >= s.source_vocab) {
      throw std::invalid_argument("encode: unknown token id " + std::to_string(id) +
                                  " at position " + std::to_string(i));
    }
    embedded.push_back(ad::row(p.source_embed, static_cast<std::size_t>(id)));
  }

  EncoderOutput out;
  std::vector<Var> fwd;
  LstmState st = zero_state(tape, s.hidden);
  for (const Var& x : embedded) {
    st = lstm_cell(x, st, p.enc_fwd);
    fwd.push_back(st.h);
  }
  out.final_forward = st;

  if (p.enc_bwd) {
    std::vector<Var> bwd(embedded.size());
    LstmState b = zero_state(tape, s.hidden);
    for (std::size_t i = embedded.size(); i-- > 0;) {
      b = lstm_cell(embedded[i], b, *p.enc_bwd);
      bwd[i] = b.h;
    }
    for (std::size_t i = 0; i < embedded.size(); ++i) out.states.push_back(ad::concat({fwd[i], bwd[i]}));
  } else {
    out.states = std::move(fwd);
  }

  if (s.attention == AttentionMode::learned) {
    out.state_matrix = ad::stack(out.states);
    for (const Var& st_i : out.states) out.attn_keys.push_back(ad::matvec(p.attn_enc, st_i));
  }
  return out;
}

AttentionResult attend(Var h, const EncoderOutput& enc, const BoundParams& p, std::size_t step) {
  if (enc.states.empty()) throw std::invalid_argument("attend: no encoder states");
  switch (p.shape->attention) {
    case AttentionMode::fixed:
      if (step >= enc.states.size()) {
        throw std::out_of_range("attend: fixed attention step " + std::to_string(step) +
                                " beyond source length " + std::to_string(enc.states.size()));
      }
      return {enc.states[step], Var{}};
    case AttentionMode::none:
      return {Var{}, Var{}};
    case AttentionMode::learned:
      break;
  }
  const Var query = ad::matvec(p.attn_dec, h);
  std::vector<Var> energies;
  energies.reserve(enc.attn_keys.size());
  for (const Var& key : enc.attn_keys) {
    energies.push_back(ad::dot(p.attn_v, ad::tanh(ad::add(query, key))));
  }
  const Var weights = ad::softmax(ad::concat(energies));
  return {ad::vecmat(weights, enc.state_matrix), weights};
}

LstmState initial_decoder_state(const EncoderOutput& enc) { return enc.final_forward; }

DecoderStepOutput decode_step(Var input, const LstmState& prev, const EncoderOutput& enc,
                              const BoundParams& p, std::size_t step) {
  const ModelShape& s = *p.shape;
  if (input.size() != s.embed) {
    throw ShapeError("decode_step", "input embedding of size " + std::to_string(input.size()) +
                                        ", expected " + std::to_string(s.embed));
  }
  const AttentionResult att = attend(prev.h, enc, p, step);
  DecoderStepOutput out;
  out.context = att.context;
  out.attention_weights = att.weights;
  if (att.context.valid()) {
    out.state = lstm_cell(ad::concat({input, att.context}), prev, p.dec);
    out.scores = ad::add(ad::matvec(p.out_w, ad::concat({out.state.h, att.context})), p.out_b);
  } else {
    out.state = lstm_cell(input, prev, p.dec);
    out.scores = ad::add(ad::matvec(p.out_w, out.state.h), p.out_b);
  }
  return out;
}

}  // namespace sdec
