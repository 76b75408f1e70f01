#pragma once

// LSTM encoder-decoder with optional bidirectional encoder and three
// attention modes. Parameters live in a ParamSet outside any tape and are
// copied onto a tape by bind() for each forward pass.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sdec/autodiff.hpp"
#include "sdec/rng.hpp"

namespace sdec {

/// Reserved ids shared by every vocabulary.
inline constexpr int kSos = 0;
inline constexpr int kEos = 1;
inline constexpr int kUnk = 2;

enum class AttentionMode { learned, fixed, none };

std::string_view to_string(AttentionMode mode);
AttentionMode parse_attention_mode(std::string_view name);

struct ModelShape {
  std::size_t source_vocab = 0;
  std::size_t target_vocab = 0;
  std::size_t embed = 16;
  std::size_t hidden = 32;
  std::size_t attention_units = 32;
  bool bidirectional = true;
  AttentionMode attention = AttentionMode::learned;

  /// Width of one encoder state.
  std::size_t encoder_dim() const { return bidirectional ? 2 * hidden : hidden; }
  /// Width of the attention context fed to the decoder (0 without attention).
  std::size_t context_dim() const { return attention == AttentionMode::none ? 0 : encoder_dim(); }

  void validate() const;
  bool operator==(const ModelShape&) const = default;
};

/// Ordered collection of named parameter arrays.
class ParamSet {
 public:
  void add(std::string name, Tensor t);

  std::size_t size() const { return entries_.size(); }
  const std::string& name(std::size_t i) const { return entries_[i].first; }
  Tensor& tensor(std::size_t i) { return entries_[i].second; }
  const Tensor& tensor(std::size_t i) const { return entries_[i].second; }

  std::optional<std::size_t> find(std::string_view name) const;
  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;

  std::size_t total_size() const;
  /// All values concatenated in entry order.
  std::vector<double> flatten() const;
  void assign_flat(std::span<const double> flat);

  bool operator==(const ParamSet&) const = default;

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

namespace param {
inline constexpr std::string_view kSourceEmbed = "src.embed";
inline constexpr std::string_view kTargetEmbed = "tgt.embed";
inline constexpr std::string_view kEncFwdW = "enc.fwd.W";
inline constexpr std::string_view kEncFwdB = "enc.fwd.b";
inline constexpr std::string_view kEncBwdW = "enc.bwd.W";
inline constexpr std::string_view kEncBwdB = "enc.bwd.b";
inline constexpr std::string_view kAttnDec = "attn.W_dec";
inline constexpr std::string_view kAttnEnc = "attn.W_enc";
inline constexpr std::string_view kAttnV = "attn.v";
inline constexpr std::string_view kDecW = "dec.W";
inline constexpr std::string_view kDecB = "dec.b";
inline constexpr std::string_view kOutW = "out.W";
inline constexpr std::string_view kOutB = "out.b";
}  // namespace param

struct Model {
  ModelShape shape;
  ParamSet params;

  /// Parameters drawn uniform(-scale, scale) from `rng`.
  static Model init(const ModelShape& shape, Rng& rng, double scale = 0.08);

  bool operator==(const Model&) const = default;
};

struct LstmCellParams {
  Var weights;  // 4H x (input + H), gate blocks ordered input, forget, output, candidate
  Var bias;     // 4H
};

struct LstmState {
  Var h;
  Var c;
};

/// Model parameters recorded on one tape.
struct BoundParams {
  const ModelShape* shape = nullptr;
  std::vector<Var> vars;  // aligned with ParamSet order
  Var source_embed;
  Var target_embed;
  LstmCellParams enc_fwd;
  std::optional<LstmCellParams> enc_bwd;
  Var attn_dec;
  Var attn_enc;
  Var attn_v;
  LstmCellParams dec;
  Var out_w;
  Var out_b;
};

/// Copies every parameter onto `tape`; `trainable` leaves receive gradients.
BoundParams bind(Tape& tape, const Model& model, bool trainable);

LstmState lstm_cell(Var x, const LstmState& prev, const LstmCellParams& p);
LstmState zero_state(Tape& tape, std::size_t hidden);

struct EncoderOutput {
  std::vector<Var> states;
  Var state_matrix;            // rows are states
  std::vector<Var> attn_keys;  // W_enc * state, learned attention only
  LstmState final_forward;
};

EncoderOutput encode(std::span<const int> source, const BoundParams& p);

struct AttentionResult {
  Var context;
  Var weights;  // invalid in fixed and none modes
};

AttentionResult attend(Var h, const EncoderOutput& enc, const BoundParams& p, std::size_t step);

struct DecoderStepOutput {
  LstmState state;
  Var scores;
  Var context;
  Var attention_weights;
};

/// Attention on h_prev, one LSTM step on [input ; context], projection of
/// [h ; context] to vocabulary scores.
DecoderStepOutput decode_step(Var input, const LstmState& prev, const EncoderOutput& enc,
                              const BoundParams& p, std::size_t step);

/// Decoder start state: the forward encoder's final state.
LstmState initial_decoder_state(const EncoderOutput& enc);

/// Save/load in the versioned text format documented in README.md.
/// Values are written as hex floats so a round trip is bit-exact.
void save_checkpoint(const std::string& path, const Model& model);
Model load_checkpoint(const std::string& path);

}  // namespace sdec
