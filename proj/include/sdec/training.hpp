#pragma once

// Training objectives and the training loop.
//
// Every regime runs the same decoder step; they differ only in which
// embedding is fed to step i + 1:
//
//   CE              e(y*_i)
//   SS-hard-greedy  e(argmax s_i)            mixed with gold at rate eps
//   SS-hard-sample  e(argmax (s_i + G))      mixed with gold at rate eps
//   relaxed-greedy  soft argmax of s_i       mixed with gold at rate eps
//   relaxed-sample  soft argmax of s_i + G   mixed with gold at rate eps
//
// Hard regimes give the fed embedding no gradient path back to s_i.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sdec/datagen.hpp"
#include "sdec/evaluation.hpp"
#include "sdec/relaxation.hpp"
#include "sdec/schedules.hpp"
#include "sdec/seq2seq.hpp"

namespace sdec {

enum class Regime { ce, ss_hard_greedy, ss_hard_sample, relaxed_greedy, relaxed_sample };

inline constexpr Regime kAllRegimes[] = {Regime::ce, Regime::ss_hard_greedy,
                                         Regime::ss_hard_sample, Regime::relaxed_greedy,
                                         Regime::relaxed_sample};

std::string_view to_string(Regime regime);
Regime parse_regime(std::string_view name);
bool is_relaxed(Regime regime);
bool uses_gumbel(Regime regime);

/// -log softmax(scores)[gold].
Var step_loss(Var scores, int gold);

struct RolloutOptions {
  Regime regime = Regime::ce;
  double eps = 1.0;
  double alpha = 1.0;
};

/// Random sources consumed by a rollout.
struct RolloutRandom {
  Rng mixing;
  Rng gumbel;

  static RolloutRandom from_seed(std::uint64_t seed) {
    return {Rng(seed, Stream::mixing), Rng(seed, Stream::gumbel)};
  }
};

struct RolloutStep {
  DecoderStepOutput out;
  Var input;                 // embedding fed into this step
  bool input_gold = true;    // step 0 is always SOS
  std::size_t model_choice = 0;  // argmax s_i (or of s_i + G in sample regimes)
  std::optional<GumbelSample> noise;
  Var loss;
};

struct Rollout {
  std::vector<RolloutStep> steps;
  Var loss;  // sum of step losses
};

/// The encoder sees the source followed by EOS.
std::vector<int> encoder_input(const std::vector<int>& source);

Rollout rollout(const BoundParams& params, const SequencePair& pair, const RolloutOptions& options,
                RolloutRandom& random);

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;  // flat, in ParamSet order
};

LossAndGradient loss_and_gradient(const Model& model, const SequencePair& pair,
                                  const RolloutOptions& options, RolloutRandom& random);

/// Forward-only loss with rollout randomness drawn from `noise_seed`, so the
/// result is a deterministic function of the parameters.
double rollout_loss_value(const Model& model, const SequencePair& pair,
                          const RolloutOptions& options, std::uint64_t noise_seed);

/// Feeds e(argmax) at each step; stops at EOS or after `max_len` steps
/// (and, under fixed attention, at the end of the encoded source).
std::vector<int> greedy_decode(const Model& model, const std::vector<int>& source,
                               std::size_t max_len);

std::vector<std::vector<int>> decode_corpus(const Model& model, const Corpus& corpus);

/// Decodes `corpus` and scores it against the gold targets (EOS stripped).
/// For F1, predicted ids that are not BIO tags count as "O" and
/// predictions are padded or cut to the gold length.
MetricReport evaluate_model(const Model& model, const Corpus& corpus, const Vocabulary& vocab,
                            MetricKind metric);

struct TrainConfig {
  Regime regime = Regime::ce;
  MixingSchedule mixing;
  TemperatureSchedule temp;
  ModelShape shape;  // vocab sizes are taken from the data
  double init_scale = 0.08;
  double lr = 0.1;
  double clip = 5.0;
  int epochs = 10;
  std::vector<std::uint64_t> seeds = {1};
  MetricKind metric = MetricKind::accuracy;
  std::string out_dir;     // empty: no files written
  bool wallclock = false;  // false: seconds column is 0 so CSVs are reproducible

  void validate() const;
};

struct RunRecord {
  int epoch = 0;
  double loss = 0.0;
  double dev_metric = 0.0;
  double test_metric = 0.0;
  double eps = 0.0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  double seconds = 0.0;
};

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<RunRecord> records;
  int best_epoch = -1;  // -1: initial parameters
  double best_dev = 0.0;
  double test_at_best = 0.0;
  Model best_model;
  Model final_model;
};

struct TrainResult {
  std::vector<SeedRun> runs;
  std::size_t best_run = 0;  // highest best_dev; earliest seed on ties

  const SeedRun& best() const { return runs.at(best_run); }
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::uint64_t seed, int epoch, std::size_t step, double loss);
  std::uint64_t seed() const { return seed_; }
  int epoch() const { return epoch_; }
  std::size_t step() const { return step_; }

 private:
  std::uint64_t seed_;
  int epoch_;
  std::size_t step_;
};

inline constexpr std::string_view kMetricsHeader =
    "epoch,loss,dev_metric,test_metric,eps,alpha,seconds";

std::string format_record(const RunRecord& r);

/// Runs every seed (concurrently) and selects the best by dev metric.
/// With `out_dir` set, writes seed<k>/metrics.csv, best.ckpt, final.ckpt.
TrainResult train(const TrainConfig& config, const TaskData& data);

/// Single-seed loop used by train().
SeedRun train_seed(const TrainConfig& config, const TaskData& data, std::uint64_t seed);

/// Scales `grad` in place to global norm `clip` when larger; returns the
/// norm before clipping.
double clip_gradient(std::vector<double>& grad, double clip);
void sgd_update(Model& model, std::span<const double> grad, double lr);

}  // namespace sdec
