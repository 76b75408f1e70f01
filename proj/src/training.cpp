#include "sdec/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <future>
#include <numeric>

namespace sdec {

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::ce: return "CE";
    case Regime::ss_hard_greedy: return "SS-hard-greedy";
    case Regime::ss_hard_sample: return "SS-hard-sample";
    case Regime::relaxed_greedy: return "relaxed-greedy";
    case Regime::relaxed_sample: return "relaxed-sample";
  }
  return "?";
}

Regime parse_regime(std::string_view name) {
  for (Regime r : kAllRegimes) {
    if (name == to_string(r)) return r;
  }
  throw std::invalid_argument("unknown regime '" + std::string(name) +
                              "' (expected CE, SS-hard-greedy, SS-hard-sample, relaxed-greedy "
                              "or relaxed-sample)");
}

bool is_relaxed(Regime regime) {
  return regime == Regime::relaxed_greedy || regime == Regime::relaxed_sample;
}

bool uses_gumbel(Regime regime) {
  return regime == Regime::ss_hard_sample || regime == Regime::relaxed_sample;
}

Var step_loss(Var scores, int gold) {
  if (gold < 0 || static_cast<std::size_t>(gold) >= scores.size()) {
    throw std::out_of_range("step_loss: gold id " + std::to_string(gold) + " outside vocabulary of " +
                            std::to_string(scores.size()));
  }
  return ad::sub(ad::log_sum_exp(scores), ad::pick(scores, static_cast<std::size_t>(gold)));
}

std::vector<int> encoder_input(const std::vector<int>& source) {
  std::vector<int> in = source;
  in.push_back(kEos);
  return in;
}

Rollout rollout(const BoundParams& p, const SequencePair& pair, const RolloutOptions& opt,
                RolloutRandom& rnd) {
  if (pair.target.empty()) throw std::invalid_argument("rollout: empty target");
  const std::size_t vocab = p.shape->target_vocab;
  for (int y : pair.target) {
    if (y < 0 || static_cast<std::size_t>(y) >= vocab) {
      throw std::out_of_range("rollout: target id " + std::to_string(y) + " outside vocabulary");
    }
  }
  std::optional<Temperature> alpha;
  if (is_relaxed(opt.regime)) alpha.emplace(opt.alpha);

  const EncoderOutput enc = encode(encoder_input(pair.source), p);
  const Var table = p.target_embed;
  LstmState state = initial_decoder_state(enc);

  Rollout r;
  r.steps.reserve(pair.target.size());
  Var input = ad::row(table, static_cast<std::size_t>(kSos));
  bool input_gold = true;
  for (std::size_t i = 0; i < pair.target.size(); ++i) {
    RolloutStep step;
    step.out = decode_step(input, state, enc, p, i);
    step.input = input;
    step.input_gold = input_gold;
    step.loss = step_loss(step.out.scores, pair.target[i]);
    r.loss = i == 0 ? step.loss : ad::add(r.loss, step.loss);

    const Var scores = step.out.scores;
    std::optional<GumbelSample> noise;
    if (uses_gumbel(opt.regime)) noise = gumbel_noise(rnd.gumbel, vocab);
    step.model_choice = noise ? gumbel_max_index(scores.value(), *noise) : argmax(scores.value());
    step.noise = noise;
    state = step.out.state;
    const std::size_t choice = step.model_choice;
    r.steps.push_back(std::move(step));
    if (i + 1 == pair.target.size()) break;

    const Var gold = ad::row(table, static_cast<std::size_t>(pair.target[i]));
    if (opt.regime == Regime::ce) {
      input = gold;
      input_gold = true;
      continue;
    }
    auto model_input = [&]() -> Var {
      switch (opt.regime) {
        case Regime::ss_hard_greedy: return hard_argmax_embedding(scores, table).embedding;
        case Regime::ss_hard_sample: return ad::row(table, choice);
        case Regime::relaxed_greedy: return soft_argmax_embedding(scores, *alpha, table);
        case Regime::relaxed_sample: return soft_sample_embedding(scores, *alpha, *noise, table);
        case Regime::ce: break;
      }
      return gold;
    };
    const MixedInput mixed = mix_step_input_lazy(gold, model_input, opt.eps, rnd.mixing);
    input = mixed.embedding;
    input_gold = mixed.gold;
  }
  return r;
}

LossAndGradient loss_and_gradient(const Model& model, const SequencePair& pair,
                                  const RolloutOptions& options, RolloutRandom& random) {
  Tape tape;
  const BoundParams p = bind(tape, model, true);
  const Rollout r = rollout(p, pair, options, random);
  tape.backward(r.loss);
  LossAndGradient out;
  out.loss = r.loss.scalar();
  out.gradient.reserve(model.params.total_size());
  for (const Var& v : p.vars) out.gradient.insert(out.gradient.end(), v.grad().begin(), v.grad().end());
  return out;
}

double rollout_loss_value(const Model& model, const SequencePair& pair,
                          const RolloutOptions& options, std::uint64_t noise_seed) {
  Tape tape;
  const BoundParams p = bind(tape, model, false);
  RolloutRandom rnd = RolloutRandom::from_seed(noise_seed);
  return rollout(p, pair, options, rnd).loss.scalar();
}

std::vector<int> greedy_decode(const Model& model, const std::vector<int>& source,
                               std::size_t max_len) {
  if (max_len == 0) throw std::invalid_argument("greedy_decode: max length must be >= 1");
  Tape tape;
  const BoundParams p = bind(tape, model, false);
  const EncoderOutput enc = encode(encoder_input(source), p);
  std::size_t steps = max_len;
  if (model.shape.attention == AttentionMode::fixed) steps = std::min(steps, enc.states.size());
  LstmState state = initial_decoder_state(enc);
  Var input = ad::row(p.target_embed, static_cast<std::size_t>(kSos));
  std::vector<int> out;
  for (std::size_t i = 0; i < steps; ++i) {
    const DecoderStepOutput step = decode_step(input, state, enc, p, i);
    const ArgmaxEmbedding next = hard_argmax_embedding(step.scores, p.target_embed);
    if (static_cast<int>(next.index) == kEos) break;
    out.push_back(static_cast<int>(next.index));
    input = next.embedding;
    state = step.state;
  }
  return out;
}

std::vector<std::vector<int>> decode_corpus(const Model& model, const Corpus& corpus) {
  std::vector<std::vector<int>> out;
  out.reserve(corpus.size());
  for (const auto& pair : corpus) out.push_back(greedy_decode(model, pair.source, 2 * pair.source.size() + 2));
  return out;
}

MetricReport evaluate_model(const Model& model, const Corpus& corpus, const Vocabulary& vocab,
                            MetricKind metric) {
  const auto pred = decode_corpus(model, corpus);
  std::vector<std::vector<int>> gold;
  gold.reserve(corpus.size());
  for (const auto& pair : corpus) {
    std::vector<int> g = pair.target;
    if (!g.empty() && g.back() == kEos) g.pop_back();
    gold.push_back(std::move(g));
  }
  switch (metric) {
    case MetricKind::accuracy: return token_accuracy(pred, gold);
    case MetricKind::bleu: return corpus_bleu(pred, gold);
    case MetricKind::f1: break;
  }
  const auto& tags = tagger_tags();
  auto as_tag = [&](int id) {
    const std::string& t = vocab.token(id);
    return std::find(tags.begin(), tags.end(), t) != tags.end() ? t : std::string("O");
  };
  std::vector<std::vector<std::string>> ptags, gtags;
  for (std::size_t k = 0; k < gold.size(); ++k) {
    std::vector<std::string> g, q;
    for (int id : gold[k]) g.push_back(as_tag(id));
    for (std::size_t i = 0; i < g.size(); ++i) q.push_back(i < pred[k].size() ? as_tag(pred[k][i]) : "O");
    gtags.push_back(std::move(g));
    ptags.push_back(std::move(q));
  }
  return entity_f1(ptags, gtags);
}

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("train: learning rate must be > 0");
  if (!(clip > 0.0)) throw std::invalid_argument("train: clip must be > 0");
  if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (seeds.empty()) throw std::invalid_argument("train: at least one seed is required");
  // Evaluate both schedules once so bad parameters surface before training.
  mixing_probability(mixing, 1);
  temperature(temp, 1);
}

DivergenceError::DivergenceError(std::uint64_t seed, int epoch, std::size_t step, double loss)
    : std::runtime_error("non-finite loss " + std::to_string(loss) + " (seed " + std::to_string(seed) +
                         ", epoch " + std::to_string(epoch) + ", step " + std::to_string(step) + ")"),
      seed_(seed),
      epoch_(epoch),
      step_(step) {}

std::string format_record(const RunRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.3f", r.epoch, r.loss,
                r.dev_metric, r.test_metric, r.eps, r.alpha, r.seconds);
  return buf;
}

double clip_gradient(std::vector<double>& grad, double clip) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > clip) {
    const double k = clip / norm;
    for (auto& g : grad) g *= k;
  }
  return norm;
}

void sgd_update(Model& model, std::span<const double> grad, double lr) {
  if (grad.size() != model.params.total_size()) {
    throw std::invalid_argument("sgd_update: gradient size does not match parameters");
  }
  std::size_t at = 0;
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    for (auto& v : model.params.tensor(i).data) v -= lr * grad[at++];
  }
}

SeedRun train_seed(const TrainConfig& cfg, const TaskData& data, std::uint64_t seed) {
  if (data.train.empty() || data.dev.empty()) throw std::invalid_argument("train: empty train or dev corpus");
  ModelShape shape = cfg.shape;
  shape.source_vocab = data.vocab.size();
  shape.target_vocab = data.vocab.size();

  Rng init_rng(seed, Stream::init);
  Rng data_rng(seed, Stream::data);
  RolloutRandom rnd = RolloutRandom::from_seed(seed);

  SeedRun run;
  run.seed = seed;
  Model model = Model::init(shape, init_rng, cfg.init_scale);
  run.best_model = model;
  run.best_dev = evaluate_model(model, data.dev, data.vocab, cfg.metric).value;
  run.test_at_best = evaluate_model(model, data.test, data.vocab, cfg.metric).value;

  std::ofstream csv;
  std::string seed_dir;
  if (!cfg.out_dir.empty()) {
    seed_dir = cfg.out_dir + "/seed" + std::to_string(seed);
    std::filesystem::create_directories(seed_dir);
    csv.open(seed_dir + "/metrics.csv");
    if (!csv) throw std::runtime_error("cannot write " + seed_dir + "/metrics.csv");
    csv << kMetricsHeader << '\n' << std::flush;
  }

  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);
  Tape tape;
  std::vector<double> grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    RolloutOptions opt;
    opt.regime = cfg.regime;
    opt.eps = mixing_probability(cfg.mixing, epoch);
    opt.alpha = temperature(cfg.temp, epoch);
    data_rng.shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      tape.clear();
      const BoundParams p = bind(tape, model, true);
      double loss = 0.0;
      try {
        const Rollout r = rollout(p, data.train[order[k]], opt, rnd);
        loss = r.loss.scalar();
        tape.backward(r.loss);
      } catch (const NumericError&) {
        throw DivergenceError(seed, epoch, k, std::nan(""));
      }
      if (!std::isfinite(loss)) throw DivergenceError(seed, epoch, k, loss);
      loss_sum += loss;
      grad.clear();
      for (const Var& v : p.vars) grad.insert(grad.end(), v.grad().begin(), v.grad().end());
      clip_gradient(grad, cfg.clip);
      sgd_update(model, grad, cfg.lr);
    }

    RunRecord rec;
    rec.epoch = epoch;
    rec.seed = seed;
    rec.loss = loss_sum / static_cast<double>(order.size());
    rec.eps = opt.eps;
    rec.alpha = opt.alpha;
    rec.dev_metric = evaluate_model(model, data.dev, data.vocab, cfg.metric).value;
    rec.test_metric = evaluate_model(model, data.test, data.vocab, cfg.metric).value;
    if (cfg.wallclock) {
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    run.records.push_back(rec);
    if (run.best_epoch < 0 || rec.dev_metric > run.best_dev) {
      run.best_epoch = epoch;
      run.best_dev = rec.dev_metric;
      run.test_at_best = rec.test_metric;
      run.best_model = model;
    }
    if (csv.is_open()) csv << format_record(rec) << '\n' << std::flush;
  }
  run.final_model = model;
  if (!seed_dir.empty()) {
    save_checkpoint(seed_dir + "/best.ckpt", run.best_model);
    save_checkpoint(seed_dir + "/final.ckpt", run.final_model);
  }
  return run;
}

TrainResult train(const TrainConfig& cfg, const TaskData& data) {
  cfg.validate();
  TrainResult result;
  std::vector<std::future<SeedRun>> jobs;
  jobs.reserve(cfg.seeds.size());
  for (std::uint64_t seed : cfg.seeds) {
    jobs.push_back(std::async(std::launch::async, [&cfg, &data, seed] { return train_seed(cfg, data, seed); }));
  }
  std::exception_ptr failure;
  for (auto& j : jobs) {
    try {
      result.runs.push_back(j.get());
    } catch (...) {
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  for (std::size_t i = 1; i < result.runs.size(); ++i) {
    if (result.runs[i].best_dev > result.runs[result.best_run].best_dev) result.best_run = i;
  }
  return result;
}

}  // namespace sdec
