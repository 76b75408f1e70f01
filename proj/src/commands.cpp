#include "sdec/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "sdec/probes.hpp"

namespace sdec {

namespace {

TaskSpec make_task_spec(const Config& cfg) {
  TaskSpec s;
  s.kind = parse_task_kind(cfg.get("task.kind"));
  s.vocab = cfg.get_size("task.vocab");
  s.min_len = cfg.get_size("task.min_len");
  s.max_len = cfg.get_size("task.max_len");
  s.train = cfg.get_size("task.train");
  s.dev = cfg.get_size("task.dev");
  s.test = cfg.get_size("task.test");
  s.seed = static_cast<std::uint64_t>(cfg.get_size("task.seed"));
  s.validate();
  return s;
}

void write_resolved(const Config& cfg, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir + "/config.resolved");
  if (!out) throw std::runtime_error("cannot write " + dir + "/config.resolved");
  out << cfg.resolved();
}

Model model_for(const Config& cfg, const TaskData& data) {
  const std::string ckpt = cfg.get("model.checkpoint");
  if (!ckpt.empty()) return load_checkpoint(ckpt);
  Rng init(cfg.get_seeds().front(), Stream::init);
  return Model::init(make_model_shape(cfg, data.vocab.size()), init, cfg.get_double("model.init_scale"));
}

const SequencePair& pick_pair(const TaskData& data, std::size_t index) {
  if (index >= data.train.size()) {
    throw ConfigError("pair index " + std::to_string(index) + " beyond " +
                      std::to_string(data.train.size()) + " training pairs");
  }
  return data.train[index];
}

// Maps exceptions to exit codes shared by every command.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const DivergenceError& e) {
    err << "error: training diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace

ModelShape make_model_shape(const Config& cfg, std::size_t vocab) {
  ModelShape s;
  s.source_vocab = vocab;
  s.target_vocab = vocab;
  s.embed = cfg.get_size("model.embed");
  s.hidden = cfg.get_size("model.hidden");
  s.attention_units = cfg.get_size("model.attention_units");
  s.attention = parse_attention_mode(cfg.get("model.attention"));
  s.bidirectional = cfg.get_bool("model.bidirectional");
  s.validate();
  return s;
}

TaskData load_or_generate(const Config& cfg) {
  const TaskKind kind = parse_task_kind(cfg.get("task.kind"));
  const std::string dir = cfg.get("data");
  if (dir.empty()) return generate(make_task_spec(cfg));
  if (!std::filesystem::is_directory(dir)) throw ConfigError("data directory '" + dir + "' not found");
  return load_task(dir, kind);
}

TrainConfig make_train_config(const Config& cfg, TaskKind kind) {
  TrainConfig t;
  t.regime = parse_regime(cfg.get("regime"));
  t.mixing.kind = parse_mixing_kind(cfg.get("mixing.kind"));
  t.mixing.k = cfg.get_double("mixing.k");
  t.mixing.eps = cfg.get_double("mixing.eps");
  t.temp.kind = parse_temperature_kind(cfg.get("temp.kind"));
  t.temp.alpha0 = cfg.get_double("temp.alpha0");
  t.temp.rate = cfg.get_double("temp.rate");
  t.shape = make_model_shape(cfg, 1);
  t.init_scale = cfg.get_double("model.init_scale");
  t.lr = cfg.get_double("lr");
  t.clip = cfg.get_double("clip");
  t.epochs = static_cast<int>(cfg.get_int("epochs"));
  t.seeds = cfg.get_seeds();
  const std::string metric = cfg.get("metric");
  t.metric = !metric.empty() ? parse_metric_kind(metric)
                             : (kind == TaskKind::tagger ? MetricKind::f1 : MetricKind::accuracy);
  t.wallclock = cfg.get_bool("wallclock");
  t.out_dir = run_dir(cfg);
  t.validate();
  return t;
}

std::string run_dir(const Config& cfg) { return cfg.get("out") + "/" + cfg.get("name"); }

int cmd_gen_data(const Config& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const TaskSpec spec = make_task_spec(cfg);
    const TaskData data = generate(spec);
    const std::string dir = cfg.get("out") + "/" + std::string(to_string(spec.kind));
    write_task(dir, data);
    write_resolved(cfg, dir);
    out << "wrote " << dir << " (train=" << data.train.size() << " dev=" << data.dev.size()
        << " test=" << data.test.size() << " vocab=" << data.vocab.size() << ")\n";
    return kExitOk;
  });
}

int cmd_train(const Config& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const TaskData data = load_or_generate(cfg);
    const TrainConfig tc = make_train_config(cfg, data.kind);
    write_resolved(cfg, tc.out_dir);
    const TrainResult res = train(tc, data);
    const SeedRun& best = res.best();
    std::ofstream summary(tc.out_dir + "/summary.txt");
    summary << "regime=" << to_string(tc.regime) << " metric=" << to_string(tc.metric)
            << " best_seed=" << best.seed << " best_epoch=" << best.best_epoch
            << " dev=" << best.best_dev << " test=" << best.test_at_best << '\n';
    for (const auto& r : res.runs) {
      out << "seed " << r.seed << ": best_epoch=" << r.best_epoch << " dev=" << r.best_dev
          << " test=" << r.test_at_best << '\n';
    }
    out << "best seed " << best.seed << " test " << to_string(tc.metric) << '=' << best.test_at_best
        << " (" << tc.out_dir << ")\n";
    return kExitOk;
  });
}

int cmd_gradcheck(const Config& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const TaskData data = load_or_generate(cfg);
    const Model model = model_for(cfg, data);
    const SequencePair& pair = pick_pair(data, cfg.get_size("gradcheck.pair"));
    if (model.shape.target_vocab > 8 || model.shape.hidden > 8 || model.shape.embed > 8 ||
        pair.source.size() > 4 || pair.target.size() > 5) {
      throw ConfigError("gradcheck needs a tiny model: vocab <= 8, hidden <= 8, embed <= 8, length <= 4");
    }
    RolloutOptions opt;
    opt.regime = parse_regime(cfg.get("regime"));
    opt.eps = cfg.get_double("gradcheck.eps");
    opt.alpha = cfg.get_double("temp.alpha0");
    const std::uint64_t noise_seed = cfg.get_seeds().front();
    write_resolved(cfg, run_dir(cfg));

    if (opt.regime == Regime::ss_hard_greedy || opt.regime == Regime::ss_hard_sample) {
      if (const auto d = find_discontinuity(model, pair, opt, noise_seed)) {
        out << "flip bracketed on " << d->selector.text << " in [" << d->bracket.lo << ", "
            << d->bracket.hi << "] at step " << d->step_index << ": loss " << d->loss_lo << " -> "
            << d->loss_hi << '\n';
        err << "objective not differentiable through fed decisions\n";
        return kExitNotDifferentiable;
      }
    }
    const GradCheckReport rep =
        gradient_check(model, pair, opt, noise_seed, cfg.get_double("gradcheck.step"));
    const double tol = cfg.get_double("gradcheck.tol");
    out << "regime=" << to_string(opt.regime) << " params=" << rep.checked << " loss=" << rep.loss
        << " max_rel_error=" << rep.max_rel_error << " worst=" << rep.worst_param
        << " (analytic " << rep.worst_analytic << ", numeric " << rep.worst_numeric << ")\n";
    return rep.max_rel_error <= tol ? kExitOk : kExitFailure;
  });
}

int cmd_sweep(const Config& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const TaskData data = load_or_generate(cfg);
    const Model model = model_for(cfg, data);
    const SequencePair& pair = pick_pair(data, cfg.get_size("sweep.pair"));
    ParamSelector sel;
    try {
      sel = parse_selector(model, cfg.get("sweep.param"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("sweep.param: ") + e.what());
    }
    const SweepResult res =
        sweep_line(model, sel, cfg.get_double("sweep.lo"), cfg.get_double("sweep.hi"),
                   cfg.get_size("sweep.points"), pair, cfg.get_double("sweep.eps"),
                   cfg.get_doubles("sweep.alphas"), cfg.get_seeds().front());
    const std::string dir = run_dir(cfg);
    write_resolved(cfg, dir);
    std::string path = cfg.get("sweep.out");
    if (path.empty()) path = dir + "/sweep.csv";
    std::ofstream csv(path);
    if (!csv) throw std::runtime_error("cannot write " + path);
    write_sweep_csv(csv, res);
    out << "wrote " << path << '\n';
    out << "max_jump " << res.hard.label << '=' << res.hard.max_jump << '\n';
    for (const auto& c : res.relaxed) {
      out << "max_jump " << c.label << '=' << c.max_jump;
      if (c.max_jump > 0) out << " (hard/relaxed=" << res.hard.max_jump / c.max_jump << ')';
      out << '\n';
    }
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::vector<std::string>> read_sequences(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tab = line.find('\t');
    if (tab != std::string::npos) line = line.substr(tab + 1);
    std::vector<std::string> toks;
    std::istringstream ls(line);
    std::string t;
    while (ls >> t) toks.push_back(t);
    out.push_back(std::move(toks));
  }
  return out;
}

}  // namespace

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const MetricKind kind = parse_metric_kind(args.metric);
    std::vector<std::vector<std::string>> pred, gold;
    if (!args.checkpoint.empty()) {
      if (args.corpus.empty() || args.vocab.empty()) {
        throw ConfigError("--checkpoint needs --corpus and --vocab");
      }
      const Model model = load_checkpoint(args.checkpoint);
      const Vocabulary vocab = read_vocab(args.vocab);
      for (const auto& tp : read_corpus(args.corpus)) {
        const SequencePair sp = encode_pair(tp, vocab);
        std::vector<std::string> p;
        for (int id : greedy_decode(model, sp.source, 2 * sp.source.size() + 2)) p.push_back(vocab.token(id));
        pred.push_back(std::move(p));
        gold.push_back(tp.target);
      }
    } else {
      if (args.pred.empty() || args.gold.empty()) throw ConfigError("need --pred and --gold, or --checkpoint");
      pred = read_sequences(args.pred);
      gold = read_sequences(args.gold);
    }

    MetricReport rep;
    if (kind == MetricKind::f1) {
      if (!args.checkpoint.empty()) {
        for (std::size_t k = 0; k < pred.size(); ++k) {
          pred[k].resize(gold[k].size(), "O");
          for (auto& t : pred[k]) {
            if (std::find(tagger_tags().begin(), tagger_tags().end(), t) == tagger_tags().end()) t = "O";
          }
        }
      }
      rep = entity_f1(pred, gold);
    } else {
      Vocabulary ids;
      auto to_ids = [&](const std::vector<std::vector<std::string>>& seqs) {
        std::vector<std::vector<int>> o;
        for (const auto& s : seqs) {
          std::vector<int> v;
          for (const auto& t : s) v.push_back(ids.add(t));
          o.push_back(std::move(v));
        }
        return o;
      };
      const auto p = to_ids(pred);
      const auto g = to_ids(gold);
      rep = kind == MetricKind::bleu ? corpus_bleu(p, g) : token_accuracy(p, g);
    }
    out << rep.format() << '\n';
    if (!args.csv.empty()) {
      const bool fresh = !std::filesystem::exists(args.csv);
      std::ofstream csv(args.csv, std::ios::app);
      if (!csv) throw std::runtime_error("cannot append to " + args.csv);
      if (fresh) csv << "metric,value\n";
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", rep.value);
      csv << rep.name << ',' << buf << '\n';
    }
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------

int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Relaxed greedy and sampled decoding for seq2seq training", "sdec"};
  app.require_subcommand(1);

  struct ConfigCommand {
    CLI::App* app;
    std::string config;
    int (*run)(const Config&, std::ostream&, std::ostream&);
  };
  std::vector<ConfigCommand> commands = {
      {app.add_subcommand("gen-data", "write synthetic train/dev/test corpora"), {}, cmd_gen_data},
      {app.add_subcommand("train", "train one regime over the configured seeds"), {}, cmd_train},
      {app.add_subcommand("gradcheck", "compare analytic and finite-difference gradients"), {}, cmd_gradcheck},
      {app.add_subcommand("sweep", "loss along one parameter for hard and relaxed decoding"), {}, cmd_sweep},
  };
  for (auto& c : commands) {
    c.app->add_option("config", c.config, "flat key = value config file");
    c.app->allow_extras();
    c.app->footer("Any config key may be overridden with --key=value.");
  }

  EvaluateArgs ev;
  CLI::App* eval = app.add_subcommand("evaluate", "score predictions or a checkpoint");
  eval->add_option("--metric", ev.metric, "accuracy, f1 or bleu");
  eval->add_option("--pred", ev.pred, "predicted sequences, one per line");
  eval->add_option("--gold", ev.gold, "gold sequences (TSV target column or one per line)");
  eval->add_option("--checkpoint", ev.checkpoint, "decode this model instead of reading --pred");
  eval->add_option("--corpus", ev.corpus, "TSV corpus to decode with --checkpoint");
  eval->add_option("--vocab", ev.vocab, "vocab.txt matching the checkpoint");
  eval->add_option("--csv", ev.csv, "append metric,value to this CSV");

  std::vector<const char*> cargv;
  cargv.reserve(argv.size());
  for (const auto& a : argv) cargv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitConfig;
  }

  if (eval->parsed()) return cmd_evaluate(ev, out, err);
  for (auto& c : commands) {
    if (!c.app->parsed()) continue;
    Config cfg;
    try {
      if (!c.config.empty()) cfg = Config::from_file(c.config);
      cfg.apply_overrides(c.app->remaining());
    } catch (const ConfigError& e) {
      err << "config error: " << e.what() << '\n';
      return kExitConfig;
    }
    return c.run(cfg, out, err);
  }
  return kExitConfig;
}

}  // namespace sdec
