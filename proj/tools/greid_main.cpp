// greid: command-line front end for the group re-identification engine.
//
// Subcommands: ingest, synth, train, eval, match. Every command is
// reproducible: identical arguments, seeds, and input files produce
// byte-identical output files regardless of --threads.

#include "greid/greid.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace {

// Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numeric failure.
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

greid::AffinityScorer make_scorer(const std::string& kind, const std::string& matrix_file) {
  greid::AffinityScorer scorer;
  if (kind == "cosine") {
    scorer.kind = greid::AffinityScorer::Kind::cosine;
  } else if (kind == "bilinear") {
    scorer.kind = greid::AffinityScorer::Kind::bilinear;
    if (matrix_file.empty()) {
      throw greid::ConfigError("bilinear scorer requires --scorer-matrix");
    }
    scorer.matrix = greid::load_matrix_tsv(matrix_file);
  } else {
    throw greid::ConfigError("unknown scorer kind '" + kind + "'");
  }
  return scorer;
}

struct IngestArgs {
  std::string path;
  int parts = 4;
};

int cmd_ingest(const IngestArgs& a) {
  const auto manifest = greid::load_dataset(a.path, a.parts);
  std::size_t people = 0;
  for (const auto& g : manifest.groups) people += g.members.size();
  const auto violations = greid::validate_dataset(manifest);
  std::cout << "groups: " << manifest.groups.size() << "\npersons: " << people
            << "\nfeature_dim: " << manifest.feature_dim
            << "\npart_count: " << manifest.part_count
            << "\nviolations: " << violations.size() << "\n";
  if (!violations.empty()) {
    for (const auto& v : violations) {
      std::cout << "violation\t" << v.group_id << '\t' << v.person_id << '\t' << v.message
                << "\n";
    }
    return kExitData;
  }
  return 0;
}

struct SynthArgs {
  greid::SynthConfig cfg;
  int parts = 4;
  std::string out;
};

int cmd_synth(const SynthArgs& a) {
  const auto manifest = greid::generate(a.cfg, a.parts);
  greid::save_dataset(manifest, a.out);
  std::cout << "wrote " << manifest.groups.size() << " group views to " << a.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string checkpoint_out;
  std::string loss_log;
  int parts = 4;
  int rounds = 2;
  int embed_dim = 0;
  double gamma = 32.0;
  double weight_pos = 1.0;
  double weight_neg = 1.0;
  greid::TrainConfig cfg;
};

int cmd_train(const TrainArgs& a) {
  const auto manifest = greid::load_dataset(a.data, a.parts);
  auto params = greid::init_match_params(manifest.feature_dim, a.parts, a.rounds, a.cfg.seed,
                                         a.embed_dim, a.gamma, a.weight_pos, a.weight_neg);
  const auto report = greid::train(manifest, std::move(params), a.cfg);

  if (a.cfg.grad_check) {
    std::cout << "grad_check_max_rel_error: "
              << greid::fmt_double(report.grad_check_max_rel_error) << "\n";
    if (report.grad_check_max_rel_error > 1e-4) {
      std::cerr << "gradient check failed: max relative error "
                << greid::fmt_double(report.grad_check_max_rel_error) << " > 1e-4\n";
      return kExitNumeric;
    }
  }
  if (!a.checkpoint_out.empty()) greid::save_checkpoint(report.params, a.checkpoint_out);
  if (!a.loss_log.empty()) {
    std::ofstream log(a.loss_log, std::ios::binary);
    if (!log) throw greid::DataError("cannot open loss log: " + a.loss_log);
    for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
      log << (e + 1) << '\t' << greid::fmt_double(report.epoch_loss[e]) << '\n';
    }
  }
  std::cout << "epochs: " << report.epoch_loss.size() << "\nfinal_loss: "
            << greid::fmt_double(report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back())
            << "\n";
  return 0;
}

struct EvalArgs {
  std::string data;
  std::string checkpoint;
  std::string out;
  int parts = 4;
  bool rw = false;
  bool gm = false;
  bool ablate = false;
  int walk_steps = 1;
  int threads = 0;
  std::string scorer_kind = "cosine";
  std::string scorer_matrix;
};

int cmd_eval(const EvalArgs& a) {
  const auto manifest = greid::load_dataset(a.data, a.parts);
  const auto [probes, gallery] = greid::split_probe_gallery(manifest);
  if (probes.empty()) {
    throw greid::DataError("eval: no identities with two camera views in " + a.data);
  }
  const auto scorer = make_scorer(a.scorer_kind, a.scorer_matrix);

  greid::MatchParams params;
  const bool need_params = a.gm || a.ablate;
  if (need_params) {
    if (a.checkpoint.empty()) {
      throw greid::DataError("eval: group matching requires --checkpoint");
    }
    params = greid::load_checkpoint(a.checkpoint);
  }

  const auto run = [&](bool rw, bool gm) {
    greid::RankOptions opt;
    opt.flags.random_walk = rw;
    opt.flags.group_matching = gm;
    opt.walk_steps = a.walk_steps;
    opt.threads = a.threads;
    return greid::rank_all(probes, gallery, gm ? &params : nullptr, scorer, opt);
  };

  std::ofstream out;
  if (!a.out.empty()) {
    out.open(a.out, std::ios::binary);
    if (!out) throw greid::DataError("cannot open results file: " + a.out);
  }
  std::ostream& sink = a.out.empty() ? std::cout : out;

  if (a.ablate) {
    std::vector<greid::AblationRow> rows;
    const std::vector<std::pair<std::string, std::pair<bool, bool>>> variants{
        {"base", {false, false}},
        {"rw", {true, false}},
        {"gm", {false, true}},
        {"rw+gm", {true, true}}};
    for (const auto& [name, flags] : variants) {
      const auto results = run(flags.first, flags.second);
      rows.push_back({name, greid::cmc(results, greid::default_ranks())});
    }
    greid::write_ablation(rows, sink);
    for (const auto& row : rows) {
      std::cout << row.variant << " rank1 " << greid::format_percent(row.rank_acc[0]) << "\n";
    }
  } else {
    const auto results = run(a.rw, a.gm);
    greid::write_results(results, sink);
    const auto accs = greid::cmc(results, greid::default_ranks());
    for (std::size_t i = 0; i < accs.size(); ++i) {
      std::cout << "Rank-" << greid::default_ranks()[i] << ' '
                << greid::format_percent(accs[i]) << "\n";
    }
  }
  return 0;
}

struct MatchArgs {
  std::string probe;
  std::string gallery;
  std::string checkpoint;
  int parts = 4;
  bool rw = false;
  bool gm = false;
  int walk_steps = 1;
  int top = 10;
  int threads = 0;
  std::string scorer_kind = "cosine";
  std::string scorer_matrix;
};

int cmd_match(const MatchArgs& a) {
  const auto probe_manifest = greid::load_dataset(a.probe, a.parts);
  const auto gallery_manifest = greid::load_dataset(a.gallery, a.parts);
  if (gallery_manifest.feature_dim != probe_manifest.feature_dim) {
    throw greid::DataError("match: probe and gallery feature dimensions differ");
  }
  const auto scorer = make_scorer(a.scorer_kind, a.scorer_matrix);

  greid::MatchParams params;
  if (a.gm) {
    if (a.checkpoint.empty()) throw greid::DataError("match: group matching requires --checkpoint");
    params = greid::load_checkpoint(a.checkpoint);
  }

  greid::RankOptions opt;
  opt.flags.random_walk = a.rw;
  opt.flags.group_matching = a.gm;
  opt.walk_steps = a.walk_steps;
  opt.threads = a.threads;

  const std::vector<greid::GroupSample> probes{probe_manifest.groups.front()};
  const auto results =
      greid::rank_all(probes, gallery_manifest.groups, a.gm ? &params : nullptr, scorer, opt);
  const auto& r = results.front();
  const int top = std::min<int>(a.top, static_cast<int>(r.ranking.size()));
  for (int i = 0; i < top; ++i) {
    std::cout << (i + 1) << '\t' << r.ranking[static_cast<std::size_t>(i)].first << '\t'
              << greid::fmt_double(r.ranking[static_cast<std::size_t>(i)].second) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"group re-identification matching engine"};
  app.require_subcommand(1);
  const char* env_config = std::getenv("GREID_CONFIG");
  app.set_config("--config", env_config ? env_config : "", "key=value config file");
  app.allow_config_extras(false);

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "validate and summarize a feature file");
  c_ingest->add_option("path", ingest.path, "feature file")->required();
  c_ingest->add_option("--parts", ingest.parts, "body part count")->check(CLI::PositiveNumber);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "generate a synthetic dataset");
  c_synth->add_option("--out", synth.out, "output feature file")->required();
  c_synth->add_option("--identities", synth.cfg.n_identities, "number of group identities")
      ->required()
      ->check(CLI::PositiveNumber);
  c_synth->add_option("--members-min", synth.cfg.members_min, "min members per group");
  c_synth->add_option("--members-max", synth.cfg.members_max, "max members per group");
  c_synth->add_option("--dim", synth.cfg.feature_dim, "feature dimension");
  c_synth->add_option("--sigma", synth.cfg.noise_sigma, "feature noise sigma");
  c_synth->add_option("--churn", synth.cfg.churn_count, "members replaced between views");
  c_synth->add_option("--distractors", synth.cfg.distractor_count, "distractor members per view");
  c_synth->add_option("--seed", synth.cfg.seed, "RNG seed");
  c_synth->add_option("--parts", synth.parts, "body part count");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "train matching parameters");
  c_train->add_option("--data", train.data, "training feature file")->required();
  c_train->add_option("--out", train.checkpoint_out, "checkpoint output path");
  c_train->add_option("--loss-log", train.loss_log, "per-epoch loss log path");
  c_train->add_option("--parts", train.parts, "body part count");
  c_train->add_option("--rounds", train.rounds, "message passing rounds");
  c_train->add_option("--embed-dim", train.embed_dim, "graph embedding dimension (0 = feature dim)");
  c_train->add_option("--gamma", train.gamma, "circle loss scale");
  c_train->add_option("--weight-pos", train.weight_pos, "circle loss positive weight");
  c_train->add_option("--weight-neg", train.weight_neg, "circle loss negative weight");
  c_train->add_option("--lr", train.cfg.learning_rate, "learning rate");
  c_train->add_option("--epochs", train.cfg.epochs, "training epochs");
  c_train->add_option("--batch-pairs", train.cfg.batch_pairs, "pairs per batch");
  c_train->add_option("--seed", train.cfg.seed, "RNG seed (init and sampling)");
  c_train->add_option("--threads", train.cfg.threads, "worker threads (0 = auto)");
  c_train->add_flag("--grad-check", train.cfg.grad_check,
                    "verify gradients against finite differences before training");

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "rank gallery groups for every probe and report CMC");
  c_eval->add_option("--data", eval.data, "feature file with two camera views per identity")
      ->required();
  c_eval->add_option("--checkpoint", eval.checkpoint, "matching checkpoint");
  c_eval->add_option("--out", eval.out, "results file (stdout if omitted)");
  c_eval->add_option("--parts", eval.parts, "body part count");
  c_eval->add_flag("--rw", eval.rw, "enable random-walk subgroup selection");
  c_eval->add_flag("--gm", eval.gm, "enable group matching head");
  c_eval->add_flag("--ablate", eval.ablate, "emit base/rw/gm/rw+gm summary grid");
  c_eval->add_option("--walk-steps", eval.walk_steps, "random walk iterations");
  c_eval->add_option("--threads", eval.threads, "worker threads (0 = auto)");
  c_eval->add_option("--scorer", eval.scorer_kind, "affinity scorer: cosine or bilinear");
  c_eval->add_option("--scorer-matrix", eval.scorer_matrix, "bilinear scorer matrix file");

  MatchArgs match;
  auto* c_match = app.add_subcommand("match", "rank a gallery for one probe group");
  c_match->add_option("--probe", match.probe, "probe feature file (first group used)")->required();
  c_match->add_option("--gallery", match.gallery, "gallery feature file")->required();
  c_match->add_option("--checkpoint", match.checkpoint, "matching checkpoint");
  c_match->add_option("--parts", match.parts, "body part count");
  c_match->add_flag("--rw", match.rw, "enable random-walk subgroup selection");
  c_match->add_flag("--gm", match.gm, "enable group matching head");
  c_match->add_option("--walk-steps", match.walk_steps, "random walk iterations");
  c_match->add_option("--top", match.top, "entries to print");
  c_match->add_option("--threads", match.threads, "worker threads (0 = auto)");
  c_match->add_option("--scorer", match.scorer_kind, "affinity scorer: cosine or bilinear");
  c_match->add_option("--scorer-matrix", match.scorer_matrix, "bilinear scorer matrix file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (c_ingest->parsed()) return cmd_ingest(ingest);
    if (c_synth->parsed()) return cmd_synth(synth);
    if (c_train->parsed()) return cmd_train(train);
    if (c_eval->parsed()) return cmd_eval(eval);
    if (c_match->parsed()) return cmd_match(match);
  } catch (const greid::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const greid::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const greid::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
