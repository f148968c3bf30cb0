// Command-line entry point wiring every module: dataset validation, feature
// extraction, training, evaluation, attack generation, robustness sweeps,
// synthetic data generation, and the gradient-check harness.
//
// Exit codes: 0 success, 1 validation/usage error, 2 runtime failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "graphrfi/graphrfi.hpp"

namespace {

using namespace graphrfi;
using nlohmann::json;
using nlohmann::ordered_json;

void print_banner(const std::string& subcommand, const ordered_json& resolved) {
  ordered_json banner{{"subcommand", subcommand}};
  banner.update(resolved);
  std::cerr << banner.dump() << "\n";
}

int default_threads() {
  if (const char* env = std::getenv("GRAPHRFI_THREADS")) {
    const int t = std::atoi(env);
    if (t >= 1) return t;
  }
  return 1;
}

struct TrainFlagSet {
  TrainConfig flags;  // values written by CLI11; only applied when passed
  std::string config_path;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file (flags override file values)");
    cmd->add_option("--lambda", flags.lambda, "classification loss weight");
    cmd->add_option("--embedding-dim", flags.embedding_dim, "embedding size e");
    cmd->add_option("--hidden", flags.hidden, "MLP hidden size h");
    cmd->add_option("--attention-hidden", flags.attention_hidden, "attention hidden size");
    cmd->add_option("--dense-dim", flags.dense_dim, "classifier dense size");
    cmd->add_option("--trees", flags.trees, "forest size");
    cmd->add_option("--tree-depth", flags.tree_depth, "tree depth");
    cmd->add_option("--learning-rate", flags.learning_rate, "optimizer learning rate");
    cmd->add_option("--epochs", flags.epochs, "training epochs");
    cmd->add_option("--batch-size", flags.batch_size, "edges per minibatch (0 = full batch)");
    cmd->add_option("--seed", flags.seed, "master seed for all randomness");
    cmd->add_option("--weight-stop-gradient", flags.weight_stop_gradient,
                    "treat the rating-loss weight as a constant (default true)");
    cmd->add_option("--error-stop-gradient", flags.error_feature_stop_gradient,
                    "treat the error feature as a constant (default true)");
    cmd->add_option("--init-std", flags.init_std, "Gaussian init stddev");
    cmd->add_flag("--force-unit-weights", flags.force_unit_weights,
                  "apply weight 1 to every rating term (ablation hook)");
    cmd->add_option("--optimizer", flags.optimizer, "adam or sgd");
    cmd->add_option("--threads", flags.threads, "worker cap (env GRAPHRFI_THREADS fallback)");
  }

  TrainConfig resolve(CLI::App* cmd) const {
    TrainConfig cfg;
    cfg.threads = default_threads();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ValidationError("cannot open config file: " + config_path);
      json j = json::parse(in, nullptr, false);
      if (j.is_discarded()) throw ValidationError("config: malformed JSON in " + config_path);
      merge_train_config(cfg, j);
    }
    json overrides;
    auto passed = [&](const std::string& name) { return cmd->count(name) > 0; };
    if (passed("--lambda")) overrides["lambda"] = flags.lambda;
    if (passed("--embedding-dim")) overrides["embedding_dim"] = flags.embedding_dim;
    if (passed("--hidden")) overrides["hidden"] = flags.hidden;
    if (passed("--attention-hidden")) overrides["attention_hidden"] = flags.attention_hidden;
    if (passed("--dense-dim")) overrides["dense_dim"] = flags.dense_dim;
    if (passed("--trees")) overrides["trees"] = flags.trees;
    if (passed("--tree-depth")) overrides["tree_depth"] = flags.tree_depth;
    if (passed("--learning-rate")) overrides["learning_rate"] = flags.learning_rate;
    if (passed("--epochs")) overrides["epochs"] = flags.epochs;
    if (passed("--batch-size")) overrides["batch_size"] = flags.batch_size;
    if (passed("--seed")) overrides["seed"] = flags.seed;
    if (passed("--weight-stop-gradient")) overrides["weight_stop_gradient"] = flags.weight_stop_gradient;
    if (passed("--error-stop-gradient"))
      overrides["error_feature_stop_gradient"] = flags.error_feature_stop_gradient;
    if (passed("--init-std")) overrides["init_std"] = flags.init_std;
    if (passed("--force-unit-weights")) overrides["force_unit_weights"] = flags.force_unit_weights;
    if (passed("--optimizer")) overrides["optimizer"] = flags.optimizer;
    if (passed("--threads")) overrides["threads"] = flags.threads;
    merge_train_config(cfg, overrides);
    cfg.validate();
    return cfg;
  }
};

ordered_json split_to_json(const SplitSpec& s) {
  return ordered_json{{"seed", s.seed},
                      {"rating_test_fraction", s.rating_test_fraction},
                      {"user_train_fraction", s.user_train_fraction}};
}

SplitSpec split_from_json(const json& j) {
  SplitSpec s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.rating_test_fraction = j.at("rating_test_fraction").get<double>();
  s.user_train_fraction = j.at("user_train_fraction").get<double>();
  return s;
}

// Labeled user split when both classes exist; training without labels is the
// plain-regression path and only valid at lambda = 0.
std::optional<UserSplit> maybe_user_split(const Dataset& ds, const SplitSpec& split, double lambda) {
  try {
    return split_users(ds, split);
  } catch (const ValidationError&) {
    if (lambda > 0.0) throw;
    return std::nullopt;
  }
}

int cmd_validate(const std::string& in_path) {
  print_banner("validate", ordered_json{{"in", in_path}});
  const Dataset ds = parse_dataset(in_path);
  std::map<std::string, std::int64_t> label_counts;
  for (const auto& u : ds.users) label_counts[to_string(u.label)]++;
  std::unordered_set<std::string> items;
  for (const auto& e : ds.events) items.insert(e.item_id);
  ordered_json out{{"users", ds.users.size()},
                   {"events", ds.events.size()},
                   {"items", items.size()},
                   {"labels", label_counts}};
  std::cout << out.dump() << "\n";
  return 0;
}

int cmd_stats(const std::string& in_path) {
  print_banner("stats", ordered_json{{"in", in_path}});
  const Dataset ds = parse_dataset(in_path);
  const RatingGraph g = build_graph(ds.users, ds.events);
  std::map<std::size_t, std::int64_t> user_hist, item_hist;
  for (const auto& adj : g.user_adj) user_hist[adj.size()]++;
  for (const auto& adj : g.item_adj) item_hist[adj.size()]++;
  ordered_json out{{"n_users", g.n_users()},
                   {"n_items", g.n_items()},
                   {"n_edges", g.edge_count},
                   {"user_degree_histogram", user_hist},
                   {"item_degree_histogram", item_hist}};
  std::cout << out.dump() << "\n";
  return 0;
}

int cmd_features(const std::string& in_path, const std::string& out_path) {
  print_banner("features", ordered_json{{"in", in_path}, {"out", out_path.empty() ? "-" : out_path}});
  const Dataset ds = parse_dataset(in_path);
  const FeatureMatrix m = extract_features(ds, ds.events);
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw RuntimeFailure("cannot write " + out_path);
    out = &file;
  }
  for (std::size_t i = 0; i < ds.users.size(); ++i) {
    ordered_json j{{"user_id", ds.users[i].user_id}, {"x", m.rows[i]}};
    *out << j.dump() << "\n";
  }
  return 0;
}

int cmd_synth(const SynthConfig& cfg, const std::string& out_path) {
  print_banner("synth", ordered_json{{"n_genuine", cfg.n_genuine},
                                     {"n_fraudsters", cfg.n_fraudsters},
                                     {"n_items", cfg.n_items},
                                     {"latent_rank", cfg.latent_rank},
                                     {"rating_noise_std", cfg.rating_noise_std},
                                     {"ratings_per_user", cfg.ratings_per_user},
                                     {"attack_kind", to_string(cfg.attack_kind)},
                                     {"seed", cfg.seed},
                                     {"out", out_path}});
  const Dataset ds = generate_synthetic(cfg);
  write_dataset(ds, out_path);
  std::cout << ordered_json{{"users", ds.users.size()}, {"events", ds.events.size()}}.dump() << "\n";
  return 0;
}

int cmd_attack(const std::string& in_path, const std::string& out_path, const AttackSpec& spec) {
  print_banner("attack", ordered_json{{"in", in_path},
                                      {"out", out_path},
                                      {"kind", to_string(spec.kind)},
                                      {"intent", spec.intent == AttackIntent::push ? "push" : "nuke"},
                                      {"seed", spec.seed}});
  const Dataset ds = parse_dataset(in_path);
  const Dataset poisoned = apply_attack(ds, spec);
  write_dataset(poisoned, out_path);
  std::cout << ordered_json{{"rewritten_users", attack_profiles(ds, spec).size()}}.dump() << "\n";
  return 0;
}

int cmd_train(const std::string& in_path, const std::string& ckpt_path, const TrainConfig& cfg,
              const SplitSpec& split, const std::string& losses_path) {
  print_banner("train", ordered_json{{"in", in_path},
                                     {"out", ckpt_path.empty() ? "-" : ckpt_path},
                                     {"config", train_config_to_json(cfg)},
                                     {"split", split_to_json(split)}});
  const Dataset ds = parse_dataset(in_path);
  const RatingSplit ratings = split_ratings(ds, split);
  const auto users = maybe_user_split(ds, split, cfg.lambda);

  std::ofstream loss_file;
  std::ostream* loss_out = &std::cout;
  if (!losses_path.empty()) {
    loss_file.open(losses_path);
    if (!loss_file) throw RuntimeFailure("cannot write " + losses_path);
    loss_out = &loss_file;
  }
  const TrainResult result =
      fit(ds, ratings.train, users ? &*users : nullptr, cfg, [&](const LossReport& r) {
        *loss_out << loss_report_to_json(r).dump() << "\n";
      });

  if (!ckpt_path.empty()) {
    ordered_json meta{{"config", train_config_to_json(cfg)},
                      {"split", split_to_json(split)},
                      {"n_users", result.dims.n_items >= 0 ? ds.users.size() : 0},
                      {"n_items", result.dims.n_items},
                      {"has_user_split", users.has_value()}};
    save_checkpoint(ckpt_path, result.params, result.stats, meta);
  }

  const MetricsReport rep = evaluate_model(ds, ratings.train, ratings.test,
                                           users ? &*users : nullptr, result.params, result.dims,
                                           result.stats, cfg.threads);
  std::cerr << ordered_json{{"test_metrics", metrics_to_json(rep)}}.dump() << "\n";
  return 0;
}

int cmd_eval(const std::string& in_path, const std::string& ckpt_path, const std::string& out_path,
             int threads) {
  print_banner("eval", ordered_json{{"in", in_path}, {"checkpoint", ckpt_path}});
  const Checkpoint ck = load_checkpoint(ckpt_path);
  TrainConfig cfg;
  merge_train_config(cfg, ck.meta.at("config"));
  const SplitSpec split = split_from_json(ck.meta.at("split"));
  const Dataset ds = parse_dataset(in_path);
  const RatingSplit ratings = split_ratings(ds, split);
  std::optional<UserSplit> users;
  if (ck.meta.value("has_user_split", false)) users = split_users(ds, split);

  const ModelDims dims = cfg.dims(ck.meta.at("n_items").get<int>());
  const MetricsReport rep = evaluate_model(ds, ratings.train, ratings.test,
                                           users ? &*users : nullptr, ck.params, dims, ck.stats,
                                           threads);
  const auto out = metrics_to_json(rep);
  if (out_path.empty()) {
    std::cout << out.dump() << "\n";
  } else {
    std::ofstream file(out_path);
    if (!file) throw RuntimeFailure("cannot write " + out_path);
    file << out.dump() << "\n";
  }
  return 0;
}

int cmd_sweep(const std::string& in_path, const std::string& out_dir, const TrainConfig& cfg,
              const SplitSpec& split, std::vector<double> fractions, bool csv) {
  print_banner("sweep", ordered_json{{"in", in_path},
                                     {"out_dir", out_dir},
                                     {"fractions", fractions},
                                     {"csv", csv},
                                     {"config", train_config_to_json(cfg)},
                                     {"split", split_to_json(split)}});
  const Dataset ds = parse_dataset(in_path);
  std::filesystem::create_directories(out_dir);
  const SweepCurve curve =
      robustness_sweep(ds, cfg, split, fractions, [&](const SweepPoint& p) {
        char name[64];
        std::snprintf(name, sizeof(name), "sweep_f%.2f.json", p.fraction);
        std::ofstream file(std::filesystem::path(out_dir) / name);
        ordered_json j{{"fraction", p.fraction}, {"metrics", metrics_to_json(p.metrics)}};
        file << j.dump() << "\n";
        std::cerr << j.dump() << "\n";
      });
  {
    std::ofstream file(std::filesystem::path(out_dir) / "curve.json");
    file << sweep_curve_to_json(curve).dump() << "\n";
  }
  if (csv) {
    std::ofstream file(std::filesystem::path(out_dir) / "curve.csv");
    file << sweep_curve_to_csv(curve);
  }
  std::cout << sweep_curve_to_json(curve).dump() << "\n";
  return 0;
}

int cmd_grad_check(std::uint64_t seed, double step, bool weight_stop, bool error_stop) {
  print_banner("grad-check", ordered_json{{"seed", seed},
                                          {"step", step},
                                          {"weight_stop_gradient", weight_stop},
                                          {"error_stop_gradient", error_stop}});
  TrainConfig cfg = grad_check_config(seed);
  cfg.weight_stop_gradient = weight_stop;
  cfg.error_feature_stop_gradient = error_stop;
  const GradCheckReport report = run_grad_check(cfg, grad_check_dataset(seed), step);
  ordered_json groups = ordered_json::array();
  for (const auto& g : report.groups)
    groups.push_back(ordered_json{{"group", g.name}, {"max_rel_error", g.max_rel_error}});
  std::cout << ordered_json{{"loss", report.loss},
                            {"max_rel_error", report.max_rel_error},
                            {"groups", groups}}
                   .dump()
            << "\n";
  return report.max_rel_error <= 1e-4 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GraphRfi: robust rating prediction with joint fraudster detection"};
  app.require_subcommand(1);

  // validate
  auto* validate = app.add_subcommand("validate", "parse and validate a dataset file");
  std::string validate_in;
  validate->add_option("--in", validate_in, "dataset (line-delimited JSON)")->required();

  // stats
  auto* stats = app.add_subcommand("stats", "rating-graph statistics");
  std::string stats_in;
  stats->add_option("--in", stats_in, "dataset")->required();

  // features
  auto* features = app.add_subcommand("features", "emit per-user behavioral features");
  std::string features_in, features_out;
  features->add_option("--in", features_in, "dataset")->required();
  features->add_option("--out", features_out, "output file (default stdout)");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic planted-fraudster dataset");
  SynthConfig synth_cfg;
  std::string synth_out, synth_kind = "random";
  synth->add_option("--out", synth_out, "output dataset path")->required();
  synth->add_option("--n-genuine", synth_cfg.n_genuine, "genuine user count");
  synth->add_option("--n-fraudsters", synth_cfg.n_fraudsters, "fraudster count");
  synth->add_option("--n-items", synth_cfg.n_items, "item count");
  synth->add_option("--latent-rank", synth_cfg.latent_rank, "planted factor rank");
  synth->add_option("--noise-std", synth_cfg.rating_noise_std, "rating noise stddev");
  synth->add_option("--ratings-per-user", synth_cfg.ratings_per_user, "events per user");
  synth->add_option("--attack-kind", synth_kind, "random|average|hate|mixed");
  synth->add_option("--seed", synth_cfg.seed, "seed");

  // attack
  auto* attack = app.add_subcommand("attack", "rewrite fraudster ratings with a shilling attack");
  std::string attack_in, attack_out, attack_kind = "random", attack_intent = "push";
  std::uint64_t attack_seed = 0;
  attack->add_option("--in", attack_in, "input dataset")->required();
  attack->add_option("--out", attack_out, "output dataset")->required();
  attack->add_option("--kind", attack_kind, "random|average|hate|mixed")->required();
  attack->add_option("--intent", attack_intent, "push|nuke");
  attack->add_option("--seed", attack_seed, "seed");

  // train
  auto* train = app.add_subcommand("train", "train the joint model");
  std::string train_in, train_ckpt, train_losses;
  TrainFlagSet train_flags;
  SplitSpec train_split;
  train->add_option("--in", train_in, "dataset")->required();
  train->add_option("--out", train_ckpt, "checkpoint output path");
  train->add_option("--losses", train_losses, "loss stream file (default stdout)");
  train->add_option("--rating-test-fraction", train_split.rating_test_fraction,
                    "held-out fraction of genuine ratings");
  train->add_option("--user-train-fraction", train_split.user_train_fraction,
                    "labeled-user training fraction");
  train_flags.attach(train);

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the held-out splits");
  std::string eval_in, eval_ckpt, eval_out;
  int eval_threads = default_threads();
  eval->add_option("--in", eval_in, "dataset")->required();
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint path")->required();
  eval->add_option("--out", eval_out, "metrics output file (default stdout)");
  eval->add_option("--threads", eval_threads, "worker cap");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "fraudster-injection robustness sweep");
  std::string sweep_in, sweep_dir, sweep_fractions = "0,0.2,0.4,0.6,0.8,1.0";
  bool sweep_csv = false;
  TrainFlagSet sweep_flags;
  SplitSpec sweep_split;
  sweep->add_option("--in", sweep_in, "dataset")->required();
  sweep->add_option("--out-dir", sweep_dir, "output directory")->required();
  sweep->add_option("--fractions", sweep_fractions, "comma-separated injection fractions");
  sweep->add_flag("--csv", sweep_csv, "also write curve.csv");
  sweep->add_option("--rating-test-fraction", sweep_split.rating_test_fraction,
                    "held-out fraction of genuine ratings");
  sweep->add_option("--user-train-fraction", sweep_split.user_train_fraction,
                    "labeled-user training fraction");
  sweep_flags.attach(sweep);

  // grad-check
  auto* gradcheck = app.add_subcommand("grad-check", "finite-difference gradient verification");
  std::uint64_t gc_seed = 4;
  double gc_step = 1e-4;
  bool gc_weight_stop = true, gc_error_stop = true;
  gradcheck->add_option("--seed", gc_seed, "fixture seed");
  gradcheck->add_option("--step", gc_step, "finite-difference step");
  gradcheck->add_option("--weight-stop-gradient", gc_weight_stop, "stop gradient at the loss weight");
  gradcheck->add_option("--error-stop-gradient", gc_error_stop, "stop gradient at the error feature");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (validate->parsed()) return cmd_validate(validate_in);
    if (stats->parsed()) return cmd_stats(stats_in);
    if (features->parsed()) return cmd_features(features_in, features_out);
    if (synth->parsed()) {
      synth_cfg.attack_kind = attack_kind_from_string(synth_kind);
      return cmd_synth(synth_cfg, synth_out);
    }
    if (attack->parsed()) {
      AttackSpec spec;
      spec.kind = attack_kind_from_string(attack_kind);
      if (attack_intent == "push") spec.intent = AttackIntent::push;
      else if (attack_intent == "nuke") spec.intent = AttackIntent::nuke;
      else throw ValidationError("unknown intent: " + attack_intent);
      spec.seed = attack_seed;
      return cmd_attack(attack_in, attack_out, spec);
    }
    if (train->parsed()) {
      const TrainConfig cfg = train_flags.resolve(train);
      train_split.seed = cfg.seed;
      return cmd_train(train_in, train_ckpt, cfg, train_split, train_losses);
    }
    if (eval->parsed()) return cmd_eval(eval_in, eval_ckpt, eval_out, eval_threads);
    if (sweep->parsed()) {
      const TrainConfig cfg = sweep_flags.resolve(sweep);
      sweep_split.seed = cfg.seed;
      std::vector<double> fractions;
      std::stringstream ss(sweep_fractions);
      std::string tok;
      while (std::getline(ss, tok, ',')) fractions.push_back(std::stod(tok));
      return cmd_sweep(sweep_in, sweep_dir, cfg, sweep_split, fractions, sweep_csv);
    }
    if (gradcheck->parsed()) return cmd_grad_check(gc_seed, gc_step, gc_weight_stop, gc_error_stop);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
