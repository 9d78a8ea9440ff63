#include "polsynth/cli.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "polsynth/corpus.hpp"
#include "polsynth/ddt.hpp"
#include "polsynth/dsl.hpp"
#include "polsynth/error.hpp"
#include "polsynth/explain.hpp"
#include "polsynth/policy.hpp"
#include "polsynth/ppo.hpp"
#include "polsynth/serialize.hpp"
#include "polsynth/stats.hpp"

namespace polsynth::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kConfigVersion = 1;

// Raised for problems the user fixes by changing the command line.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path + "'");
  out << text;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

std::string with_newline(std::string text) {
  if (text.empty() || text.back() != '\n') text += '\n';
  return text;
}

LexicalTree load_tree(const std::string& path, const PredicateDictionary* dict) {
  const std::string text = read_text(path);
  if (fs::path(path).extension() == ".dsl") {
    if (!dict) throw UsageError("reading a .dsl policy needs --domain");
    return parse_dsl(text, *dict);
  }
  return deserialize(text);
}

const PredicateDictionary& domain_of(const LexicalTree& tree, const std::string& domain_flag) {
  if (!domain_flag.empty()) return PredicateDictionary::for_domain(parse_domain(domain_flag));
  auto domain = infer_domain(tree);
  if (!domain) throw SchemaError("tree tokens do not belong to a single domain");
  return PredicateDictionary::for_domain(*domain);
}

json mlp_to_json(const MlpPolicy& policy, std::size_t hidden, std::uint64_t seed) {
  return {{"kind", "mlp"},
          {"v", 1},
          {"observation_dim", policy.observation_dim()},
          {"action_count", policy.action_count()},
          {"hidden", hidden},
          {"seed", seed},
          {"parameters", policy.parameters()}};
}

std::unique_ptr<Policy> policy_from_json(const json& doc, Domain domain) {
  if (doc.value("kind", "ddt") == "mlp") {
    auto policy = std::make_unique<MlpPolicy>(
        doc.at("observation_dim").get<std::size_t>(), doc.at("action_count").get<std::size_t>(),
        doc.value("seed", std::uint64_t{0}), observation_scale(domain),
        doc.at("hidden").get<std::size_t>());
    policy->set_parameters(doc.at("parameters").get<std::vector<double>>());
    return policy;
  }
  return std::make_unique<DdtPolicy>(ddt_from_json(doc));
}

json policy_to_json(const Policy& policy, std::size_t hidden) {
  if (const auto* ddt = dynamic_cast<const DdtPolicy*>(&policy)) return ddt_to_json(ddt->params());
  return mlp_to_json(dynamic_cast<const MlpPolicy&>(policy), hidden, 0);
}

struct Manifest {
  std::string command;
  std::vector<std::string> args;
  std::string config;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::optional<std::uint64_t> seed;
  std::string started = utc_now();

  void write(const std::string& path) const {
    json doc{{"command", command},
             {"args", args},
             {"config", config},
             {"inputs", inputs},
             {"outputs", outputs},
             {"version", POLSYNTH_VERSION},
             {"config_version", kConfigVersion},
             {"started", started},
             {"finished", utc_now()}};
    doc["seed"] = seed ? json(*seed) : json(nullptr);
    write_text(path, doc.dump(2) + "\n");
  }
};

// ---- commands -----------------------------------------------------------------

struct Context {
  std::ostream& out;
  std::ostream& err;
  const std::vector<std::string>& args;
  CLI::App& app;
};

Manifest manifest_for(const Context& ctx, const std::string& command) {
  Manifest m;
  m.command = command;
  m.args = ctx.args;
  m.config = ctx.app.config_to_str(true, false);
  return m;
}

struct ParseOptions {
  std::string domain;
  std::string input;
  std::string output;
};

int cmd_parse(const Context& ctx, const ParseOptions& o) {
  const auto& dict = PredicateDictionary::for_domain(parse_domain(o.domain));
  const auto tree = parse_dsl(read_text(o.input), dict);
  write_text(o.output, serialize(tree) + "\n");
  auto m = manifest_for(ctx, "parse");
  m.inputs = {o.input};
  m.outputs = {o.output};
  m.write(o.output + ".manifest.json");
  ctx.out << "wrote " << o.output << " (depth " << tree.depth() << ", " << tree.leaf_count()
          << " leaves)\n";
  return kExitOk;
}

struct ValidateOptions {
  std::string domain;
  std::string input;
};

int cmd_validate(const Context& ctx, const ValidateOptions& o) {
  const PredicateDictionary* dict =
      o.domain.empty() ? nullptr : &PredicateDictionary::for_domain(parse_domain(o.domain));
  const auto tree = load_tree(o.input, dict);
  const auto& used = dict ? *dict : domain_of(tree, "");
  const auto report = validate(tree, used);
  if (report.ok()) {
    ctx.out << "ok\n";
    return kExitOk;
  }
  for (const auto& v : report.violations) ctx.out << v.path << ": " << v.message << "\n";
  return kExitInvalid;
}

struct CorpusOptions {
  std::string domain;
  std::string output;
  std::string vocab;
  CorpusConfig config;
};

int cmd_gen_corpus(const Context& ctx, const CorpusOptions& o) {
  const auto& dict = PredicateDictionary::for_domain(parse_domain(o.domain));
  const auto corpus = build_corpus(dict, o.config);
  std::ostringstream examples;
  write_corpus(examples, corpus.examples);
  write_text(o.output, examples.str());
  std::ostringstream vocab;
  write_vocabulary(vocab, corpus.vocabulary);
  const std::string vocab_path = o.vocab.empty() ? o.output + ".vocab" : o.vocab;
  write_text(vocab_path, vocab.str());

  const auto report = check_corpus(corpus.examples, corpus.vocabulary, o.config.min_word_count);
  auto m = manifest_for(ctx, "gen-corpus");
  m.outputs = {o.output, vocab_path};
  m.seed = o.config.seed;
  m.write(o.output + ".manifest.json");

  std::map<Split, std::size_t> per_split;
  for (const auto& e : corpus.examples) ++per_split[e.split];
  ctx.out << corpus.examples.size() << " examples (train " << per_split[Split::train]
          << ", validation " << per_split[Split::validation] << ", test "
          << per_split[Split::test] << "), vocabulary " << corpus.vocabulary.size() << "\n";
  if (!report.ok()) {
    for (const auto& p : report.problems) ctx.err << "integrity: " << p << "\n";
    return kExitInvalid;
  }
  return kExitOk;
}

struct InitOptions {
  std::string domain;
  std::string tree;
  std::string output;
  InitConfig config;
  std::string leaf_mode = "logits";
};

int cmd_init_ddt(const Context& ctx, InitOptions o) {
  const PredicateDictionary* hint =
      o.domain.empty() ? nullptr : &PredicateDictionary::for_domain(parse_domain(o.domain));
  const auto tree = load_tree(o.tree, hint);
  const auto& dict = hint ? *hint : domain_of(tree, "");
  require_valid(tree, dict);
  o.config.leaf_mode = o.leaf_mode == "probabilities" ? LeafMode::probabilities : LeafMode::logits;
  const auto params = init_from_lexical(tree, dict, o.config);
  write_text(o.output, ddt_to_json(params).dump(2) + "\n");
  auto m = manifest_for(ctx, "init-ddt");
  m.inputs = {o.tree};
  m.outputs = {o.output};
  m.write(o.output + ".manifest.json");
  ctx.out << "wrote " << o.output << " (" << params.decisions.size() << " decisions, "
          << params.leaves.size() << " leaves)\n";
  return kExitOk;
}

struct TrainOptions {
  std::string domain;
  std::string params;
  std::string policy = "random-ddt";
  std::string output;
  std::string label;
  std::string trajectory;
  std::vector<std::string> init_trees;
  std::size_t select_episodes = 200;
  std::size_t seeds = 1;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::size_t leaves = 8;
  std::size_t hidden = 64;
  bool lr_set = false;
  PpoConfig ppo;
};

int cmd_train(const Context& ctx, TrainOptions o) {
  const Domain domain = parse_domain(o.domain);
  const auto& dict = PredicateDictionary::for_domain(domain);
  EnvConfig env = EnvConfig::defaults(domain, o.seed);
  auto m = manifest_for(ctx, "train");
  m.seed = o.seed;

  std::unique_ptr<Policy> initial;
  if (!o.init_trees.empty()) {
    std::vector<DdtParams> candidates;
    for (const auto& path : o.init_trees) {
      const auto tree = load_tree(path, &dict);
      require_valid(tree, dict);
      candidates.push_back(init_from_lexical(tree, dict));
      m.inputs.push_back(path);
    }
    PpoConfig short_run = o.ppo;
    short_run.total_episodes = o.select_episodes;
    short_run.seed = o.seed;
    const auto selection = select_best_initialization(
        candidates, env, short_run, std::min<std::size_t>(100, o.select_episodes));
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      ctx.out << "candidate " << o.init_trees[i] << ": " << selection.scores[i]
              << (i == selection.best ? " (selected)" : "") << "\n";
    }
    initial = std::make_unique<DdtPolicy>(candidates[selection.best]);
  } else if (!o.params.empty()) {
    initial = policy_from_json(json::parse(read_text(o.params)), domain);
    m.inputs.push_back(o.params);
  } else if (o.policy == "mlp") {
    initial = std::make_unique<MlpPolicy>(observation_dim(domain), action_count(domain), o.seed,
                                          observation_scale(domain), o.hidden);
    if (!o.lr_set) o.ppo.learning_rate = PpoConfig::kMlpLearningRate;
  } else {
    initial = std::make_unique<DdtPolicy>(random_ddt(domain, o.leaves, o.seed));
  }
  if (o.label.empty()) o.label = initial->kind();

  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < o.seeds; ++i) seeds.push_back(o.seed + i);
  const auto runs = train_runs(*initial, env, o.ppo, seeds, o.label, o.threads);

  fs::create_directories(o.output);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::string stem = (fs::path(o.output) / ("run-" + std::to_string(seeds[i]))).string();
    std::ostringstream log;
    write_training_log(log, runs[i].log);
    write_text(stem + ".log.jsonl", log.str());
    write_text(stem + ".params.json", policy_to_json(*runs[i].policy, o.hidden).dump(2) + "\n");
    m.outputs.push_back(stem + ".log.jsonl");
    m.outputs.push_back(stem + ".params.json");

    const auto& returns = runs[i].log.episode_returns;
    const std::size_t window = std::min<std::size_t>(100, returns.size());
    ctx.out << "seed " << seeds[i] << ": " << returns.size() << " episodes";
    if (window > 0) {
      const auto series = rolling_reward(returns, window);
      ctx.out << ", first-" << window << " mean " << series.front() << ", last-" << window
              << " mean " << series.back();
    }
    ctx.out << "\n";
  }
  if (!o.trajectory.empty() && !runs.empty()) {
    const auto records = rollout_episode(*runs.front().policy, env, o.seed);
    std::ostringstream text;
    write_trajectory(text, records);
    write_text(o.trajectory, text.str());
    m.outputs.push_back(o.trajectory);
  }
  (void)dict;
  m.write((fs::path(o.output) / "manifest.json").string());
  return kExitOk;
}

struct DiscretizeOptions {
  std::string domain;
  std::string params;
  std::string tree_out;
  std::string params_out;
};

int cmd_discretize(const Context& ctx, const DiscretizeOptions& o) {
  const auto params = ddt_from_json(json::parse(read_text(o.params)));
  const auto& dict = PredicateDictionary::for_domain(parse_domain(o.domain));
  const auto result = discretize(params, dict);
  write_text(o.tree_out, serialize(result.tree) + "\n");
  auto m = manifest_for(ctx, "discretize");
  m.inputs = {o.params};
  m.outputs = {o.tree_out};
  if (!o.params_out.empty()) {
    write_text(o.params_out, ddt_to_json(result.hard).dump(2) + "\n");
    m.outputs.push_back(o.params_out);
  }
  m.write(o.tree_out + ".manifest.json");
  const auto report = validate(result.tree, dict);
  if (!report.ok()) {
    for (const auto& v : report.violations) ctx.err << v.path << ": " << v.message << "\n";
    return kExitInvalid;
  }
  ctx.out << render_tree_text(result.tree, dict) << "\n";
  return kExitOk;
}

struct ExplainOptions {
  std::string domain;
  std::string tree;
  std::string style = "text";
  std::string output;
};

int cmd_explain(const Context& ctx, const ExplainOptions& o) {
  const PredicateDictionary* hint =
      o.domain.empty() ? nullptr : &PredicateDictionary::for_domain(parse_domain(o.domain));
  const auto tree = load_tree(o.tree, hint);
  const auto& dict = hint ? *hint : domain_of(tree, "");
  require_valid(tree, dict);
  const std::string text = with_newline(render(tree, parse_style(o.style), dict));
  if (o.output.empty()) {
    ctx.out << text;
    return kExitOk;
  }
  write_text(o.output, text);
  auto m = manifest_for(ctx, "explain");
  m.inputs = {o.tree};
  m.outputs = {o.output};
  m.write(o.output + ".manifest.json");
  return kExitOk;
}

struct ReportOptions {
  std::vector<std::string> logs;
  std::size_t window = 100;
  std::string output;
};

std::string fixed(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.4f", value);
  return buffer;
}

int cmd_report(const Context& ctx, const ReportOptions& o) {
  std::map<std::string, std::vector<std::vector<double>>> by_label;
  std::vector<std::string> order;
  for (const auto& path : o.logs) {
    std::istringstream in(read_text(path));
    auto log = read_training_log(in);
    if (!by_label.count(log.label)) order.push_back(log.label);
    by_label[log.label].push_back(std::move(log.episode_returns));
  }
  std::ostringstream table;
  table << "label,runs,median_initial,se_initial,median_max_rolling,se_max_rolling\n";
  for (const auto& label : order) {
    const auto s = summarize_runs(by_label[label], o.window);
    table << label << ',' << s.runs << ',' << fixed(s.median_initial) << ','
          << fixed(s.se_initial) << ',' << fixed(s.median_max_rolling) << ','
          << fixed(s.se_max_rolling) << '\n';
  }
  if (o.output.empty()) {
    ctx.out << table.str();
    return kExitOk;
  }
  write_text(o.output, table.str());
  auto m = manifest_for(ctx, "report");
  m.inputs = o.logs;
  m.outputs = {o.output};
  m.write(o.output + ".manifest.json");
  return kExitOk;
}

struct EvalOptions {
  std::string corpus;
  std::string predictions;
  std::string split = "validation";
  std::string output;
};

int cmd_eval_translate(const Context& ctx, const EvalOptions& o) {
  std::istringstream corpus_in(read_text(o.corpus));
  const auto examples = read_corpus(corpus_in);

  std::map<std::string, json> predictions;
  std::istringstream pred_in(read_text(o.predictions));
  std::string line;
  while (std::getline(pred_in, line)) {
    if (line.empty()) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError(std::string("malformed prediction line: ") + e.what());
    }
    if (!doc.contains("id")) throw SchemaError("prediction line without an id");
    predictions[doc["id"].get<std::string>()] = doc;
  }

  std::size_t total = 0, exact = 0, missing = 0, failed = 0;
  double token_sum = 0.0;
  for (const auto& e : examples) {
    if (o.split != "all" && to_string(e.split) != o.split) continue;
    ++total;
    auto it = predictions.find(e.id);
    if (it == predictions.end()) {
      ++missing;
      continue;
    }
    if (!it->second.contains("tree")) {
      ++failed;
      continue;
    }
    try {
      const auto predicted = tree_from_json(it->second["tree"]);
      const auto result = compare_trees(predicted, e.tree);
      exact += result.exact_match ? 1 : 0;
      token_sum += result.token_accuracy;
    } catch (const SchemaError&) {
      ++failed;
    } catch (const DictionaryMismatch&) {
      ++failed;
    }
  }
  const double n = total == 0 ? 1.0 : static_cast<double>(total);
  const json summary{{"split", o.split},
                     {"examples", total},
                     {"tree_accuracy", static_cast<double>(exact) / n},
                     {"token_accuracy", token_sum / n},
                     {"missing", missing},
                     {"failed", failed}};
  ctx.out << summary.dump() << "\n";
  if (!o.output.empty()) {
    write_text(o.output, summary.dump(2) + "\n");
    auto m = manifest_for(ctx, "eval-translate");
    m.inputs = {o.corpus, o.predictions};
    m.outputs = {o.output};
    m.write(o.output + ".manifest.json");
  }
  return kExitOk;
}

const std::vector<std::string> kDomains{"taxi", "highway"};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Policy synthesis from lexical decision trees", "polsynth"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(POLSYNTH_VERSION));
  app.set_config("--config", "", "key-value configuration file; flags override it");
  int config_version = kConfigVersion;
  app.add_option("--config-version", config_version, "configuration format version")
      ->check(CLI::Range(kConfigVersion, kConfigVersion))
      ->group("");

  ParseOptions parse_opts;
  auto* parse = app.add_subcommand("parse", "policy language -> tree file");
  parse->add_option("--domain", parse_opts.domain)->required()->check(CLI::IsMember(kDomains));
  parse->add_option("--in", parse_opts.input)->required()->check(CLI::ExistingFile);
  parse->add_option("--out", parse_opts.output)->required();

  ValidateOptions validate_opts;
  auto* validate_cmd = app.add_subcommand("validate", "check a tree or policy file");
  validate_cmd->add_option("--domain", validate_opts.domain)->check(CLI::IsMember(kDomains));
  validate_cmd->add_option("--in", validate_opts.input)->required()->check(CLI::ExistingFile);

  CorpusOptions corpus_opts;
  auto* corpus = app.add_subcommand("gen-corpus", "synthetic description corpus");
  corpus->add_option("--domain", corpus_opts.domain)->required()->check(CLI::IsMember(kDomains));
  corpus->add_option("--out", corpus_opts.output)->required();
  corpus->add_option("--vocab", corpus_opts.vocab, "vocabulary file (default <out>.vocab)");
  corpus->add_option("--n-base", corpus_opts.config.n_base)->capture_default_str();
  corpus->add_option("--augment", corpus_opts.config.augment_per_example)->capture_default_str();
  corpus->add_option("--seed", corpus_opts.config.seed)->capture_default_str();
  corpus->add_option("--split", corpus_opts.config.split_ratios, "train validation test ratios")
      ->capture_default_str();
  corpus->add_option("--min-depth", corpus_opts.config.min_depth)->capture_default_str();
  corpus->add_option("--max-depth", corpus_opts.config.max_depth)->capture_default_str();
  corpus->add_option("--variation", corpus_opts.config.variation)->capture_default_str();
  corpus->add_option("--synonym-rate", corpus_opts.config.synonym_rate)->capture_default_str();
  corpus->add_option("--min-count", corpus_opts.config.min_word_count)->capture_default_str();

  InitOptions init_opts;
  auto* init = app.add_subcommand("init-ddt", "tree file -> DDT parameters");
  init->add_option("--domain", init_opts.domain)->check(CLI::IsMember(kDomains));
  init->add_option("--tree", init_opts.tree)->required()->check(CLI::ExistingFile);
  init->add_option("--out", init_opts.output)->required();
  init->add_option("--alpha", init_opts.config.alpha)->capture_default_str();
  init->add_flag("--alpha-learnable", init_opts.config.alpha_learnable);
  init->add_option("--leaf-concentration", init_opts.config.leaf_concentration)
      ->capture_default_str();
  init->add_option("--leaf-mode", init_opts.leaf_mode)
      ->check(CLI::IsMember({"logits", "probabilities"}))
      ->capture_default_str();

  TrainOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "PPO training over one or more seeds");
  train_cmd->add_option("--domain", train_opts.domain)->required()->check(CLI::IsMember(kDomains));
  auto* params_opt =
      train_cmd->add_option("--params", train_opts.params, "initial parameters (DDT or MLP)")
          ->check(CLI::ExistingFile);
  auto* policy_opt = train_cmd->add_option("--policy", train_opts.policy)
                         ->check(CLI::IsMember({"random-ddt", "mlp"}))
                         ->capture_default_str();
  auto* trees_opt =
      train_cmd->add_option("--init-trees", train_opts.init_trees,
                            "candidate trees; the best after a short run is trained")
          ->check(CLI::ExistingFile);
  params_opt->excludes(policy_opt)->excludes(trees_opt);
  trees_opt->excludes(policy_opt);
  train_cmd->add_option("--select-episodes", train_opts.select_episodes)->capture_default_str();
  train_cmd->add_option("--out", train_opts.output, "output directory")->required();
  train_cmd->add_option("--label", train_opts.label);
  train_cmd->add_option("--trajectory", train_opts.trajectory, "dump one episode of run 0");
  train_cmd->add_option("--seeds", train_opts.seeds, "number of runs")->capture_default_str();
  train_cmd->add_option("--seed", train_opts.seed, "first seed")->capture_default_str();
  train_cmd->add_option("--threads", train_opts.threads)->capture_default_str();
  train_cmd->add_option("--leaves", train_opts.leaves, "random DDT leaves")->capture_default_str();
  train_cmd->add_option("--hidden", train_opts.hidden, "MLP hidden width")->capture_default_str();
  auto& ppo = train_opts.ppo;
  train_cmd->add_option("--episodes", ppo.total_episodes)->capture_default_str();
  train_cmd->add_option("--gamma", ppo.gamma)->capture_default_str();
  train_cmd->add_option("--gae-lambda", ppo.gae_lambda)->capture_default_str();
  train_cmd->add_option("--clip", ppo.clip)->capture_default_str();
  auto* lr_opt = train_cmd->add_option("--lr", ppo.learning_rate)->capture_default_str();
  train_cmd->add_option("--value-lr", ppo.value_learning_rate)->capture_default_str();
  train_cmd->add_option("--epochs", ppo.epochs)->capture_default_str();
  train_cmd->add_option("--minibatch", ppo.minibatch)->capture_default_str();
  train_cmd->add_option("--rollout", ppo.rollout_steps)->capture_default_str();
  train_cmd->add_option("--entropy-coef", ppo.entropy_coef)->capture_default_str();
  train_cmd->add_option("--value-coef", ppo.value_coef)->capture_default_str();
  train_cmd->add_option("--max-grad-norm", ppo.max_grad_norm)->capture_default_str();

  DiscretizeOptions disc_opts;
  auto* disc = app.add_subcommand("discretize", "DDT parameters -> crisp tree");
  disc->add_option("--domain", disc_opts.domain)->required()->check(CLI::IsMember(kDomains));
  disc->add_option("--params", disc_opts.params)->required()->check(CLI::ExistingFile);
  disc->add_option("--out", disc_opts.tree_out, "tree file")->required();
  disc->add_option("--out-params", disc_opts.params_out, "hard DDT parameters");

  ExplainOptions explain_opts;
  auto* explain = app.add_subcommand("explain", "render a tree");
  explain->add_option("--domain", explain_opts.domain)->check(CLI::IsMember(kDomains));
  explain->add_option("--tree", explain_opts.tree)->required()->check(CLI::ExistingFile);
  explain->add_option("--style", explain_opts.style)
      ->check(CLI::IsMember({"tree", "program", "text", "modified"}))
      ->capture_default_str();
  explain->add_option("--out", explain_opts.output, "write here instead of stdout");

  ReportOptions report_opts;
  auto* report = app.add_subcommand("report", "summary table over training logs");
  report->add_option("--logs", report_opts.logs)->required()->check(CLI::ExistingFile);
  report->add_option("--window", report_opts.window)->capture_default_str();
  report->add_option("--out", report_opts.output, "CSV file (default stdout)");

  EvalOptions eval_opts;
  auto* eval = app.add_subcommand("eval-translate", "score predicted trees against a corpus");
  eval->add_option("--corpus", eval_opts.corpus)->required()->check(CLI::ExistingFile);
  eval->add_option("--predictions", eval_opts.predictions)->required()->check(CLI::ExistingFile);
  eval->add_option("--split", eval_opts.split)
      ->check(CLI::IsMember({"train", "validation", "test", "all"}))
      ->capture_default_str();
  eval->add_option("--out", eval_opts.output, "summary JSON file");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  train_opts.lr_set = lr_opt->count() > 0;

  const Context ctx{out, err, args, app};
  try {
    if (*parse) return cmd_parse(ctx, parse_opts);
    if (*validate_cmd) return cmd_validate(ctx, validate_opts);
    if (*corpus) return cmd_gen_corpus(ctx, corpus_opts);
    if (*init) return cmd_init_ddt(ctx, init_opts);
    if (*train_cmd) return cmd_train(ctx, train_opts);
    if (*disc) return cmd_discretize(ctx, disc_opts);
    if (*explain) return cmd_explain(ctx, explain_opts);
    if (*report) return cmd_report(ctx, report_opts);
    if (*eval) return cmd_eval_translate(ctx, eval_opts);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    // Parse, schema, validation and training failures all land here.
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitUsage;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace polsynth::cli
