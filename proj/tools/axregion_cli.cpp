// Command-line front end. Exit codes: 0 ok, 1 input error, 2 config/shape
// error, 3 external service failure.
#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "axregion/abstraction.hpp"
#include "axregion/analyze.hpp"
#include "axregion/axtree.hpp"
#include "axregion/checkpoint.hpp"
#include "axregion/decomposer.hpp"
#include "axregion/metrics.hpp"
#include "axregion/pagedigest.hpp"
#include "axregion/replay.hpp"
#include "axregion/synthetic.hpp"
#include "axregion/trace.hpp"
#include "axregion/trainer.hpp"

namespace fs = std::filesystem;
using namespace axregion;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitConfig = 2;
constexpr int kExitService = 3;

struct CliFailure : std::runtime_error {
  CliFailure(int code, const std::string& what) : std::runtime_error(what), code(code) {}
  int code;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliFailure(kExitInput, "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliFailure(kExitInput, "cannot write " + path);
  out << text;
}

std::string file_url(const std::string& path) { return "file://" + fs::absolute(path).lexically_normal().string(); }

AXTree load_tree(const std::string& path, bool raw, std::optional<std::size_t> indent) {
  ParseOptions opts;
  opts.indent_spaces = indent;
  AXTree tree = parse_axtree(read_file(path), file_url(path), opts);
  return raw ? tree : preprocess(tree);
}

struct Backends {
  std::string backend = "heuristic";
  std::string selector = "keyword";
  std::string lm_config;
  std::size_t top_k = 0;
  bool no_fallback = false;
  std::size_t jobs = 4;

  std::unique_ptr<HttpChatClient> client;
  std::unique_ptr<Abstractor> abstractor;
  std::unique_ptr<RegionSelector> region_selector;
  int max_retries = 2;

  void build() {
    if (backend != "heuristic" && backend != "lm") throw CliFailure(kExitConfig, "unknown backend " + backend);
    if (selector != "keyword" && selector != "lm") throw CliFailure(kExitConfig, "unknown selector " + selector);
    if (backend == "lm" || selector == "lm") {
      const auto config = lm_config.empty() ? LmEndpointConfig{} : LmEndpointConfig::load(lm_config);
      config.validate();
      max_retries = config.max_retries;
      if (jobs == 0) jobs = static_cast<std::size_t>(config.concurrency);
      client = std::make_unique<HttpChatClient>(config);
    }
    if (backend == "lm") abstractor = std::make_unique<LmAbstractor>(*client, max_retries);
    else abstractor = std::make_unique<HeuristicAbstractor>();
    if (selector == "lm") region_selector = std::make_unique<LmSelector>(*client);
    else region_selector = std::make_unique<KeywordSelector>(top_k ? std::optional<std::size_t>(top_k) : std::nullopt);
  }

  // With --no-fallback, any LM region answered by the heuristic is a service failure.
  void check_fallbacks(const std::vector<RegionAbstraction>& abstractions) const {
    if (backend != "lm" || !no_fallback) return;
    for (const auto& a : abstractions)
      if (a.backend == AbstractionBackend::kHeuristic && a.purpose != "structural wrapper")
        throw CliFailure(kExitService, "abstraction endpoint failed for region " + a.region_id);
  }
};

nlohmann::ordered_json partition_json(const RegionPartition& partition, double tau,
                                      const std::vector<RegionAbstraction>* abstractions) {
  nlohmann::ordered_json j;
  j["schema"] = "axregion.partition/1";
  j["url"] = partition.url;
  j["node_count"] = partition.node_count;
  j["tau"] = tau;
  j["region_count"] = partition.regions.size();
  auto regions = nlohmann::ordered_json::array();
  for (const auto& r : partition.regions) {
    nlohmann::ordered_json rj;
    rj["id"] = r.label();
    rj["root"] = r.root_id;
    rj["members"] = r.members;
    if (abstractions) {
      const auto& a = (*abstractions)[r.index];
      rj["purpose"] = a.purpose;
      rj["state_summary"] = a.state_summary;
      rj["backend"] = std::string(backend_name(a.backend));
    }
    regions.push_back(std::move(rj));
  }
  j["regions"] = std::move(regions);
  return j;
}

// ---- parse ----
int cmd_parse(const std::string& in, const std::string& out, bool raw, std::optional<std::size_t> indent) {
  const AXTree tree = load_tree(in, raw, indent);
  write_output(out, serialize_axtree(tree));
  (out.empty() || out == "-" ? std::cerr : std::cout) << "nodes: " << tree.node_count() << "\n";
  return kExitOk;
}

// ---- decompose ----
int cmd_decompose(const std::string& in, const std::string& model_path, std::optional<double> tau,
                  bool abstract, const std::string& out, Backends& backends) {
  DecompositionModel model = load_checkpoint(model_path);
  if (tau) model.set_tau(*tau);
  const AXTree tree = load_tree(in, false, std::nullopt);
  const RegionPartition partition = decompose(tree, model);
  std::vector<RegionAbstraction> abstractions;
  if (abstract) {
    backends.build();
    abstractions = abstract_partition(partition, tree, *backends.abstractor, backends.jobs);
    backends.check_fallbacks(abstractions);
  }
  write_output(out, partition_json(partition, model.tau(), abstract ? &abstractions : nullptr).dump(2) + "\n");
  (out.empty() || out == "-" ? std::cerr : std::cout) << "regions: " << partition.regions.size() << "\n";
  return kExitOk;
}

// ---- train ----
int cmd_train(const std::string& data_dir, const std::string& config_path, const std::string& out,
              const std::string& log_path, std::optional<int> epochs, std::optional<std::uint64_t> seed,
              bool tune) {
  TrainConfig config = config_path.empty() ? TrainConfig{} : TrainConfig::load(config_path);
  if (epochs) config.epochs = *epochs;
  if (seed) config.seed = *seed;
  config.validate();
  if (!fs::is_directory(data_dir)) throw CliFailure(kExitInput, "not a directory: " + data_dir);
  const auto dataset = read_labeled_corpus(data_dir);
  if (dataset.empty()) throw CliFailure(kExitConfig, "no labeled trees in " + data_dir);

  std::ostringstream log;
  log << "epoch\ttrain_loss\ttrain_edge_f1\tval_edge_p\tval_edge_r\tval_edge_f1\n";
  auto on_epoch = [&](const EpochLog& e) {
    char line[256];
    std::snprintf(line, sizeof(line), "%d\t%.6f\t%.4f\t%.4f\t%.4f\t%.4f\n", e.epoch, e.train_loss,
                  e.train_edge.f1, e.validation_edge.precision, e.validation_edge.recall,
                  e.validation_edge.f1);
    log << line;
    std::cout << line << std::flush;
  };
  std::cout << "trees: " << dataset.size() << "  epochs: " << config.epochs << "  seed: " << config.seed << "\n";
  auto result = train_with_log(dataset, config, on_epoch);
  auto& model = result.model;
  if (tune && !result.validation_indices.empty()) {
    ValidationSet validation;
    for (auto i : result.validation_indices)
      validation.emplace_back(dataset[i].tree, partition_from_labels(dataset[i].tree, dataset[i].labels));
    model.set_tau(tune_threshold(model, validation, config.taus));
  }
  std::cout << "best epoch: " << model.metadata().best_epoch
            << "  held-out edge-F1: " << model.metadata().best_val_edge_f1 << "  tau: " << model.tau() << "\n";
  if (!log_path.empty()) write_output(log_path, log.str());
  save_checkpoint(model, out);
  return kExitOk;
}

// ---- eval ----
std::vector<std::string> stems(const std::string& dir, const std::string& ext) {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ext) out.push_back(e.path().stem().string());
  std::sort(out.begin(), out.end());
  return out;
}

int cmd_eval(const std::string& pred_dir, const std::string& truth_dir, const std::string& model_path,
             std::vector<double> taus, double iou, const std::string& out) {
  if (!fs::is_directory(truth_dir)) throw CliFailure(kExitInput, "not a directory: " + truth_dir);
  std::vector<std::pair<AXTree, RegionPartition>> truth;
  std::vector<std::string> names;
  for (const auto& stem : stems(truth_dir, ".axtree")) {
    const auto tree_path = (fs::path(truth_dir) / (stem + ".axtree")).string();
    const auto regions_path = (fs::path(truth_dir) / (stem + ".regions")).string();
    if (!fs::exists(regions_path)) continue;
    AXTree tree = parse_axtree(read_file(tree_path), file_url(tree_path));
    auto partition = partition_from_region_roots(tree, parse_region_roots(read_file(regions_path)));
    truth.emplace_back(std::move(tree), std::move(partition));
    names.push_back(stem);
  }
  if (truth.empty()) throw CliFailure(kExitConfig, "no ground-truth pages in " + truth_dir);

  std::ostringstream report;
  report << "# axregion.eval_report/1\n";
  report << "pages: " << truth.size() << "  iou threshold: " << iou << "\n";
  char line[256];
  if (!pred_dir.empty()) {
    RegionCounts total;
    EdgeCounts edges;
    report << "page\tmatched\tpredicted\ttruth\tprecision\trecall\tf1\n";
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const auto pred_path = (fs::path(pred_dir) / (names[i] + ".regions")).string();
      if (!fs::exists(pred_path)) throw CliFailure(kExitInput, "missing prediction " + pred_path);
      const auto& tree = truth[i].first;
      const auto pred = partition_from_region_roots(tree, parse_region_roots(read_file(pred_path)));
      const auto m = region_prf(pred, truth[i].second, iou);
      total += m.counts;
      edges += edge_counts(labels_from_partition(tree, pred), labels_from_partition(tree, truth[i].second));
      std::snprintf(line, sizeof(line), "%s\t%zu\t%zu\t%zu\t%.4f\t%.4f\t%.4f\n", names[i].c_str(),
                    m.counts.matched, m.counts.predicted, m.counts.truth, m.precision, m.recall, m.f1);
      report << line;
    }
    const auto s = total.scores();
    const auto e = edges.scores();
    std::snprintf(line, sizeof(line), "pooled\t%zu\t%zu\t%zu\t%.4f\t%.4f\t%.4f\n", total.matched,
                  total.predicted, total.truth, s.precision, s.recall, s.f1);
    report << line;
    std::snprintf(line, sizeof(line), "edge\tP %.4f\tR %.4f\tF1 %.4f\n", e.precision, e.recall, e.f1);
    report << line;
  } else {
    if (model_path.empty()) throw CliFailure(kExitConfig, "eval needs --pred or --model");
    const auto model = load_checkpoint(model_path);
    if (taus.empty()) taus = TrainConfig{}.taus;
    const auto rows = threshold_sweep(
        [&](const AXTree& tree, double tau) { return decompose_at(tree, model, tau).partition; }, truth, taus);
    report << "tau\tmatched\tpredicted\ttruth\tprecision\trecall\tf1\n";
    for (const auto& r : rows) {
      std::snprintf(line, sizeof(line), "%.2f\t%zu\t%zu\t%zu\t%.4f\t%.4f\t%.4f\n", r.tau, r.counts.matched,
                    r.counts.predicted, r.counts.truth, r.scores.precision, r.scores.recall, r.scores.f1);
      report << line;
    }
    const double best = tune_threshold(
        [&](const AXTree& tree, double tau) { return decompose_at(tree, model, tau).partition; }, truth, taus);
    report << "best tau: " << best << "\n";
  }
  write_output(out, report.str());
  return kExitOk;
}

// ---- digest ----
int cmd_digest(const std::string& trace_path, const std::string& model_path, const std::string& out_dir,
               Backends& backends) {
  const auto trace = load_trace(trace_path);
  if (trace.empty()) throw CliFailure(kExitConfig, "trace has no records");
  const auto model = load_checkpoint(model_path);
  backends.build();
  auto partitioner = Partitioner::from_model(model);
  ReplayBackends rb{partitioner, *backends.abstractor, *backends.region_selector, TokenCounter{}, backends.jobs};
  const auto result = replay(trace, rb, fs::path(trace_path).filename().string());
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    for (std::size_t i = 0; i < result.digests.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "step_%03zu.digest", i);
      write_output((fs::path(out_dir) / name).string(), result.digests[i]);
    }
    write_output((fs::path(out_dir) / "report.json").string(), result.report.to_json());
    write_output((fs::path(out_dir) / "report.txt").string(), result.report.to_text());
  } else {
    for (std::size_t i = 0; i < result.digests.size(); ++i)
      std::cout << "=== step " << result.report.steps[i].step << " ===\n" << result.digests[i];
    std::cout << "\n";
  }
  std::cout << result.report.to_text();
  return kExitOk;
}

// ---- analyze ----
int cmd_analyze(const std::string& trace_path, std::uint64_t seed, const std::string& json_out) {
  const auto trace = load_trace(trace_path);
  AnalyzeOptions options;
  options.seed = seed;
  const auto report = analyze_trace(trace, options);
  std::cout << report.to_text();
  if (!json_out.empty()) write_output(json_out, report.to_json());
  return kExitOk;
}

// ---- gen-synthetic ----
int cmd_gen(const std::string& out_dir, std::size_t count, std::uint64_t seed, const std::string& rule_ckpt) {
  const auto corpus = synthetic_corpus(count, seed);
  write_labeled_corpus(out_dir, corpus);
  std::cout << "wrote " << corpus.size() << " labeled trees to " << out_dir << "\n";
  if (!rule_ckpt.empty()) {
    save_checkpoint(rule_model(), rule_ckpt);
    std::cout << "wrote rule checkpoint " << rule_ckpt << "\n";
  }
  return kExitOk;
}

int classify(const std::exception& e) {
  if (auto* f = dynamic_cast<const CliFailure*>(&e)) return f->code;
  if (dynamic_cast<const ShapeMismatch*>(&e) || dynamic_cast<const ConfigError*>(&e) ||
      dynamic_cast<const VocabularyError*>(&e) || dynamic_cast<const AnalyzeError*>(&e))
    return kExitConfig;
  if (auto* t = dynamic_cast<const TrainError*>(&e))
    return t->kind() == TrainError::Kind::kEmptyDataset ? kExitConfig : kExitInput;
  if (auto* a = dynamic_cast<const AbstractionError*>(&e))
    return a->kind() == AbstractionError::Kind::kConfig ? kExitConfig : kExitService;
  return kExitInput;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Functional-region decomposition and page digests for accessibility trees"};
  app.require_subcommand(1);
  std::uint64_t seed = 42;
  std::size_t jobs = 4;
  int verbosity = 0;
  app.add_option("--seed", seed, "Seed for sampling and synthetic data");
  app.add_option("--jobs,-j", jobs, "Parallel workers where supported");
  app.add_flag("-v,--verbose", verbosity, "More output");

  Backends backends;
  auto add_backend_flags = [&](CLI::App* sub) {
    sub->add_option("--backend", backends.backend, "Abstraction backend: heuristic or lm")->capture_default_str();
    sub->add_option("--lm-config", backends.lm_config, "JSON endpoint config for the lm backend");
    sub->add_flag("--no-fallback", backends.no_fallback, "Exit 3 when the lm backend fails for any region");
  };

  std::string in, out, model_path, config_path, log_path, data_dir, pred_dir, truth_dir, trace_path, json_out,
      rule_ckpt;
  bool raw = false, abstract = false, no_tune = false;
  std::optional<std::size_t> indent;
  std::optional<double> tau;
  std::optional<int> epochs;
  std::vector<double> taus;
  double iou = 0.5;
  std::size_t count = 200;

  auto* parse = app.add_subcommand("parse", "Parse, preprocess and print a tree in canonical form");
  parse->add_option("input", in, "AXTree text file")->required();
  parse->add_option("--out,-o", out, "Output file (default stdout)");
  parse->add_flag("--raw", raw, "Skip preprocessing");
  parse->add_option("--indent-spaces", indent, "Spaces per level (default: detect)");

  auto* dec = app.add_subcommand("decompose", "Split a tree into functional regions");
  dec->add_option("input", in, "AXTree text file")->required();
  dec->add_option("--model,-m", model_path, "Checkpoint")->required();
  dec->add_option("--tau", tau, "Cut threshold override");
  dec->add_flag("--abstract", abstract, "Add purposes and state summaries");
  dec->add_option("--out,-o", out, "Output file (default stdout)");
  add_backend_flags(dec);

  auto* tr = app.add_subcommand("train", "Train a decomposition model on a labeled directory");
  tr->add_option("data_dir", data_dir, "Directory of .axtree/.regions pairs")->required();
  tr->add_option("--config,-c", config_path, "Training config file");
  tr->add_option("--out,-o", out, "Checkpoint path")->required();
  tr->add_option("--log", log_path, "Per-epoch metrics log (TSV)");
  tr->add_option("--epochs", epochs, "Override epochs");
  tr->add_flag("--no-tune", no_tune, "Keep the training tau instead of tuning on the validation split");

  auto* ev = app.add_subcommand("eval", "Region-level evaluation against ground truth");
  ev->add_option("--truth", truth_dir, "Directory of .axtree/.regions ground truth")->required();
  ev->add_option("--pred", pred_dir, "Directory of predicted .regions files");
  ev->add_option("--model,-m", model_path, "Checkpoint to sweep instead of --pred");
  ev->add_option("--taus", taus, "Thresholds to sweep")->delimiter(',');
  ev->add_option("--iou", iou, "IoU match threshold")->capture_default_str();
  ev->add_option("--out,-o", out, "Report file (default stdout)");

  auto* dg = app.add_subcommand("digest", "Replay a trace through page digests");
  dg->add_option("trace", trace_path, "JSONL trace")->required();
  dg->add_option("--model,-m", model_path, "Checkpoint")->required();
  dg->add_option("--selector", backends.selector, "Region selector: keyword or lm")->capture_default_str();
  dg->add_option("--top-k", backends.top_k, "Keyword selector keeps at most k regions");
  dg->add_option("--out-dir", out, "Write per-step digests and reports here");
  add_backend_flags(dg);

  auto* an = app.add_subcommand("analyze", "LCA-depth and change-ratio statistics of a trace");
  an->add_option("trace", trace_path, "JSONL trace")->required();
  an->add_option("--json", json_out, "Also write a JSON report");

  auto* gen = app.add_subcommand("gen-synthetic", "Write a synthetic labeled corpus");
  gen->add_option("out_dir", out, "Output directory")->required();
  gen->add_option("--count,-n", count, "Number of trees")->capture_default_str();
  gen->add_option("--rule-checkpoint", rule_ckpt, "Also write the hand-set rule checkpoint here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  backends.jobs = jobs;

  try {
    if (*parse) return cmd_parse(in, out, raw, indent);
    if (*dec) return cmd_decompose(in, model_path, tau, abstract, out, backends);
    if (*tr) {
      std::optional<std::uint64_t> seed_override;
      if (app.count("--seed")) seed_override = seed;
      return cmd_train(data_dir, config_path, out, log_path, epochs, seed_override, !no_tune);
    }
    if (*ev) return cmd_eval(pred_dir, truth_dir, model_path, taus, iou, out);
    if (*dg) return cmd_digest(trace_path, model_path, out, backends);
    if (*an) return cmd_analyze(trace_path, seed, json_out);
    if (*gen) return cmd_gen(out, count, seed, rule_ckpt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return classify(e);
  }
  (void)verbosity;
  return kExitOk;
}
