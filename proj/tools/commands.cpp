#include "commands.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "docgraph/doc/document.hpp"
#include "docgraph/nn/checkpoint.hpp"
#include "docgraph/synth/generator.hpp"
#include "docgraph/train/evaluate.hpp"
#include "docgraph/train/gradcheck.hpp"
#include "docgraph/train/trainer.hpp"
#include "run_config.hpp"

#ifndef DOCGRAPH_GIT_DESCRIBE
#define DOCGRAPH_GIT_DESCRIBE "unknown"
#endif

namespace docgraph::cli {

namespace fs = std::filesystem;
using nlohmann::json;

void write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

json RunManifest::to_json() const {
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return {{"command", command},  {"config", config},         {"seed", seed},
          {"version", version},  {"outputs", outputs},       {"duration_seconds", duration_seconds},
          {"finished_at", stamp}};
}

std::string version_string() { return std::string("docgraph ") + DOCGRAPH_GIT_DESCRIBE; }

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::uint64_t seed = 1;
  std::string out_dir;
  std::size_t jobs = 1;
  std::string mode;
};

void add_common(CLI::App* app, Common& c, bool needs_out_dir) {
  app->add_option("--config", c.config_path, "INI config with [generator], [model], [train], [ablate] sections")
      ->check(CLI::ExistingFile);
  app->add_option("--set", c.overrides, "Override a config value: section.key=value (repeatable)");
  app->add_option("--seed", c.seed, "Seed for every random draw")->capture_default_str();
  auto* out = app->add_option("--out-dir", c.out_dir, "Directory for outputs and the run manifest");
  if (needs_out_dir) out->required();
  app->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--mode", c.mode, "baseline1, baseline2, gcn or gcn_multitask")
      ->check(CLI::IsMember({"baseline1", "baseline2", "gcn", "gcn_multitask"}));
}

ConfigTree load_tree(const Common& c) {
  ConfigTree tree;
  if (!c.config_path.empty()) tree = read_config_file(c.config_path);
  for (const auto& o : c.overrides) apply_override(tree, o);
  if (!c.mode.empty()) tree.put("model.mode", c.mode);
  return tree;
}

class Run {
 public:
  Run(std::string command, const Common& common)
      : dir_(common.out_dir), start_(std::chrono::steady_clock::now()) {
    manifest_.command = std::move(command);
    manifest_.seed = common.seed;
    manifest_.version = version_string();
    if (!dir_.empty()) fs::create_directories(dir_);
  }

  bool has_dir() const { return !dir_.empty(); }
  void set_config(json config) { manifest_.config = std::move(config); }

  fs::path output(const std::string& name) {
    manifest_.outputs.push_back(name);
    return dir_ / name;
  }
  void write(const std::string& name, const std::string& content) { write_file_atomic(output(name), content); }

  void finish() {
    manifest_.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    if (has_dir()) write_file_atomic(dir_ / "manifest.json", manifest_.to_json().dump(2) + "\n");
  }

 private:
  fs::path dir_;
  std::chrono::steady_clock::time_point start_;
  RunManifest manifest_;
};

struct DataPaths {
  std::string data_dir, train, val, test;

  void add(CLI::App* app) {
    app->add_option("--data", data_dir, "Directory holding train.ndjson, val.ndjson and test.ndjson")
        ->check(CLI::ExistingDirectory);
    app->add_option("--train", train, "Training corpus (NDJSON)");
    app->add_option("--val", val, "Validation corpus (NDJSON)");
    app->add_option("--test", test, "Test corpus (NDJSON)");
  }

  void resolve() {
    auto pick = [&](std::string& slot, const char* name) {
      if (slot.empty() && !data_dir.empty() && fs::exists(fs::path(data_dir) / name)) {
        slot = (fs::path(data_dir) / name).string();
      }
    };
    pick(train, "train.ndjson");
    pick(val, "val.ndjson");
    pick(test, "test.ndjson");
    if (train.empty()) throw ConfigError("no training corpus: pass --train or --data");
  }
};

std::vector<doc::Document> read_optional(const std::string& path, doc::TokenizerMode mode) {
  return path.empty() ? std::vector<doc::Document>{} : doc::read_corpus(path, mode);
}

std::string metrics_table(const train::Metrics& m) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-20s %9s %9s %9s %8s\n", "entity", "precision", "recall", "f1", "support");
  out << line;
  for (const auto& [type, s] : m.per_type) {
    std::snprintf(line, sizeof line, "%-20s %9.4f %9.4f %9.4f %8zu\n", type.c_str(), s.precision(), s.recall(), s.f1(),
                  s.support());
    out << line;
  }
  std::snprintf(line, sizeof line, "%-20s %9.4f %9.4f %9.4f %8zu\n", "micro", m.micro.precision(), m.micro.recall(),
                m.micro.f1(), m.micro.support());
  out << line;
  std::snprintf(line, sizeof line, "%-20s %9.4f %9.4f %9.4f %8zu\n", "ambiguous subset", m.ambiguous.precision(),
                m.ambiguous.recall(), m.ambiguous.f1(), m.ambiguous.support());
  out << line;
  if (m.segment_accuracy) {
    std::snprintf(line, sizeof line, "segment classification accuracy %.4f\n", *m.segment_accuracy);
    out << line;
  }
  return out.str();
}

int cmd_generate(const Common& c) {
  Run run("generate", c);
  const ConfigTree tree = load_tree(c);
  const synth::GeneratorConfig g = generator_config(tree, c.seed);
  run.set_config({{"generator", synth::to_json(g)}});
  const synth::Corpus corpus = synth::generate_corpus(g, c.jobs);
  run.write("train.ndjson", doc::corpus_to_ndjson(corpus.train));
  run.write("val.ndjson", doc::corpus_to_ndjson(corpus.val));
  run.write("test.ndjson", doc::corpus_to_ndjson(corpus.test));
  std::cout << "generated " << corpus.train.size() << " train, " << corpus.val.size() << " val, "
            << corpus.test.size() << " test documents in " << c.out_dir << "\n";
  run.finish();
  return kExitOk;
}

int cmd_train(const Common& c, DataPaths data, bool quiet) {
  Run run("train", c);
  const ConfigTree tree = load_tree(c);
  const train::TrainConfig config = train_config(tree, c.seed, c.jobs);
  data.resolve();
  const auto train_docs = doc::read_corpus(data.train, config.tokenizer);
  const auto val_docs = read_optional(data.val, config.tokenizer);
  const auto test_docs = read_optional(data.test, config.tokenizer);

  train::TrainHooks hooks;
  if (!quiet) {
    hooks.on_epoch = [](const train::EpochRecord& r) {
      std::fprintf(stderr, "epoch %3zu  loss %.6f  val_f1 %.4f\n", r.epoch, r.loss, r.val_f1);
    };
  }
  const train::TrainResult result = train::train(train_docs, val_docs, config, hooks);
  if (result.dropped > 0) {
    std::fprintf(stderr, "warning: %zu of %zu annotations could not be aligned and were skipped\n", result.dropped,
                 result.dropped + result.aligned);
    for (std::size_t i = 0; i < result.warnings.size() && i < 5; ++i) {
      std::fprintf(stderr, "  %s\n", result.warnings[i].c_str());
    }
  }
  train::save_model(result.model, run.output("model.json"));
  run.write("history.csv", train::history_to_csv(result.history));

  const auto& eval_docs = !test_docs.empty() ? test_docs : !val_docs.empty() ? val_docs : train_docs;
  const char* eval_name = !test_docs.empty() ? "test" : !val_docs.empty() ? "val" : "train";
  const train::Metrics m = train::evaluate(result.model, eval_docs, config.jobs);
  json metrics = train::metrics_to_json(m, config);
  metrics["corpus"] = eval_name;
  run.write("metrics.json", metrics.dump(2) + "\n");
  run.set_config({{"train", train::to_json(config)},
                  {"inputs", {{"train", data.train}, {"val", data.val}, {"test", data.test}}},
                  {"best_epoch", result.best_epoch},
                  {"aligned_annotations", result.aligned},
                  {"dropped_annotations", result.dropped}});
  std::cout << "mode " << train::to_string(config.mode) << ", " << result.history.size() << " epochs, best epoch "
            << result.best_epoch << "\n"
            << eval_name << " metrics:\n"
            << metrics_table(m);
  run.finish();
  return kExitOk;
}

int cmd_evaluate(const Common& c, const std::string& checkpoint, const std::string& corpus_path) {
  Run run("evaluate", c);
  const train::Model model = train::load_model(checkpoint);
  const auto docs = doc::read_corpus(corpus_path, model.config.tokenizer);
  const train::Metrics m = train::evaluate(model, docs, c.jobs);
  run.write("metrics.json", train::metrics_to_json(m, model.config).dump(2) + "\n");
  run.set_config({{"checkpoint", checkpoint}, {"corpus", corpus_path}, {"train", train::to_json(model.config)}});
  std::cout << metrics_table(m);
  run.finish();
  return kExitOk;
}

int cmd_extract(const Common& c, const std::string& checkpoint, const std::string& input, bool with_attention) {
  Run run("extract", c);
  const train::Model model = train::load_model(checkpoint);
  const auto docs = doc::read_corpus(input, model.config.tokenizer);
  const auto predictions = train::predict_corpus(model, docs, c.jobs);
  json extractions = json::array();
  json attention = json::array();
  std::size_t entities = 0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    extractions.push_back(train::extraction_to_json(predictions[d]));
    entities += predictions[d].entities.size();
    if (with_attention) {
      std::vector<int> ids;
      for (const auto& s : docs[d].segments) ids.push_back(s.id);
      json a = gconv::attention_to_json(ids, predictions[d].attention);
      a["doc_id"] = docs[d].doc_id;
      attention.push_back(std::move(a));
    }
  }
  run.write("extractions.json", extractions.dump(2) + "\n");
  if (with_attention) run.write("attention.json", attention.dump() + "\n");
  run.set_config({{"checkpoint", checkpoint}, {"input", input}, {"train", train::to_json(model.config)}});
  std::cout << "extracted " << entities << " entities from " << docs.size() << " documents\n";
  run.finish();
  return kExitOk;
}

std::string cell_file(const std::string& name) {
  std::string f = name;
  for (char& ch : f) {
    if (ch == '/') ch = '_';
  }
  return "metrics_" + f + ".json";
}

int cmd_ablate(const Common& c, DataPaths data) {
  Run run("ablate", c);
  const ConfigTree tree = load_tree(c);
  const train::TrainConfig base = train_config(tree, c.seed, 1);
  const auto grid = ablation_grid(tree, base);
  data.resolve();
  const auto train_docs = doc::read_corpus(data.train, base.tokenizer);
  const auto val_docs = read_optional(data.val, base.tokenizer);
  const auto test_docs = read_optional(data.test, base.tokenizer);
  const auto& eval_docs = !test_docs.empty() ? test_docs : !val_docs.empty() ? val_docs : train_docs;

  std::vector<json> results(grid.size());
  std::atomic<std::size_t> next{0};
  std::mutex print;
  std::vector<std::exception_ptr> errors(std::min(c.jobs, grid.size()));
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < errors.size(); ++w) {
    workers.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < grid.size(); i = next++) {
          const auto result = train::train(train_docs, val_docs, grid[i].config);
          const auto m = train::evaluate(result.model, eval_docs, 1);
          results[i] = train::metrics_to_json(m, grid[i].config);
          results[i]["best_epoch"] = result.best_epoch;
          std::lock_guard<std::mutex> lock(print);
          std::fprintf(stderr, "%-45s micro_f1 %.4f  ambiguous_f1 %.4f\n", grid[i].name.c_str(), m.micro.f1(),
                       m.ambiguous.f1());
        }
      } catch (...) {
        errors[w] = std::current_exception();
        next = grid.size();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::string csv = "cell,mode,ablation,layers,seed,micro_f1,ambiguous_f1,segment_accuracy\n";
  std::map<std::string, std::pair<double, std::size_t>> mean;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const json& r = results[i];
    run.write(cell_file(grid[i].name), r.dump(2) + "\n");
    char row[256];
    std::snprintf(row, sizeof row, "%s,%s,%s,%zu,%llu,%.17g,%.17g,%s\n", grid[i].name.c_str(),
                  r["mode"].get<std::string>().c_str(), r["ablation"].get<std::string>().c_str(),
                  grid[i].config.layers, static_cast<unsigned long long>(grid[i].config.seed),
                  r["micro_f1"].get<double>(), r["ambiguous"]["f1"].get<double>(),
                  r.contains("segment_accuracy") ? std::to_string(r["segment_accuracy"].get<double>()).c_str() : "");
    csv += row;
    const std::string key = r["mode"].get<std::string>() + " | " + r["ablation"].get<std::string>() + " | " +
                            std::to_string(grid[i].config.layers);
    if (!mean.count(key)) order.push_back(key);
    mean[key].first += r["micro_f1"].get<double>();
    mean[key].second += 1;
  }
  run.write("summary.csv", csv);
  std::string md = "| mode | ablation | layers | seeds | mean micro-F1 |\n|---|---|---|---|---|\n";
  for (const auto& key : order) {
    char row[160];
    std::snprintf(row, sizeof row, " | %zu | %.4f |\n", mean[key].second, mean[key].first / mean[key].second);
    md += "| " + key + row;
  }
  run.write("summary.md", md);
  run.set_config({{"train", train::to_json(base)},
                  {"grid", [&] {
                     json cells = json::array();
                     for (const auto& g : grid) cells.push_back(g.name);
                     return cells;
                   }()},
                  {"inputs", {{"train", data.train}, {"val", data.val}, {"test", data.test}}}});
  std::cout << md;
  run.finish();
  return kExitOk;
}

int cmd_gradcheck(const Common& c, const std::string& mutate) {
  Run run("gradcheck", c);
  if (!mutate.empty()) nn::Tape::inject_sign_flip(mutate);
  json report = json::array();
  double worst = 0.0;
  for (const auto& config : train::gradcheck_suite()) {
    const auto check = train::check_model_gradients(config, c.seed);
    worst = std::max(worst, check.report.max_rel_error);
    std::printf("%-52s max_rel_error %.3e  (point seed %llu, min |grad| %.2e)\n", check.label.c_str(),
                check.report.max_rel_error, static_cast<unsigned long long>(check.point_seed),
                check.min_abs_gradient);
    json components = json::object();
    for (const auto& [name, err] : check.per_component) {
      std::printf("    %-20s %.3e\n", name.c_str(), err);
      components[name] = err;
    }
    report.push_back({{"model", check.label},
                      {"max_rel_error", check.report.max_rel_error},
                      {"point_seed", check.point_seed},
                      {"min_abs_gradient", check.min_abs_gradient},
                      {"worst", {{"param", check.report.worst.param},
                                 {"index", check.report.worst.index},
                                 {"analytic", check.report.worst.analytic},
                                 {"numeric", check.report.worst.numeric}}},
                      {"components", components}});
  }
  nn::Tape::inject_sign_flip("");
  const bool ok = worst < 1e-4;
  std::printf("%s: max relative error %.3e (threshold 1e-4)\n", ok ? "PASS" : "FAIL", worst);
  if (run.has_dir()) {
    run.write("gradcheck.json", json{{"max_rel_error", worst}, {"pass", ok}, {"models", report}}.dump(2) + "\n");
  }
  run.set_config({{"eps", 1e-5}, {"mutate", mutate}});
  run.finish();
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Entity extraction from visually rich documents with graph convolution and BiLSTM-CRF"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  Common gen_c, train_c, eval_c, extract_c, ablate_c, grad_c;
  DataPaths train_data, ablate_data;
  bool quiet = false;
  std::string eval_ckpt, eval_corpus, extract_ckpt, extract_input, mutate;
  bool attention = false;

  auto* gen = app.add_subcommand("generate", "Write a synthetic labeled corpus (train/val/test NDJSON)");
  add_common(gen, gen_c, true);

  auto* tr = app.add_subcommand("train", "Train a model and write checkpoint, history and metrics");
  add_common(tr, train_c, true);
  train_data.add(tr);
  tr->add_flag("--quiet", quiet, "Do not print per-epoch progress");

  auto* ev = app.add_subcommand("evaluate", "Score a checkpoint on a labeled corpus");
  add_common(ev, eval_c, true);
  ev->add_option("--checkpoint", eval_ckpt, "Model checkpoint")->required()->check(CLI::ExistingFile);
  ev->add_option("--corpus", eval_corpus, "Labeled corpus (NDJSON)")->required();

  auto* ex = app.add_subcommand("extract", "Extract entities from documents");
  add_common(ex, extract_c, true);
  ex->add_option("--checkpoint", extract_ckpt, "Model checkpoint")->required()->check(CLI::ExistingFile);
  ex->add_option("--input", extract_input, "Documents (NDJSON); annotations are ignored")->required();
  ex->add_flag("--attention", attention, "Also write per-layer attention matrices");

  auto* ab = app.add_subcommand("ablate", "Train and score every cell of an ablation / depth grid");
  add_common(ab, ablate_c, true);
  ablate_data.add(ab);

  auto* gc = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients on a micro model");
  add_common(gc, grad_c, false);
  gc->add_option("--mutate", mutate, "Negate the backward pass of this op (e.g. matmul) to test the check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_generate(gen_c);
    if (*tr) return cmd_train(train_c, train_data, quiet);
    if (*ev) return cmd_evaluate(eval_c, eval_ckpt, eval_corpus);
    if (*ex) return cmd_extract(extract_c, extract_ckpt, extract_input, attention);
    if (*ab) return cmd_ablate(ablate_c, ablate_data);
    if (*gc) return cmd_gradcheck(grad_c, mutate);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace docgraph::cli
