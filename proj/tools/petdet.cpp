// petdet: train models, detect potentially euphemistic terms, evaluate on an
// annotated corpus, and check a remote scoring server.
//
// Exit codes: 0 success, 1 usage, 2 I/O or data error, 3 scorer protocol error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "petdet/petdet.hpp"

#ifndef PETDET_DATA_DIR
#define PETDET_DATA_DIR "data"
#endif

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kIo = 2, kProtocol = 3 };

struct CommonOptions {
  std::string config_path;
  std::string models_dir = "models";
  std::string data_dir;
  std::optional<std::string> scorer;
  std::optional<std::string> endpoint;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON pipeline configuration");
  cmd->add_option("--models-dir", o.models_dir, "Directory holding the trained models")->capture_default_str();
  cmd->add_option("--data-dir", o.data_dir, "Directory with bundled stopword/lexicon files");
  cmd->add_option("--scorer", o.scorer, "Sentiment backend")->check(CLI::IsMember({"lexicon", "remote"}));
  cmd->add_option("--endpoint", o.endpoint, "Remote scorer base URL, e.g. http://127.0.0.1:8571");
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--workers", o.workers, "Parallel sentence workers")->check(CLI::PositiveNumber);
}

petdet::PipelineConfig resolve_config(const CommonOptions& o) {
  petdet::PipelineConfig cfg = o.config_path.empty() ? petdet::PipelineConfig{} : petdet::load_config(o.config_path);
  if (o.scorer) cfg.scorer = *o.scorer;
  if (o.endpoint) cfg.endpoint = *o.endpoint;
  if (o.seed) cfg.rng_seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  cfg.validate();
  return cfg;
}

std::filesystem::path data_dir(const CommonOptions& o) {
  if (!o.data_dir.empty()) return o.data_dir;
  if (const char* env = std::getenv("PETDET_DATA_DIR"); env && *env) return env;
  return PETDET_DATA_DIR;
}

petdet::Pipeline open_pipeline(const CommonOptions& o, const petdet::PipelineConfig& cfg) {
  auto models = petdet::Models::load(o.models_dir);
  auto res = petdet::load_resources(cfg, data_dir(o));
  return petdet::Pipeline(std::move(models), std::move(res.stopwords), std::move(res.topics), std::move(res.scorer),
                          cfg);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw petdet::IoError("cannot write " + path);
  return out;
}

int run_train(const CommonOptions& o, const std::string& corpus_path) {
  const auto cfg = resolve_config(o);
  const auto corpus = petdet::load_corpus(corpus_path);
  std::cerr << "read " << corpus.size() << " sentences from " << corpus_path << '\n';
  const auto models = petdet::train_models(corpus, cfg);
  models.save(o.models_dir);
  std::ofstream(std::filesystem::path(o.models_dir) / "config.json") << petdet::to_json(cfg).dump(2) << '\n';
  std::cerr << "phraser pass 1: " << models.phraser.first.accepted_bigrams().size() << " phrases; pass 2: "
            << models.phraser.second.accepted_bigrams().size() << " phrases; embedding vocabulary: "
            << models.embedding.size() << " x " << models.embedding.dim() << '\n';
  return kOk;
}

int run_detect(const CommonOptions& o, const std::vector<std::string>& sentences, const std::string& corpus_path,
               const std::string& shift_path, bool table) {
  const auto cfg = resolve_config(o);
  std::vector<petdet::Sentence> input;
  for (const auto& s : sentences) input.push_back(petdet::tokenize(s));
  if (!corpus_path.empty()) {
    auto more = petdet::load_corpus(corpus_path);
    input.insert(input.end(), more.begin(), more.end());
  }
  if (input.empty()) throw CLI::ValidationError("detect", "give --sentence or --corpus");

  const auto pipeline = open_pipeline(o, cfg);
  const auto detections = pipeline.detect_all(input);
  std::optional<std::ofstream> shifts;
  if (!shift_path.empty()) shifts = open_output(shift_path);
  for (const auto& d : detections) {
    if (table) {
      petdet::print_detection_table(std::cout, d);
      std::cout << '\n';
    } else {
      std::cout << petdet::to_json(d).dump() << '\n';
    }
    if (shifts)
      for (const auto& line : petdet::shift_report(d)) *shifts << line.dump() << '\n';
  }
  return kOk;
}

int run_evaluate(const CommonOptions& o, const std::string& corpus_path, bool fuzzy, const std::string& report_path,
                 const std::string& detections_path, const std::string& shift_path, bool json_only) {
  const auto cfg = resolve_config(o);
  const auto corpus = petdet::load_annotated(corpus_path);
  const auto pipeline = open_pipeline(o, cfg);
  const auto ev = petdet::evaluate(pipeline, corpus, fuzzy);
  const auto report = petdet::to_json(ev);

  if (!json_only) {
    petdet::print_evaluation_table(std::cout, ev);
    if (fuzzy) std::cout << "(fuzzy target matching: not comparable to exact-match metrics)\n";
  } else {
    std::cout << report.dump(2) << '\n';
  }
  if (!report_path.empty()) open_output(report_path) << report.dump(2) << '\n';
  if (!detections_path.empty()) {
    auto out = open_output(detections_path);
    for (std::size_t i = 0; i < ev.detections.size(); ++i) {
      auto j = petdet::to_json(ev.detections[i]);
      j["target"] = corpus[i].target_pet;
      out << j.dump() << '\n';
    }
  }
  if (!shift_path.empty()) {
    auto out = open_output(shift_path);
    for (const auto& d : ev.detections)
      for (const auto& line : petdet::shift_report(d)) out << line.dump() << '\n';
  }
  return kOk;
}

int run_server_check(const CommonOptions& o) {
  auto cfg = resolve_config(o);
  petdet::RemoteScorer remote(cfg.remote_options());
  const auto health = remote.health();
  std::cout << "health: " << health.dump() << '\n';
  const std::vector<std::string> probe{"i love this", "this is terrible"};
  const auto scores = remote.score(probe);
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const auto& s = scores[i];
    std::cout << '"' << probe[i] << "\": sentiment [" << s.neg << ", " << s.neu << ", " << s.pos << "] offense ["
              << s.non_off << ", " << s.off << "]\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Potentially euphemistic term detection"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string corpus_path, shift_path, report_path, detections_path;
  std::vector<std::string> sentences;
  bool fuzzy = false, table = false, json_only = false;

  auto* train = app.add_subcommand("train", "Train the two-pass phraser and the embeddings on a raw corpus");
  add_common(train, common);
  train->add_option("--corpus", corpus_path, "Raw corpus, one sentence per line")->required();

  auto* detect = app.add_subcommand("detect", "Detect PET candidates; prints one JSON object per sentence");
  add_common(detect, common);
  detect->add_option("--sentence", sentences, "Sentence to analyse (repeatable)");
  detect->add_option("--corpus", corpus_path, "File of sentences, one per line");
  detect->add_option("--shift-report", shift_path, "Write per-replacement sentiment shifts (JSON lines)");
  detect->add_flag("--table", table, "Human-readable output instead of JSON lines");

  auto* evaluate = app.add_subcommand("evaluate", "Stage-retention and success@top-n over an annotated TSV corpus");
  add_common(evaluate, common);
  evaluate->add_option("--corpus", corpus_path, "Annotated corpus: sentence<TAB>target")->required();
  evaluate->add_flag("--fuzzy", fuzzy, "Count substring matches between target and candidate");
  evaluate->add_option("--report", report_path, "Also write the JSON report to this file");
  evaluate->add_option("--detections", detections_path, "Write per-sentence detections (JSON lines)");
  evaluate->add_option("--shift-report", shift_path, "Write per-replacement sentiment shifts (JSON lines)");
  evaluate->add_flag("--json", json_only, "Print the JSON report instead of the table");

  auto* check = app.add_subcommand("score-server-check", "Ping the remote scorer and score two probe texts");
  add_common(check, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*train) return run_train(common, corpus_path);
    if (*detect) return run_detect(common, sentences, corpus_path, shift_path, table);
    if (*evaluate) return run_evaluate(common, corpus_path, fuzzy, report_path, detections_path, shift_path, json_only);
    if (*check) return run_server_check(common);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const petdet::ProtocolError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kProtocol;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
  return kUsage;
}
