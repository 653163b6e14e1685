// Copyright 2026 The Project Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <opencv2/imgcodecs.hpp>

#include "pipeline_config.hpp"
#include "tablenet/errors.hpp"
#include "tablenet/extract.hpp"
#include "tablenet/ingestion.hpp"
#include "tablenet/metrics.hpp"
#include "tablenet/network.hpp"
#include "tablenet/synthgen.hpp"
#include "tablenet/trainer.hpp"

namespace fs = std::filesystem;

namespace tablenet::cli {

namespace {

/// Options shared by every command that reads the pipeline config.
struct ConfigOptions {
  std::string file;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", file, "JSON pipeline config file")->check(CLI::ExistingFile);
    cmd->add_option("--set", overrides, "Override a config key, e.g. --set train.learning_rate=1e-4");
    cmd->add_option("--seed", seed, "Seed for every random choice (overrides the config's seed)");
  }

  PipelineConfig load() const {
    auto all = overrides;
    if (seed) all.push_back("seed=" + std::to_string(*seed));
    return loadPipelineConfig(file, all);
  }
};

std::string keyList(const std::vector<std::string>& sections) {
  std::string out = "Config keys:\n";
  for (const auto& s : sections) {
    for (const auto& k : configKeys(s)) out += "  " + k + "\n";
  }
  return out;
}

void log(const std::string& msg) { std::cerr << msg << "\n"; }

std::vector<ManifestEntry> entriesFor(const DatasetManifest& m, const std::string& split) {
  if (split == "all") return m.entries;
  if (split == "train") return m.select(Split::Train);
  if (split == "val") return m.select(Split::Val);
  if (split == "test") return m.select(Split::Test);
  throw ConfigError("unknown split: " + split);
}

/// Training only uses pages with at least one table.
std::vector<ManifestEntry> positiveOnly(const std::vector<ManifestEntry>& entries) {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries) {
    if (!parseAnnotations(e.annotationPath).tables.empty()) out.push_back(e);
  }
  return out;
}

std::pair<std::vector<TrainingExample>, std::vector<TrainingExample>> loadTrainingSets(const fs::path& manifestPath,
                                                                                     const PipelineConfig& cfg) {
  const auto manifest = loadManifest(manifestPath);
  const auto train = positiveOnly(manifest.select(Split::Train));
  if (train.empty()) throw ConfigError("manifest has no TRAIN pages with tables: " + manifestPath.string());
  auto valPre = cfg.preprocess;
  valPre.dropProb = 0.0;
  return {prepareExamples(train, cfg.preprocess, cfg.seed),
          prepareExamples(positiveOnly(manifest.select(Split::Val)), valPre, cfg.seed)};
}

void writeMask8(const fs::path& path, const cv::Mat& mask01) {
  cv::Mat out;
  mask01.convertTo(out, CV_8U, 255.0);
  if (!cv::imwrite(path.string(), out)) throw Error("cannot write " + path.string());
}

void writeProb16(const fs::path& path, const cv::Mat& prob) {
  cv::Mat out;
  prob.convertTo(out, CV_16U, 65535.0);
  if (!cv::imwrite(path.string(), out)) throw Error("cannot write " + path.string());
}

cv::Mat readProb16(const fs::path& path) {
  const cv::Mat raw = cv::imread(path.string(), cv::IMREAD_ANYDEPTH | cv::IMREAD_GRAYSCALE);
  if (raw.empty()) throw Error("cannot read mask " + path.string());
  cv::Mat prob;
  raw.convertTo(prob, CV_32F, raw.depth() == CV_16U ? 1.0 / 65535.0 : 1.0 / 255.0);
  return prob;
}

std::string pathString(const fs::path& p) { return fs::absolute(p).lexically_normal().string(); }

fs::path resolveAgainst(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  int n = 20;
  std::uint64_t seed = 0;
  std::string out;
  std::string kind = "mixed";
  int valCount = 0;
};

SynthKind parseKind(const std::string& k) {
  if (k == "ruled") return SynthKind::Ruled;
  if (k == "filled") return SynthKind::UnruledFilled;
  if (k == "multiline") return SynthKind::UnruledMultiLine;
  if (k == "mixed") return SynthKind::Mixed;
  throw ConfigError("unknown synth kind: " + k + " (ruled, filled, multiline, mixed)");
}

int runSynth(const SynthArgs& a) {
  const auto kind = parseKind(a.kind);
  if (a.n < 1) throw ConfigError("--n must be positive");
  if (a.valCount < 0 || a.valCount > a.n) throw ConfigError("--val-count must lie in [0, n]");
  const fs::path out(a.out);
  const auto manifest = writeCorpus(out, a.n, a.seed, kind, a.valCount);
  std::vector<DocumentResult> truth;
  for (const auto& e : manifest.entries) {
    auto docs = documentsFromJson(readJsonFile(out / (e.id + ".grid.json")));
    for (auto& d : docs) truth.push_back(std::move(d));
  }
  writeJsonFile(out / "truth.json", documentsToJson(truth));
  log("wrote " + std::to_string(a.n) + " pages to " + out.string());
  return 0;
}

// ---- prepare --------------------------------------------------------------

int runPrepare(const PipelineConfig& cfg, const fs::path& manifestPath, const fs::path& out) {
  const auto manifest = loadManifest(manifestPath);
  fs::create_directories(out);
  DatasetManifest prepared;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    const auto s = prepareSample(loadSample(e), cfg.preprocess, cfg.seed + i);
    const fs::path image = out / (e.id + ".png");
    writeImageRgb(image, s.image);
    writeMask8(out / (e.id + ".table.png"), s.tableMask);
    writeMask8(out / (e.id + ".column.png"), s.columnMask);
    const fs::path words = out / (e.id + ".words.tsv");
    writeFileAtomic(words, wordBoxesToTsv(s.words));
    const fs::path ann = out / (e.id + ".json");
    writeJsonFile(ann, annotationsToJson({s.width(), s.height(), s.tables, s.columns}));
    prepared.entries.push_back({e.id, image, words, ann, e.split});
  }
  writeJsonFile(out / "manifest.json", manifestToJson(prepared, out));
  writeJsonFile(out / "config.json", cfg.toJson());
  log("prepared " + std::to_string(prepared.entries.size()) + " pages in " + out.string());
  return 0;
}

// ---- train / finetune -----------------------------------------------------

void attachProgress(Trainer& trainer) {
  trainer.onStep = [](std::int64_t it, Branch b, double loss) {
    if (it % 50 == 0) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "iter %lld %s loss %.5f", static_cast<long long>(it),
                    std::string(branchName(b)).c_str(), loss);
      log(buf);
    }
  };
}

void summarize(const TrainState& s) {
  log("finished at iteration " + std::to_string(s.iteration) + ", phase " + std::string(phaseName(s.phase)) +
      (s.stuckInRatio21 ? " (phase switch never triggered)" : "") + (s.earlyStopped ? " (early stop)" : ""));
}

int runTrain(const PipelineConfig& cfg, const fs::path& manifestPath, const fs::path& out, bool resume) {
  const auto [train, val] = loadTrainingSets(manifestPath, cfg);
  fs::create_directories(out);
  writeJsonFile(out / "config.json", cfg.toJson());
  const fs::path ckpt = out / "checkpoint";
  std::optional<Trainer> trainer;
  if (resume && fs::exists(ckpt)) {
    trainer.emplace(Trainer::resume(ckpt, cfg.train));
    log("resuming from iteration " + std::to_string(trainer->state().iteration));
  } else {
    trainer.emplace(buildNetwork(cfg.network, cfg.pretrained, cfg.seed), cfg.train);
  }
  attachProgress(*trainer);
  summarize(trainer->run(train, val, out));
  return 0;
}

int runFinetune(PipelineConfig cfg, const fs::path& parent, const fs::path& manifestPath, const fs::path& out) {
  cfg.preprocess.targetSize = loadNetworkSpec(parent).inputSize;
  const auto [train, val] = loadTrainingSets(manifestPath, cfg);
  fs::create_directories(out);
  writeJsonFile(out / "config.json", cfg.toJson());
  summarize(finetune(parent, train, val, cfg.train, out));
  return 0;
}

// ---- predict --------------------------------------------------------------

int runPredict(PipelineConfig cfg, const fs::path& ckpt, const fs::path& manifestPath, const std::string& split,
               const fs::path& out) {
  auto net = loadNetwork(ckpt);
  cfg.preprocess.targetSize = net->spec().inputSize;
  cfg.preprocess.dropProb = 0.0;
  const auto entries = entriesFor(loadManifest(manifestPath), split);
  fs::create_directories(out);
  Json docs = Json::array();
  for (const auto& e : entries) {
    const auto s = prepareSample(loadSample(e), cfg.preprocess, cfg.seed);
    const auto masks = predictMasks(net, s.image);
    writeProb16(out / (e.id + ".table.png"), masks.tableProb);
    writeProb16(out / (e.id + ".column.png"), masks.columnProb);
    Json d = {{"id", e.id},
              {"image", pathString(e.imagePath)},
              {"table_mask", e.id + ".table.png"},
              {"column_mask", e.id + ".column.png"}};
    if (!e.wordsPath.empty()) d["words"] = pathString(e.wordsPath);
    docs.push_back(std::move(d));
    log("predicted " + e.id);
  }
  writeJsonFile(out / "predictions.json", {{"checkpoint", pathString(ckpt)}, {"documents", docs}});
  return 0;
}

// ---- extract --------------------------------------------------------------

int runExtract(const PipelineConfig& cfg, const fs::path& predictionsPath, const fs::path& out) {
  const Json preds = readJsonFile(predictionsPath);
  const fs::path base = predictionsPath.parent_path();
  if (!preds.contains("documents") || !preds.at("documents").is_array()) {
    throw ValidationError(predictionsPath.string() + " has no \"documents\" array");
  }
  fs::create_directories(out);
  std::vector<DocumentResult> results;
  for (const auto& d : preds.at("documents")) {
    const std::string id = d.at("id").get<std::string>();
    const cv::Mat page = readImageRgb(resolveAgainst(base, d.at("image").get<std::string>()));
    std::vector<WordBox> words;
    std::string wordsPath;
    if (d.contains("words")) {
      wordsPath = pathString(resolveAgainst(base, d.at("words").get<std::string>()));
      words = parseWordBoxes(wordsPath);
    }
    const MaskPair masks{readProb16(resolveAgainst(base, d.at("table_mask").get<std::string>())),
                         readProb16(resolveAgainst(base, d.at("column_mask").get<std::string>()))};
    DocumentResult r{id, page.cols, page.rows, wordsPath, extractTables(masks, words, page, cfg.extract)};
    for (std::size_t k = 0; k < r.tables.size(); ++k) {
      writeFileAtomic(out / (id + "_table" + std::to_string(k) + ".csv"), gridToCsv(r.tables[k]));
    }
    log(id + ": " + std::to_string(r.tables.size()) + " table(s)");
    results.push_back(std::move(r));
  }
  writeJsonFile(out / "tables.json", documentsToJson(results));
  return 0;
}

// ---- evaluate -------------------------------------------------------------

int runEvaluate(const fs::path& predPath, const fs::path& truthPath, const std::string& out) {
  auto pred = documentsFromJson(readJsonFile(predPath));
  const auto truth = documentsFromJson(readJsonFile(truthPath));
  const fs::path truthBase = truthPath.parent_path();

  // Single anonymous documents pair up directly; otherwise match by id.
  std::map<std::string, const DocumentResult*> predById;
  for (const auto& p : pred) predById[p.id] = &p;
  const bool pairDirectly = pred.size() == 1 && truth.size() == 1;

  EvalReport report;
  for (const auto& t : truth) {
    static const DocumentResult kEmpty;
    const DocumentResult* p = &kEmpty;
    if (pairDirectly) {
      p = &pred.front();
    } else if (auto it = predById.find(t.id); it != predById.end()) {
      p = it->second;
    }
    const std::string name = t.id.empty() ? truthPath.filename().string() : t.id;
    report.perDocument.push_back({name, "extraction", extractionPR(p->tables, t.tables), 0});
    if (!t.wordsPath.empty()) {
      std::vector<Rect> predRegions, truthRegions;
      for (const auto& g : p->tables) predRegions.push_back(g.region);
      for (const auto& g : t.tables) truthRegions.push_back(g.region);
      const auto chars = charBoxesFromWords(parseWordBoxes(resolveAgainst(truthBase, t.wordsPath)));
      const auto det = charLevelPR(predRegions, truthRegions, chars);
      report.perDocument.push_back({name, "detection", det.score, det.splitTruthRegions});
    }
  }
  for (const auto& p : pred) {
    const bool matched = pairDirectly || std::any_of(truth.begin(), truth.end(), [&](const auto& t) {
                           return t.id == p.id;
                         });
    if (!matched) log("warning: predicted document " + p.id + " has no ground truth; ignored");
  }

  const Json j = report.toJson();
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    const fs::path dir(out);
    fs::create_directories(dir);
    writeJsonFile(dir / "report.json", j);
    writeFileAtomic(dir / "report.csv", report.toCsv());
  }
  const auto m = report.macro("extraction");
  char buf[128];
  std::snprintf(buf, sizeof buf, "extraction: precision %.4f recall %.4f F1 %.4f", m.precision, m.recall, m.f1);
  log(buf);
  return 0;
}

}  // namespace

int runCommand(const std::vector<std::string>& args) {
  CLI::App app{"Table and column detection pipeline", "tablenet"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");
  app.failure_message(CLI::FailureMessage::help);

  // synth
  SynthArgs synth;
  auto* cSynth = app.add_subcommand("synth", "Render a synthetic corpus with ground truth");
  cSynth->add_option("--n", synth.n, "Number of pages")->capture_default_str();
  cSynth->add_option("--seed", synth.seed, "Corpus seed")->capture_default_str();
  cSynth->add_option("--out", synth.out, "Output directory")->required();
  cSynth->add_option("--kind", synth.kind, "ruled, filled, multiline or mixed")->capture_default_str();
  cSynth->add_option("--val-count", synth.valCount, "Trailing pages marked VAL")->capture_default_str();
  cSynth->footer("Config keys:\n  seed (as --seed)\n");

  ConfigOptions cfgOpts;
  std::string manifest, out, checkpoint, predictions, predFile, truthFile, split = "all";
  std::optional<int> iterations;
  bool resume = false;

  auto* cPrepare = app.add_subcommand("prepare", "Equalize, resize, highlight and rasterize masks");
  cfgOpts.attach(cPrepare);
  cPrepare->add_option("--manifest", manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  cPrepare->add_option("--out", out, "Output directory")->required();
  cPrepare->footer(keyList({"", "preprocess"}));

  auto* cTrain = app.add_subcommand("train", "Train both branches on a manifest's TRAIN split");
  cfgOpts.attach(cTrain);
  cTrain->add_option("--manifest", manifest, "Dataset manifest (VAL split used for validation)")
      ->required()
      ->check(CLI::ExistingFile);
  cTrain->add_option("--out", out, "Run directory (checkpoint, train_log.jsonl)")->required();
  cTrain->add_option("--iterations", iterations, "Overrides train.total_iterations");
  cTrain->add_flag("--resume", resume, "Continue from <out>/checkpoint if it exists");
  cTrain->footer(keyList({"", "network", "preprocess", "train"}));

  auto* cFinetune = app.add_subcommand("finetune", "Continue training a checkpoint on a new corpus at 1:1");
  cfgOpts.attach(cFinetune);
  cFinetune->add_option("--checkpoint", checkpoint, "Parent checkpoint directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  cFinetune->add_option("--manifest", manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  cFinetune->add_option("--out", out, "Run directory")->required();
  cFinetune->add_option("--iterations", iterations, "Overrides train.finetune_iterations");
  cFinetune->footer(keyList({"", "preprocess", "train"}) + "  (preprocess.target_size follows the checkpoint)\n");

  auto* cPredict = app.add_subcommand("predict", "Write 16-bit table and column probability maps");
  cfgOpts.attach(cPredict);
  cPredict->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  cPredict->add_option("--manifest", manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  cPredict->add_option("--split", split, "all, train, val or test")->capture_default_str();
  cPredict->add_option("--out", out, "Output directory")->required();
  cPredict->footer(keyList({"", "preprocess"}) +
                   "  (preprocess.target_size follows the checkpoint; drop_prob is ignored)\n");

  auto* cExtract = app.add_subcommand("extract", "Turn predicted masks and word boxes into cell grids");
  cfgOpts.attach(cExtract);
  cExtract->add_option("--predictions", predictions, "predictions.json written by predict")
      ->required()
      ->check(CLI::ExistingFile);
  cExtract->add_option("--out", out, "Output directory (tables.json and one CSV per table)")->required();
  cExtract->footer(keyList({"extract"}));

  std::string evalOut;
  auto* cEvaluate = app.add_subcommand("evaluate", "Score extracted tables against ground truth");
  cEvaluate->add_option("--pred", predFile, "Predicted tables (document set or grid JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cEvaluate->add_option("--truth", truthFile, "Ground-truth tables")->required()->check(CLI::ExistingFile);
  cEvaluate->add_option("--out", evalOut, "Directory for report.json and report.csv (stdout if omitted)");
  cEvaluate->footer("Config keys: none\n");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (cSynth->parsed()) return runSynth(synth);
    if (cEvaluate->parsed()) return runEvaluate(predFile, truthFile, evalOut);
    auto cfg = cfgOpts.load();
    if (cPrepare->parsed()) return runPrepare(cfg, manifest, out);
    if (cTrain->parsed()) {
      if (iterations) cfg.train.totalIterations = *iterations;
      cfg.train.validate();
      return runTrain(cfg, manifest, out, resume);
    }
    if (cFinetune->parsed()) {
      if (iterations) cfg.train.finetuneIterations = *iterations;
      cfg.train.validate();
      return runFinetune(cfg, checkpoint, manifest, out);
    }
    if (cPredict->parsed()) return runPredict(cfg, checkpoint, manifest, split, out);
    if (cExtract->parsed()) return runExtract(cfg, predictions, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const Json::exception& e) {
    std::cerr << "malformed input: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace tablenet::cli
