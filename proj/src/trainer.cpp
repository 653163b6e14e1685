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

#include "tablenet/trainer.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "tablenet/errors.hpp"

namespace tablenet {
namespace {

const std::set<std::string>& trainConfigKeys() {
  static const std::set<std::string> keys = {
      "batch_size",        "learning_rate",        "adam_beta1",          "adam_beta2",
      "adam_epsilon",      "phase1_table_steps",   "phase1_column_steps", "phase_switch_iteration",
      "phase_switch_loss_tolerance", "loss_window", "total_iterations",   "finetune_iterations",
      "validation_interval", "early_stop_patience", "validation_threshold", "freeze_column_decoder",
      "seed"};
  return keys;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Least-squares slope of ys against xs.
double slope(const std::vector<std::int64_t>& xs, const std::vector<double>& ys) {
  const auto n = static_cast<double>(xs.size());
  if (xs.size() < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += static_cast<double>(xs[i]);
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = static_cast<double>(xs[i]) - mx;
    sxy += dx * (ys[i] - my);
    sxx += dx * dx;
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

void trimWindow(std::vector<double>& losses, std::vector<std::int64_t>& iters, std::int64_t oldestKept) {
  std::size_t drop = 0;
  while (drop < iters.size() && iters[drop] < oldestKept) ++drop;
  losses.erase(losses.begin(), losses.begin() + static_cast<std::ptrdiff_t>(drop));
  iters.erase(iters.begin(), iters.begin() + static_cast<std::ptrdiff_t>(drop));
}

torch::Tensor cpuRngState() {
  auto gen = at::detail::getDefaultCPUGenerator();
  std::lock_guard<std::mutex> lock(gen.mutex());
  return gen.get_state();
}

void setCpuRngState(const torch::Tensor& state) {
  auto gen = at::detail::getDefaultCPUGenerator();
  std::lock_guard<std::mutex> lock(gen.mutex());
  gen.set_state(state);
}

Phase phaseFromString(const std::string& s) {
  if (s == "RATIO_2_1") return Phase::Ratio21;
  if (s == "RATIO_1_1") return Phase::Ratio11;
  throw ConfigError("unknown phase " + s);
}

}  // namespace

std::string_view phaseName(Phase p) { return p == Phase::Ratio21 ? "RATIO_2_1" : "RATIO_1_1"; }

void TrainConfig::validate() const {
  if (batchSize < 1) throw ConfigError("batch_size must be positive");
  if (!(learningRate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(adamBeta1 >= 0.0 && adamBeta1 < 1.0) || !(adamBeta2 >= 0.0 && adamBeta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0,1)");
  }
  if (!(adamEpsilon > 0.0)) throw ConfigError("adam_epsilon must be positive");
  if (phase1TableSteps < 1 || phase1ColumnSteps < 1) throw ConfigError("phase-1 ratio must be positive integers");
  if (phaseSwitchIteration < 0) throw ConfigError("phase_switch_iteration must be non-negative");
  if (!(phaseSwitchLossTolerance >= 0.0)) throw ConfigError("phase_switch_loss_tolerance must be non-negative");
  if (lossWindow < 2) throw ConfigError("loss_window must be at least 2");
  if (totalIterations < 0 || finetuneIterations < 0) throw ConfigError("iteration counts must be non-negative");
  if (validationInterval < 1) throw ConfigError("validation_interval must be positive");
  if (earlyStopPatience < 1) throw ConfigError("early_stop_patience must be positive");
  if (!(validationThreshold > 0.0 && validationThreshold <= 1.0)) {
    throw ConfigError("validation_threshold must lie in (0,1]");
  }
}

Json TrainConfig::toJson() const {
  return {{"batch_size", batchSize},
          {"learning_rate", learningRate},
          {"adam_beta1", adamBeta1},
          {"adam_beta2", adamBeta2},
          {"adam_epsilon", adamEpsilon},
          {"phase1_table_steps", phase1TableSteps},
          {"phase1_column_steps", phase1ColumnSteps},
          {"phase_switch_iteration", phaseSwitchIteration},
          {"phase_switch_loss_tolerance", phaseSwitchLossTolerance},
          {"loss_window", lossWindow},
          {"total_iterations", totalIterations},
          {"finetune_iterations", finetuneIterations},
          {"validation_interval", validationInterval},
          {"early_stop_patience", earlyStopPatience},
          {"validation_threshold", validationThreshold},
          {"freeze_column_decoder", freezeColumnDecoder},
          {"seed", seed}};
}

TrainConfig TrainConfig::fromJson(const Json& j) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!trainConfigKeys().count(key)) throw ConfigError("unknown train config key: " + key);
  }
  TrainConfig c;
  try {
    c.batchSize = j.value("batch_size", c.batchSize);
    c.learningRate = j.value("learning_rate", c.learningRate);
    c.adamBeta1 = j.value("adam_beta1", c.adamBeta1);
    c.adamBeta2 = j.value("adam_beta2", c.adamBeta2);
    c.adamEpsilon = j.value("adam_epsilon", c.adamEpsilon);
    c.phase1TableSteps = j.value("phase1_table_steps", c.phase1TableSteps);
    c.phase1ColumnSteps = j.value("phase1_column_steps", c.phase1ColumnSteps);
    c.phaseSwitchIteration = j.value("phase_switch_iteration", c.phaseSwitchIteration);
    c.phaseSwitchLossTolerance = j.value("phase_switch_loss_tolerance", c.phaseSwitchLossTolerance);
    c.lossWindow = j.value("loss_window", c.lossWindow);
    c.totalIterations = j.value("total_iterations", c.totalIterations);
    c.finetuneIterations = j.value("finetune_iterations", c.finetuneIterations);
    c.validationInterval = j.value("validation_interval", c.validationInterval);
    c.earlyStopPatience = j.value("early_stop_patience", c.earlyStopPatience);
    c.validationThreshold = j.value("validation_threshold", c.validationThreshold);
    c.freezeColumnDecoder = j.value("freeze_column_decoder", c.freezeColumnDecoder);
    c.seed = j.value("seed", c.seed);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<TrainingExample> prepareExamples(const std::vector<ManifestEntry>& entries,
                                             const PreprocessConfig& config, std::uint64_t seed) {
  std::vector<TrainingExample> out;
  out.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto s = prepareSample(loadSample(entries[i]), config, seed + i);
    out.push_back({entries[i].id, s.image, s.tableMask, s.columnMask});
  }
  return out;
}

void PixelCounts::add(const cv::Mat& prob, const cv::Mat& mask, double threshold) {
  if (prob.size() != mask.size() || prob.type() != CV_32FC1 || mask.type() != CV_8UC1) {
    throw ShapeError("pixel counts need a float probability map and an 8-bit mask of equal size");
  }
  for (int y = 0; y < prob.rows; ++y) {
    const float* p = prob.ptr<float>(y);
    const uchar* m = mask.ptr<uchar>(y);
    for (int x = 0; x < prob.cols; ++x) {
      const bool pred = static_cast<double>(p[x]) >= threshold;
      const bool truth = m[x] != 0;
      tp += pred && truth;
      fp += pred && !truth;
      fn += !pred && truth;
    }
  }
}

double PixelCounts::f1() const {
  const auto den = 2 * tp + fp + fn;
  return den == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(den);
}

PixelF1 evaluatePixelF1(TableSegNet& net, const std::vector<TrainingExample>& examples, double threshold) {
  PixelCounts table, column;
  for (const auto& ex : examples) {
    const auto masks = predictMasks(net, ex.image);
    table.add(masks.tableProb, ex.tableMask, threshold);
    column.add(masks.columnProb, ex.columnMask, threshold);
  }
  return {table.f1(), column.f1()};
}

Json TrainState::toJson() const {
  Json lineageJson = Json::array();
  for (const auto& e : lineage) {
    lineageJson.push_back({{"kind", e.kind}, {"checkpoint", e.checkpoint}, {"iterations", e.iterations}});
  }
  return {{"iteration", iteration},
          {"phase", std::string(phaseName(phase))},
          {"phase_switched_at", phaseSwitchedAt},
          {"stuck_in_ratio_2_1", stuckInRatio21},
          {"table_losses", tableLosses},
          {"column_losses", columnLosses},
          {"table_loss_iters", tableLossIters},
          {"column_loss_iters", columnLossIters},
          {"branch_history", branchHistory},
          {"last_validation_iteration", lastValidationIteration},
          {"best_validation_f1", bestValidationF1},
          {"validations_without_improvement", validationsWithoutImprovement},
          {"early_stopped", earlyStopped},
          {"lineage", lineageJson},
          {"sampler_state", samplerState},
          {"epoch_order", epochOrder},
          {"epoch_pos", epochPos}};
}

TrainState TrainState::fromJson(const Json& j) {
  TrainState s;
  try {
    s.iteration = j.at("iteration").get<std::int64_t>();
    s.phase = phaseFromString(j.at("phase").get<std::string>());
    s.phaseSwitchedAt = j.at("phase_switched_at").get<std::int64_t>();
    s.stuckInRatio21 = j.at("stuck_in_ratio_2_1").get<bool>();
    s.tableLosses = j.at("table_losses").get<std::vector<double>>();
    s.columnLosses = j.at("column_losses").get<std::vector<double>>();
    s.tableLossIters = j.at("table_loss_iters").get<std::vector<std::int64_t>>();
    s.columnLossIters = j.at("column_loss_iters").get<std::vector<std::int64_t>>();
    s.branchHistory = j.at("branch_history").get<std::string>();
    s.lastValidationIteration = j.at("last_validation_iteration").get<std::int64_t>();
    s.bestValidationF1 = j.at("best_validation_f1").get<double>();
    s.validationsWithoutImprovement = j.at("validations_without_improvement").get<int>();
    s.earlyStopped = j.at("early_stopped").get<bool>();
    for (const auto& e : j.at("lineage")) {
      s.lineage.push_back({e.at("kind").get<std::string>(), e.at("checkpoint").get<std::string>(),
                           e.at("iterations").get<std::int64_t>()});
    }
    s.samplerState = j.at("sampler_state").get<std::string>();
    s.epochOrder = j.at("epoch_order").get<std::vector<std::size_t>>();
    s.epochPos = j.at("epoch_pos").get<std::size_t>();
  } catch (const Json::exception& e) {
    throw WeightLoadError(std::string("checkpoint state.json: ") + e.what());
  }
  return s;
}

Trainer::Trainer(TableSegNet net, TrainConfig config) : net_(std::move(net)), config_(std::move(config)) {
  config_.validate();
  sampler_.seed(config_.seed);
  std::vector<torch::Tensor> params = net_->encoderParameters();
  const auto table = net_->decoderParameters(Branch::Table);
  params.insert(params.end(), table.begin(), table.end());
  for (auto& p : net_->decoderParameters(Branch::Column)) {
    if (config_.freezeColumnDecoder) {
      p.set_requires_grad(false);
    } else {
      params.push_back(p);
    }
  }
  optimizer_ = std::make_unique<torch::optim::Adam>(
      params, torch::optim::AdamOptions(config_.learningRate)
                  .betas({config_.adamBeta1, config_.adamBeta2})
                  .eps(config_.adamEpsilon)
                  .weight_decay(0.0));
}

const torch::optim::AdamOptions& Trainer::adamOptions() const {
  return static_cast<const torch::optim::AdamOptions&>(optimizer_->param_groups().front().options());
}

void Trainer::forcePhase(Phase p) {
  if (state_.phase == Phase::Ratio11 && p == Phase::Ratio21) throw ConfigError("phase transitions are monotone");
  if (state_.phase != p) state_.phaseSwitchedAt = state_.iteration;
  state_.phase = p;
}

double Trainer::trainStep(const torch::Tensor& images, const torch::Tensor& tableMasks,
                          const torch::Tensor& columnMasks, Branch branch) {
  net_->train();
  optimizer_->zero_grad(true);
  const auto logits = net_->forward(images, branch);
  const auto loss = branchLoss(logits, branch == Branch::Table ? tableMasks : columnMasks);
  const double value = loss.item<double>();
  if (!std::isfinite(value)) throw TrainingDiverged(state_.iteration + 1);
  loss.backward();
  optimizer_->step();
  record(branch, value);
  return value;
}

void Trainer::record(Branch branch, double loss) {
  ++state_.iteration;
  const auto it = state_.iteration;
  state_.branchHistory += branch == Branch::Table ? 'T' : 'C';
  if (branch == Branch::Table) {
    state_.tableLosses.push_back(loss);
    state_.tableLossIters.push_back(it);
  } else {
    state_.columnLosses.push_back(loss);
    state_.columnLossIters.push_back(it);
  }
  const auto oldest = it - config_.lossWindow + 1;
  trimWindow(state_.tableLosses, state_.tableLossIters, oldest);
  trimWindow(state_.columnLosses, state_.columnLossIters, oldest);
  if (onStep) onStep(it, branch, loss);
}

bool Trainer::phaseSwitchReady() const {
  if (state_.iteration < config_.phaseSwitchIteration) return false;
  if (state_.tableLosses.size() < 2 || state_.columnLosses.empty()) return false;
  const double t = mean(state_.tableLosses), c = mean(state_.columnLosses);
  const double scale = std::max(t, c);
  const double gap = scale > 0.0 ? std::abs(t - c) / scale : 0.0;
  return gap <= config_.phaseSwitchLossTolerance && slope(state_.tableLossIters, state_.tableLosses) < 0.0;
}

std::vector<std::size_t> Trainer::nextBatch(std::size_t datasetSize) {
  const auto bs = static_cast<std::size_t>(config_.batchSize);
  std::vector<std::size_t> batch;
  while (batch.size() < bs) {
    if (state_.epochOrder.size() != datasetSize || state_.epochPos >= state_.epochOrder.size()) {
      state_.epochOrder.resize(datasetSize);
      std::iota(state_.epochOrder.begin(), state_.epochOrder.end(), std::size_t{0});
      std::shuffle(state_.epochOrder.begin(), state_.epochOrder.end(), sampler_);
      state_.epochPos = 0;
    }
    batch.push_back(state_.epochOrder[state_.epochPos++]);
  }
  return batch;
}

const TrainState& Trainer::run(const std::vector<TrainingExample>& train,
                               const std::vector<TrainingExample>& validation, const std::filesystem::path& outDir,
                               std::int64_t untilIteration) {
  if (train.empty()) throw ConfigError("training set is empty");
  const std::int64_t until = untilIteration < 0 ? config_.totalIterations : untilIteration;
  const auto& valSet = validation.empty() ? train : validation;

  std::ofstream log;
  std::filesystem::path checkpointDir;
  if (!outDir.empty()) {
    std::filesystem::create_directories(outDir);
    checkpointDir = outDir / "checkpoint";
    log.open(outDir / "train_log.jsonl", std::ios::app);
    const auto ckpt = checkpointDir.string();
    if (state_.lineage.empty() || state_.lineage.back().checkpoint != ckpt) {
      state_.lineage.push_back({lineageKind_, ckpt, 0});
    }
  }

  while (state_.iteration < until && !state_.earlyStopped) {
    std::vector<cv::Mat> images, tables, columns;
    for (auto i : nextBatch(train.size())) {
      images.push_back(train[i].image);
      tables.push_back(train[i].tableMask);
      columns.push_back(train[i].columnMask);
    }
    const auto x = imagesToTensor(images);
    const auto yt = masksToTensor(tables);
    const auto yc = masksToTensor(columns);

    std::vector<Branch> cycle;
    if (state_.phase == Phase::Ratio21) {
      cycle.assign(static_cast<std::size_t>(config_.phase1TableSteps), Branch::Table);
      cycle.insert(cycle.end(), static_cast<std::size_t>(config_.phase1ColumnSteps), Branch::Column);
    } else {
      cycle = {Branch::Table, Branch::Column};
    }

    std::vector<Json> lines;
    for (auto branch : cycle) {
      if (state_.iteration >= until) break;
      const double loss = trainStep(x, yt, yc, branch);
      lines.push_back({{"iter", state_.iteration},
                       {"branch", std::string(branchName(branch))},
                       {"loss", loss},
                       {"phase", std::string(phaseName(state_.phase))}});
    }

    if (state_.phase == Phase::Ratio21 && phaseSwitchReady()) {
      state_.phase = Phase::Ratio11;
      state_.phaseSwitchedAt = state_.iteration;
    }

    const bool lastCycle = state_.iteration >= until;
    if (state_.iteration - state_.lastValidationIteration >= config_.validationInterval || lastCycle) {
      state_.lastValidationIteration = state_.iteration;
      const auto f1 = evaluatePixelF1(net_, valSet, config_.validationThreshold);
      if (!lines.empty()) {
        lines.back()["val_f1_table"] = f1.table;
        lines.back()["val_f1_column"] = f1.column;
      }
      const double combined = 0.5 * (f1.table + f1.column);
      if (combined > state_.bestValidationF1) {
        state_.bestValidationF1 = combined;
        state_.validationsWithoutImprovement = 0;
      } else if (state_.phase == Phase::Ratio11) {
        if (++state_.validationsWithoutImprovement >= config_.earlyStopPatience) state_.earlyStopped = true;
      }
      if (!checkpointDir.empty()) {
        state_.stuckInRatio21 = state_.phase == Phase::Ratio21 && state_.iteration >= config_.phaseSwitchIteration;
        saveCheckpoint(checkpointDir);
      }
    }
    if (log.is_open()) {
      for (const auto& l : lines) log << l.dump() << '\n';
      log.flush();
    }
  }

  state_.stuckInRatio21 = state_.phase == Phase::Ratio21 && state_.iteration >= config_.phaseSwitchIteration;
  if (!checkpointDir.empty()) saveCheckpoint(checkpointDir);
  return state_;
}

void Trainer::saveCheckpoint(const std::filesystem::path& dir) const {
  namespace fs = std::filesystem;
  TrainState snapshot = state_;
  {
    std::ostringstream ss;
    ss << sampler_;
    snapshot.samplerState = ss.str();
  }
  if (!snapshot.lineage.empty() && snapshot.lineage.back().checkpoint == dir.string()) {
    snapshot.lineage.back().iterations = snapshot.iteration;
  }

  const fs::path tmp = dir.string() + ".tmp";
  const fs::path old = dir.string() + ".old";
  fs::remove_all(tmp);
  saveNetwork(tmp, net_);
  writeJsonFile(tmp / "state.json", snapshot.toJson());
  writeJsonFile(tmp / "train_config.json", config_.toJson());
  torch::save(*optimizer_, (tmp / "optimizer.bin").string());
  saveTensors(tmp / "rng.bin", {{"cpu_generator", cpuRngState()}});
  fs::remove_all(old);
  if (fs::exists(dir)) fs::rename(dir, old);
  fs::rename(tmp, dir);
  fs::remove_all(old);
}

Trainer Trainer::resume(const std::filesystem::path& dir, TrainConfig config) {
  Trainer t(loadNetwork(dir), std::move(config));
  try {
    torch::load(*t.optimizer_, (dir / "optimizer.bin").string());
  } catch (const c10::Error& e) {
    throw WeightLoadError("cannot restore optimiser state from " + dir.string() + ": " + e.what_without_backtrace());
  }
  t.state_ = TrainState::fromJson(readJsonFile(dir / "state.json"));
  std::istringstream ss(t.state_.samplerState);
  ss >> t.sampler_;
  const auto rng = loadTensors(dir / "rng.bin");
  if (auto it = rng.find("cpu_generator"); it != rng.end()) setCpuRngState(it->second);
  return t;
}

TrainState finetune(const std::filesystem::path& parentDir, const std::vector<TrainingExample>& train,
                    const std::vector<TrainingExample>& validation, const TrainConfig& config,
                    const std::filesystem::path& outDir) {
  if (train.empty()) throw ConfigError("fine-tuning set is empty");
  const auto spec = loadNetworkSpec(parentDir);
  if (train.front().image.rows != spec.inputSize || train.front().image.cols != spec.inputSize) {
    throw WeightLoadError("checkpoint expects " + std::to_string(spec.inputSize) + "px inputs, data is " +
                          std::to_string(train.front().image.cols) + "px");
  }
  torch::manual_seed(config.seed);
  Trainer t(loadNetwork(parentDir), config);
  t.forcePhase(Phase::Ratio11);
  t.mutableState().phaseSwitchedAt = 0;
  if (std::filesystem::exists(parentDir / "state.json")) {
    t.mutableState().lineage = TrainState::fromJson(readJsonFile(parentDir / "state.json")).lineage;
  }
  t.setLineageKind("finetune");
  return t.run(train, validation, outDir, config.finetuneIterations);
}

}  // namespace tablenet
