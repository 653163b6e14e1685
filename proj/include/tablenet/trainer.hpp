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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "tablenet/ingestion.hpp"
#include "tablenet/network.hpp"
#include "tablenet/preprocess.hpp"
#include "tablenet/serialize.hpp"

namespace tablenet {

enum class Phase { Ratio21, Ratio11 };

std::string_view phaseName(Phase p);

struct TrainConfig {
  int batchSize = 2;
  double learningRate = 1e-4;
  double adamBeta1 = 0.9;
  double adamBeta2 = 0.999;
  double adamEpsilon = 1e-8;
  int phase1TableSteps = 2;
  int phase1ColumnSteps = 1;
  int phaseSwitchIteration = 500;
  double phaseSwitchLossTolerance = 0.25;
  /// Moving-average window (iterations) for the phase-switch tests.
  int lossWindow = 100;
  int totalIterations = 5000;
  int finetuneIterations = 3000;
  int validationInterval = 250;
  int earlyStopPatience = 10;
  double validationThreshold = 0.99;
  /// Keeps the column decoder out of the optimiser.
  bool freezeColumnDecoder = false;
  std::uint64_t seed = 0;

  void validate() const;
  Json toJson() const;
  /// Unknown keys raise ConfigError.
  static TrainConfig fromJson(const Json& j);
};

/// One preprocessed page: inputSize x inputSize RGB image and {0,1} masks.
struct TrainingExample {
  std::string id;
  cv::Mat image;
  cv::Mat tableMask;
  cv::Mat columnMask;
};

std::vector<TrainingExample> prepareExamples(const std::vector<ManifestEntry>& entries,
                                             const PreprocessConfig& config, std::uint64_t seed);

/// Micro-averaged pixel counts of a thresholded probability map.
struct PixelCounts {
  std::int64_t tp = 0, fp = 0, fn = 0;
  void add(const cv::Mat& prob, const cv::Mat& mask, double threshold);
  double f1() const;
};

struct PixelF1 {
  double table = 0.0;
  double column = 0.0;
};

PixelF1 evaluatePixelF1(TableSegNet& net, const std::vector<TrainingExample>& examples, double threshold);

struct LineageEntry {
  std::string kind;  // "train" or "finetune"
  std::string checkpoint;
  std::int64_t iterations = 0;
};

struct TrainState {
  std::int64_t iteration = 0;
  Phase phase = Phase::Ratio21;
  /// Iteration at which the schedule entered 1:1, or -1.
  std::int64_t phaseSwitchedAt = -1;
  /// True when the run ended in 2:1 although the switch iteration was reached.
  bool stuckInRatio21 = false;
  // Losses (and their iterations) inside the last lossWindow iterations.
  std::vector<double> tableLosses, columnLosses;
  std::vector<std::int64_t> tableLossIters, columnLossIters;
  /// One character per optimiser update: 'T' or 'C'.
  std::string branchHistory;
  std::int64_t lastValidationIteration = 0;
  double bestValidationF1 = -1.0;
  int validationsWithoutImprovement = 0;
  bool earlyStopped = false;
  std::vector<LineageEntry> lineage;
  std::string samplerState;
  std::vector<std::size_t> epochOrder;
  std::size_t epochPos = 0;

  Json toJson() const;
  static TrainState fromJson(const Json& j);
};

/// Owns the optimiser and sampling state for one training run.
class Trainer {
 public:
  Trainer(TableSegNet net, TrainConfig config);

  /// One optimiser update on `branch`; returns that branch's loss.
  double trainStep(const torch::Tensor& images, const torch::Tensor& tableMasks, const torch::Tensor& columnMasks,
                   Branch branch);

  /// Runs the alternating schedule up to `untilIteration` (defaults to
  /// config.totalIterations). Writes checkpoints and the line-JSON log to
  /// `outDir` when it is non-empty.
  const TrainState& run(const std::vector<TrainingExample>& train, const std::vector<TrainingExample>& validation,
                        const std::filesystem::path& outDir, std::int64_t untilIteration = -1);

  /// Fixes the schedule to 1:1 (used by fine-tuning).
  void forcePhase(Phase p);
  /// Kind recorded in the lineage entry this trainer appends ("train" by default).
  void setLineageKind(std::string kind) { lineageKind_ = std::move(kind); }

  const torch::optim::AdamOptions& adamOptions() const;

  void saveCheckpoint(const std::filesystem::path& dir) const;
  /// Restores weights, optimiser moments, sampler and RNG state.
  static Trainer resume(const std::filesystem::path& dir, TrainConfig config);

  TableSegNet& network() { return net_; }
  const TrainState& state() const { return state_; }
  TrainState& mutableState() { return state_; }
  const TrainConfig& config() const { return config_; }

  /// Called after every update with (iteration, branch, loss).
  std::function<void(std::int64_t, Branch, double)> onStep;

 private:
  std::vector<std::size_t> nextBatch(std::size_t datasetSize);
  void record(Branch branch, double loss);
  bool phaseSwitchReady() const;

  TableSegNet net_;
  TrainConfig config_;
  std::unique_ptr<torch::optim::Adam> optimizer_;
  std::mt19937_64 sampler_;
  TrainState state_;
  std::string lineageKind_ = "train";
};

/// Fine-tunes the checkpoint in `parentDir` on `train` at 1:1 for
/// config.finetuneIterations and writes the result to `outDir`.
TrainState finetune(const std::filesystem::path& parentDir, const std::vector<TrainingExample>& train,
                    const std::vector<TrainingExample>& validation, const TrainConfig& config,
                    const std::filesystem::path& outDir);

}  // namespace tablenet
