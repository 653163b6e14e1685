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

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <opencv2/core.hpp>
#include <torch/torch.h>

#include "tablenet/serialize.hpp"
#include "tablenet/types.hpp"

namespace tablenet {

enum class Branch { Table, Column };

std::string_view branchName(Branch b);

struct NetworkSpec {
  int inputSize = 1024;
  /// Output channels of the five VGG-19 blocks.
  std::array<int, 5> encoderWidths{64, 128, 256, 512, 512};
  int conv6Width = 512;
  int conv7ColumnWidth = 512;
  /// Fraction of activations zeroed by each dropout layer.
  double dropoutRate = 0.2;

  /// Reduced-width variant: every channel count divided by `divisor`.
  static NetworkSpec reduced(int inputSize, int divisor);

  void validate() const;
  Json toJson() const;
  static NetworkSpec fromJson(const Json& j);
  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

struct BranchOutput {
  torch::Tensor logits;  // N x 2 x H x W
  torch::Tensor prob;    // softmax over the channel axis
};

/// Decoder shared by both branches: x2 upsample, add projected pool4, x2
/// upsample, add projected pool3, x8 upsample back to input resolution.
class SkipDecoderImpl : public torch::nn::Module {
 public:
  SkipDecoderImpl(int pool3Channels, int pool4Channels);
  torch::Tensor forward(const torch::Tensor& score, const torch::Tensor& pool3, const torch::Tensor& pool4);

 private:
  torch::nn::Conv2d scorePool4_{nullptr}, scorePool3_{nullptr};
  torch::nn::ConvTranspose2d up2a_{nullptr}, up2b_{nullptr}, up8_{nullptr};
};
TORCH_MODULE(SkipDecoder);

class TableSegNetImpl : public torch::nn::Module {
 public:
  explicit TableSegNetImpl(const NetworkSpec& spec);

  torch::Tensor forward(const torch::Tensor& input, Branch branch);
  std::pair<torch::Tensor, torch::Tensor> forwardBoth(const torch::Tensor& input);

  const NetworkSpec& spec() const { return spec_; }

  /// Parameters owned by the shared encoder (conv1_1 .. conv6_2).
  std::vector<torch::Tensor> encoderParameters() const;
  /// Parameters owned by one decoder branch.
  std::vector<torch::Tensor> decoderParameters(Branch branch) const;

 private:
  struct Features {
    torch::Tensor conv6, pool3, pool4;
  };
  Features encode(const torch::Tensor& input);
  torch::Tensor decode(const Features& f, Branch branch);

  NetworkSpec spec_;
  std::vector<torch::nn::Conv2d> encoderConvs_;
  std::vector<int> blockEnds_;  // index of the last conv in each block
  torch::nn::Conv2d conv6a_{nullptr}, conv6b_{nullptr};
  torch::nn::Dropout drop6a_{nullptr}, drop6b_{nullptr};
  torch::nn::Conv2d conv7Table_{nullptr};
  torch::nn::Conv2d conv7Column_{nullptr}, conv8Column_{nullptr};
  torch::nn::Dropout drop7Column_{nullptr};
  SkipDecoder tableDecoder_{nullptr}, columnDecoder_{nullptr};
};
TORCH_MODULE(TableSegNet);

/// Names of the VGG-19 convolution layers in forward order.
const std::vector<std::string>& vggLayerNames();

/// Builds a freshly initialised network. With `pretrained`, encoder weights
/// are read from `<cacheDir>/vgg19.bin` (cacheDir defaults to $TABLENET_CACHE).
TableSegNet buildNetwork(const NetworkSpec& spec, bool pretrained, std::uint64_t seed = 0,
                      const std::filesystem::path& cacheDir = {});

BranchOutput branchOutput(const torch::Tensor& logits);

/// Mean per-pixel two-class cross-entropy. `target` is N x H x W of {0,1}.
torch::Tensor branchLoss(const torch::Tensor& logits, const torch::Tensor& target);

/// RGB uint8 images (all inputSize square) to a normalised N x 3 x H x W batch.
torch::Tensor imagesToTensor(const std::vector<cv::Mat>& images);
/// {0,1} CV_8UC1 masks to an N x H x W int64 tensor.
torch::Tensor masksToTensor(const std::vector<cv::Mat>& masks);

/// Foreground probabilities of both branches for a preprocessed RGB image.
MaskPair predictMasks(TableSegNet& net, const cv::Mat& image);

// Weight files: a flat list of named tensors.
using NamedTensors = std::map<std::string, torch::Tensor>;

void saveTensors(const std::filesystem::path& path, const NamedTensors& tensors);
NamedTensors loadTensors(const std::filesystem::path& path);

NamedTensors networkState(const TableSegNet& net);
/// Copies matching entries into the network. Every network parameter and
/// buffer must be present with the right shape, else WeightLoadError.
void loadNetworkState(TableSegNet& net, const NamedTensors& state);

/// Checkpoint directory: weights.bin + spec.json.
void saveNetwork(const std::filesystem::path& dir, const TableSegNet& net);
TableSegNet loadNetwork(const std::filesystem::path& dir);
NetworkSpec loadNetworkSpec(const std::filesystem::path& dir);

}  // namespace tablenet
