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

#include "tablenet/network.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tablenet/errors.hpp"

namespace tablenet {
namespace {

namespace nn = torch::nn;

constexpr std::array<int, 5> kBlockDepth{2, 2, 4, 4, 4};
constexpr char kWeightMagic[4] = {'T', 'N', 'W', 'T'};
constexpr std::uint32_t kWeightVersion = 1;

// ImageNet statistics of the backbone's pretraining corpus (RGB, 0..255).
constexpr float kMean[3] = {123.68f, 116.78f, 103.94f};
constexpr float kStd[3] = {58.393f, 57.12f, 57.375f};

torch::Tensor bilinearKernel(int channels, int k) {
  const double factor = (k + 1) / 2;
  const double center = k % 2 == 1 ? factor - 1.0 : factor - 0.5;
  auto w = torch::zeros({channels, channels, k, k});
  auto acc = w.accessor<float, 4>();
  for (int c = 0; c < channels; ++c) {
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        acc[c][c][i][j] =
            static_cast<float>((1.0 - std::abs(i - center) / factor) * (1.0 - std::abs(j - center) / factor));
      }
    }
  }
  return w;
}

nn::Conv2d conv(int in, int out, int k) { return nn::Conv2d(nn::Conv2dOptions(in, out, k).padding(k / 2)); }

void heInit(const nn::Conv2d& c) {
  torch::NoGradGuard guard;
  nn::init::kaiming_normal_(c->weight, 0.0, torch::kFanIn, torch::kReLU);
  nn::init::zeros_(c->bias);
}

enum class DType : std::uint8_t { F32 = 0, F64 = 1, U8 = 2, I64 = 3 };

DType dtypeCode(const torch::Tensor& t) {
  switch (t.scalar_type()) {
    case torch::kFloat: return DType::F32;
    case torch::kDouble: return DType::F64;
    case torch::kByte: return DType::U8;
    case torch::kLong: return DType::I64;
    default: throw WeightLoadError("unsupported tensor dtype for weight file");
  }
}

torch::ScalarType scalarType(DType d) {
  switch (d) {
    case DType::F32: return torch::kFloat;
    case DType::F64: return torch::kDouble;
    case DType::U8: return torch::kByte;
    case DType::I64: return torch::kLong;
  }
  throw WeightLoadError("unknown dtype code in weight file");
}

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw WeightLoadError("truncated weight file " + path.string());
  return v;
}

}  // namespace

std::string_view branchName(Branch b) { return b == Branch::Table ? "table" : "column"; }

NetworkSpec NetworkSpec::reduced(int inputSize, int divisor) {
  if (divisor < 1) throw ConfigError("width divisor must be positive");
  NetworkSpec s;
  s.inputSize = inputSize;
  for (auto& w : s.encoderWidths) w = std::max(1, w / divisor);
  s.conv6Width = std::max(1, s.conv6Width / divisor);
  s.conv7ColumnWidth = std::max(1, s.conv7ColumnWidth / divisor);
  return s;
}

void NetworkSpec::validate() const {
  if (inputSize < 32 || inputSize % 32 != 0) throw ConfigError("input_size must be a positive multiple of 32");
  for (int w : encoderWidths) {
    if (w < 1) throw ConfigError("encoder widths must be positive");
  }
  if (conv6Width < 1 || conv7ColumnWidth < 1) throw ConfigError("conv6/conv7 widths must be positive");
  if (!(dropoutRate >= 0.0 && dropoutRate < 1.0)) throw ConfigError("dropout_rate must lie in [0,1)");
}

Json NetworkSpec::toJson() const {
  return {{"input_size", inputSize},
          {"encoder_widths", encoderWidths},
          {"conv6_width", conv6Width},
          {"conv7_column_width", conv7ColumnWidth},
          {"dropout_rate", dropoutRate}};
}

NetworkSpec NetworkSpec::fromJson(const Json& j) {
  NetworkSpec s;
  try {
    s.inputSize = j.value("input_size", s.inputSize);
    if (j.contains("encoder_widths")) s.encoderWidths = j.at("encoder_widths").get<std::array<int, 5>>();
    s.conv6Width = j.value("conv6_width", s.conv6Width);
    s.conv7ColumnWidth = j.value("conv7_column_width", s.conv7ColumnWidth);
    s.dropoutRate = j.value("dropout_rate", s.dropoutRate);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("network spec: ") + e.what());
  }
  s.validate();
  return s;
}

SkipDecoderImpl::SkipDecoderImpl(int pool3Channels, int pool4Channels) {
  scorePool4_ = register_module("score_pool4", nn::Conv2d(nn::Conv2dOptions(pool4Channels, 2, 1)));
  scorePool3_ = register_module("score_pool3", nn::Conv2d(nn::Conv2dOptions(pool3Channels, 2, 1)));
  up2a_ = register_module("up2a", nn::ConvTranspose2d(nn::ConvTranspose2dOptions(2, 2, 4).stride(2).padding(1).bias(false)));
  up2b_ = register_module("up2b", nn::ConvTranspose2d(nn::ConvTranspose2dOptions(2, 2, 4).stride(2).padding(1).bias(false)));
  up8_ = register_module("up8", nn::ConvTranspose2d(nn::ConvTranspose2dOptions(2, 2, 16).stride(8).padding(4).bias(false)));
  // The pool3/pool4 projections keep libtorch's default initialisation:
  // zero-initialised skips train markedly slower from a random encoder.
  torch::NoGradGuard guard;
  up2a_->weight.copy_(bilinearKernel(2, 4));
  up2b_->weight.copy_(bilinearKernel(2, 4));
  up8_->weight.copy_(bilinearKernel(2, 16));
}

torch::Tensor SkipDecoderImpl::forward(const torch::Tensor& score, const torch::Tensor& pool3,
                                       const torch::Tensor& pool4) {
  auto x = up2a_->forward(score) + scorePool4_->forward(pool4);
  x = up2b_->forward(x) + scorePool3_->forward(pool3);
  return up8_->forward(x);
}

const std::vector<std::string>& vggLayerNames() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (std::size_t b = 0; b < kBlockDepth.size(); ++b) {
      for (int i = 1; i <= kBlockDepth[b]; ++i) out.push_back("conv" + std::to_string(b + 1) + "_" + std::to_string(i));
    }
    return out;
  }();
  return names;
}

TableSegNetImpl::TableSegNetImpl(const NetworkSpec& spec) : spec_(spec) {
  spec_.validate();
  const auto& names = vggLayerNames();
  int in = 3;
  std::size_t layer = 0;
  for (std::size_t b = 0; b < kBlockDepth.size(); ++b) {
    const int out = spec_.encoderWidths[b];
    for (int i = 0; i < kBlockDepth[b]; ++i) {
      auto c = register_module(names[layer++], conv(in, out, 3));
      heInit(c);
      encoderConvs_.push_back(c);
      in = out;
    }
    blockEnds_.push_back(static_cast<int>(encoderConvs_.size()) - 1);
  }
  const auto drop = nn::DropoutOptions(spec_.dropoutRate);
  conv6a_ = register_module("conv6_1", conv(in, spec_.conv6Width, 1));
  conv6b_ = register_module("conv6_2", conv(spec_.conv6Width, spec_.conv6Width, 1));
  drop6a_ = register_module("drop6_1", nn::Dropout(drop));
  drop6b_ = register_module("drop6_2", nn::Dropout(drop));
  heInit(conv6a_);
  heInit(conv6b_);

  conv7Table_ = register_module("conv7_table", conv(spec_.conv6Width, 2, 1));
  tableDecoder_ = register_module("table_decoder", SkipDecoder(spec_.encoderWidths[2], spec_.encoderWidths[3]));

  conv7Column_ = register_module("conv7_column", conv(spec_.conv6Width, spec_.conv7ColumnWidth, 1));
  drop7Column_ = register_module("drop7_column", nn::Dropout(drop));
  conv8Column_ = register_module("conv8_column", conv(spec_.conv7ColumnWidth, 2, 1));
  heInit(conv7Column_);
  columnDecoder_ = register_module("column_decoder", SkipDecoder(spec_.encoderWidths[2], spec_.encoderWidths[3]));
}

TableSegNetImpl::Features TableSegNetImpl::encode(const torch::Tensor& input) {
  if (input.dim() != 4 || input.size(1) != 3 || input.size(2) != spec_.inputSize || input.size(3) != spec_.inputSize) {
    std::ostringstream msg;
    msg << "network input must be N x 3 x " << spec_.inputSize << " x " << spec_.inputSize << ", got "
        << input.sizes();
    throw ShapeError(msg.str());
  }
  Features f;
  auto x = input;
  std::size_t block = 0;
  for (std::size_t i = 0; i < encoderConvs_.size(); ++i) {
    x = torch::relu(encoderConvs_[i]->forward(x));
    if (static_cast<int>(i) == blockEnds_[block]) {
      x = torch::max_pool2d(x, 2);
      if (block == 2) f.pool3 = x;
      if (block == 3) f.pool4 = x;
      ++block;
    }
  }
  x = drop6a_->forward(torch::relu(conv6a_->forward(x)));
  f.conv6 = drop6b_->forward(torch::relu(conv6b_->forward(x)));
  return f;
}

torch::Tensor TableSegNetImpl::decode(const Features& f, Branch branch) {
  if (branch == Branch::Table) return tableDecoder_->forward(conv7Table_->forward(f.conv6), f.pool3, f.pool4);
  auto x = drop7Column_->forward(torch::relu(conv7Column_->forward(f.conv6)));
  return columnDecoder_->forward(conv8Column_->forward(x), f.pool3, f.pool4);
}

torch::Tensor TableSegNetImpl::forward(const torch::Tensor& input, Branch branch) { return decode(encode(input), branch); }

std::pair<torch::Tensor, torch::Tensor> TableSegNetImpl::forwardBoth(const torch::Tensor& input) {
  const auto f = encode(input);
  return {decode(f, Branch::Table), decode(f, Branch::Column)};
}

std::vector<torch::Tensor> TableSegNetImpl::encoderParameters() const {
  std::vector<torch::Tensor> out;
  for (const auto& c : encoderConvs_) {
    out.push_back(c->weight);
    out.push_back(c->bias);
  }
  for (const auto& c : {conv6a_, conv6b_}) {
    out.push_back(c->weight);
    out.push_back(c->bias);
  }
  return out;
}

std::vector<torch::Tensor> TableSegNetImpl::decoderParameters(Branch branch) const {
  std::vector<torch::Tensor> out;
  auto append = [&](const std::vector<torch::Tensor>& ps) { out.insert(out.end(), ps.begin(), ps.end()); };
  if (branch == Branch::Table) {
    append(conv7Table_->parameters());
    append(tableDecoder_->parameters());
  } else {
    append(conv7Column_->parameters());
    append(conv8Column_->parameters());
    append(columnDecoder_->parameters());
  }
  return out;
}

TableSegNet buildNetwork(const NetworkSpec& spec, bool pretrained, std::uint64_t seed,
                      const std::filesystem::path& cacheDir) {
  torch::manual_seed(seed);
  TableSegNet net(spec);
  if (!pretrained) return net;

  std::filesystem::path dir = cacheDir;
  if (dir.empty()) {
    const char* env = std::getenv("TABLENET_CACHE");
    if (!env || !*env) throw WeightLoadError("pretrained encoder requested but TABLENET_CACHE is not set");
    dir = env;
  }
  const auto file = dir / "vgg19.bin";
  if (!std::filesystem::exists(file)) throw WeightLoadError("pretrained encoder weights not found: " + file.string());
  const auto weights = loadTensors(file);
  auto params = net->named_parameters();
  torch::NoGradGuard guard;
  for (const auto& layer : vggLayerNames()) {
    for (const char* part : {".weight", ".bias"}) {
      const std::string key = layer + part;
      auto it = weights.find(key);
      if (it == weights.end()) throw WeightLoadError("pretrained weights lack " + key);
      auto& p = params[key];
      if (!it->second.sizes().equals(p.sizes())) {
        std::ostringstream msg;
        msg << "pretrained " << key << " has shape " << it->second.sizes() << ", network expects " << p.sizes();
        throw WeightLoadError(msg.str());
      }
      p.copy_(it->second.to(p.scalar_type()));
    }
  }
  return net;
}

BranchOutput branchOutput(const torch::Tensor& logits) { return {logits, torch::softmax(logits, 1)}; }

torch::Tensor branchLoss(const torch::Tensor& logits, const torch::Tensor& target) {
  if (logits.dim() != 4 || logits.size(1) != 2 || target.dim() != 3 || target.size(0) != logits.size(0) ||
      target.size(1) != logits.size(2) || target.size(2) != logits.size(3)) {
    std::ostringstream msg;
    msg << "loss shape mismatch: logits " << logits.sizes() << " vs target " << target.sizes();
    throw ShapeError(msg.str());
  }
  return torch::nn::functional::cross_entropy(logits, target.to(torch::kLong));
}

torch::Tensor imagesToTensor(const std::vector<cv::Mat>& images) {
  if (images.empty()) throw ShapeError("empty image batch");
  const int h = images[0].rows, w = images[0].cols;
  std::vector<torch::Tensor> items;
  for (const auto& img : images) {
    if (img.type() != CV_8UC3 || img.rows != h || img.cols != w) throw ShapeError("batch images must share size and be 8-bit RGB");
    const cv::Mat contiguous = img.isContinuous() ? img : img.clone();
    items.push_back(torch::from_blob(const_cast<uchar*>(contiguous.data), {h, w, 3}, torch::kUInt8)
                        .permute({2, 0, 1})
                        .to(torch::kFloat));
  }
  auto batch = torch::stack(items);
  const auto mean = torch::tensor({kMean[0], kMean[1], kMean[2]}).view({1, 3, 1, 1});
  const auto stdev = torch::tensor({kStd[0], kStd[1], kStd[2]}).view({1, 3, 1, 1});
  return (batch - mean) / stdev;
}

torch::Tensor masksToTensor(const std::vector<cv::Mat>& masks) {
  if (masks.empty()) throw ShapeError("empty mask batch");
  std::vector<torch::Tensor> items;
  for (const auto& m : masks) {
    if (m.type() != CV_8UC1 || m.size() != masks[0].size()) throw ShapeError("batch masks must share size and be 8-bit");
    const cv::Mat contiguous = m.isContinuous() ? m : m.clone();
    items.push_back(torch::from_blob(const_cast<uchar*>(contiguous.data), {m.rows, m.cols}, torch::kUInt8)
                        .to(torch::kLong));
  }
  return torch::stack(items);
}

MaskPair predictMasks(TableSegNet& net, const cv::Mat& image) {
  const int s = net->spec().inputSize;
  if (image.rows != s || image.cols != s) {
    throw ShapeError("predictMasks expects a " + std::to_string(s) + "x" + std::to_string(s) + " preprocessed image");
  }
  const bool wasTraining = net->is_training();
  net->eval();
  torch::NoGradGuard guard;
  const auto [tableLogits, columnLogits] = net->forwardBoth(imagesToTensor({image}));
  if (wasTraining) net->train();
  auto toMat = [s](const torch::Tensor& logits) {
    const auto p = torch::softmax(logits, 1).select(1, 1)[0].to(torch::kFloat).contiguous();
    return cv::Mat(s, s, CV_32FC1, p.data_ptr<float>()).clone();
  };
  return {toMat(tableLogits), toMat(columnLogits)};
}

void saveTensors(const std::filesystem::path& path, const NamedTensors& tensors) {
  std::ostringstream out(std::ios::binary);
  out.write(kWeightMagic, 4);
  put<std::uint32_t>(out, kWeightVersion);
  put<std::uint64_t>(out, tensors.size());
  for (const auto& [name, tensor] : tensors) {
    const auto t = tensor.detach().cpu().contiguous();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dim()));
    for (auto d : t.sizes()) put<std::int64_t>(out, d);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(dtypeCode(t)));
    out.write(static_cast<const char*>(t.data_ptr()), static_cast<std::streamsize>(t.nbytes()));
  }
  writeFileAtomic(path, out.str());
}

NamedTensors loadTensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightLoadError("cannot open weight file " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kWeightMagic, 4) != 0) {
    throw WeightLoadError("not a weight file: " + path.string());
  }
  if (get<std::uint32_t>(in, path) != kWeightVersion) throw WeightLoadError("unsupported weight file version");
  const auto count = get<std::uint64_t>(in, path);
  NamedTensors out;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto nameLen = get<std::uint32_t>(in, path);
    if (nameLen > 4096) throw WeightLoadError("corrupt tensor name in " + path.string());
    std::string name(nameLen, '\0');
    if (!in.read(name.data(), nameLen)) throw WeightLoadError("truncated weight file " + path.string());
    const auto ndim = get<std::uint32_t>(in, path);
    if (ndim > 8) throw WeightLoadError("corrupt tensor rank in " + path.string());
    std::vector<std::int64_t> dims(ndim);
    for (auto& d : dims) {
      d = get<std::int64_t>(in, path);
      if (d < 0) throw WeightLoadError("negative tensor dimension in " + path.string());
    }
    const auto code = get<std::uint8_t>(in, path);
    if (code > static_cast<std::uint8_t>(DType::I64)) throw WeightLoadError("unknown dtype code in " + path.string());
    auto t = torch::empty(dims, torch::TensorOptions().dtype(scalarType(static_cast<DType>(code))));
    if (!in.read(static_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(t.nbytes()))) {
      throw WeightLoadError("truncated tensor data for " + name + " in " + path.string());
    }
    out.emplace(std::move(name), std::move(t));
  }
  return out;
}

NamedTensors networkState(const TableSegNet& net) {
  NamedTensors out;
  for (const auto& p : net->named_parameters()) out.emplace(p.key(), p.value().detach().clone());
  for (const auto& b : net->named_buffers()) out.emplace(b.key(), b.value().detach().clone());
  return out;
}

void loadNetworkState(TableSegNet& net, const NamedTensors& state) {
  torch::NoGradGuard guard;
  auto assign = [&](const std::string& key, torch::Tensor& target) {
    auto it = state.find(key);
    if (it == state.end()) throw WeightLoadError("checkpoint lacks tensor " + key);
    if (!it->second.sizes().equals(target.sizes())) {
      std::ostringstream msg;
      msg << "checkpoint tensor " << key << " has shape " << it->second.sizes() << ", network expects "
          << target.sizes();
      throw WeightLoadError(msg.str());
    }
    target.copy_(it->second.to(target.scalar_type()));
  };
  for (auto& p : net->named_parameters()) assign(p.key(), p.value());
  for (auto& b : net->named_buffers()) assign(b.key(), b.value());
}

void saveNetwork(const std::filesystem::path& dir, const TableSegNet& net) {
  std::filesystem::create_directories(dir);
  saveTensors(dir / "weights.bin", networkState(net));
  writeJsonFile(dir / "spec.json", net->spec().toJson());
}

NetworkSpec loadNetworkSpec(const std::filesystem::path& dir) {
  const auto file = dir / "spec.json";
  if (!std::filesystem::exists(file)) throw WeightLoadError("checkpoint has no spec.json: " + dir.string());
  try {
    return NetworkSpec::fromJson(readJsonFile(file));
  } catch (const ConfigError& e) {
    throw WeightLoadError(std::string("checkpoint spec is invalid: ") + e.what());
  }
}

TableSegNet loadNetwork(const std::filesystem::path& dir) {
  TableSegNet net(loadNetworkSpec(dir));
  loadNetworkState(net, loadTensors(dir / "weights.bin"));
  return net;
}

}  // namespace tablenet
