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

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>

#include "tablenet/errors.hpp"
#include "tablenet/network.hpp"
#include "test_util.hpp"

// libtorch defines its own CHECK; doctest must win.
#undef CHECK
#include <doctest.h>

using namespace tablenet;

namespace {

NetworkSpec tinySpec(int inputSize = 64) {
  auto s = NetworkSpec::reduced(inputSize, 16);
  return s;
}

bool allFinite(const torch::Tensor& t) { return torch::isfinite(t).all().item<bool>(); }

bool hasNonzeroGrad(const std::vector<torch::Tensor>& params) {
  for (const auto& p : params) {
    if (p.grad().defined() && p.grad().abs().sum().item<double>() > 0.0) return true;
  }
  return false;
}

bool allGradsZero(const std::vector<torch::Tensor>& params) {
  for (const auto& p : params) {
    if (p.grad().defined() && p.grad().abs().sum().item<double>() != 0.0) return false;
  }
  return true;
}

std::size_t gradTensorCount(const std::vector<torch::Tensor>& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.grad().defined() ? 1 : 0;
  return n;
}

void zeroGrads(TableSegNet& net) {
  for (auto& p : net->parameters()) p.mutable_grad() = torch::Tensor();
}

torch::Tensor randomMaskBatch(int n, int s, std::uint64_t seed) {
  torch::manual_seed(seed);
  return torch::randint(0, 2, {n, s, s}, torch::kLong);
}

}  // namespace

TEST_SUITE("network") {
  TEST_CASE("forward at 1024 yields two 1024x1024x2 score maps") {
    auto net = buildNetwork(NetworkSpec::reduced(1024, 16), false, 1);
    net->eval();
    torch::NoGradGuard guard;
    const auto [t, c] = net->forwardBoth(torch::zeros({1, 3, 1024, 1024}));
    CHECK((t.sizes().vec() == std::vector<std::int64_t>{1, 2, 1024, 1024}));
    CHECK((c.sizes().vec() == std::vector<std::int64_t>{1, 2, 1024, 1024}));
  }

  TEST_CASE("softmax channels sum to one and outputs stay finite") {
    auto net = buildNetwork(tinySpec(), false, 2);
    net->eval();
    torch::NoGradGuard guard;
    torch::manual_seed(3);
    const auto x = torch::rand({2, 3, 64, 64}) * 255.0;
    for (auto branch : {Branch::Table, Branch::Column}) {
      const auto out = branchOutput(net->forward(x, branch));
      CHECK(allFinite(out.logits));
      const double maxDev = (out.prob.sum(1) - 1.0).abs().max().item<double>();
      CHECK(maxDev <= 1e-6);
    }
    const cv::Mat black(64, 64, CV_8UC3, cv::Scalar::all(0));
    const auto masks = predictMasks(net, black);
    double lo, hi;
    cv::minMaxLoc(masks.tableProb, &lo, &hi);
    CHECK(lo >= 0.0);
    CHECK(hi <= 1.0);
    CHECK(cv::checkRange(masks.columnProb));
    CHECK_THROWS_AS(predictMasks(net, cv::Mat(32, 32, CV_8UC3)), ShapeError);
  }

  TEST_CASE("branchLoss analytic values") {
    // prob(correct) -> 1
    auto logits = torch::zeros({1, 2, 4, 4});
    logits.select(1, 1).fill_(50.0);
    CHECK(branchLoss(logits, torch::ones({1, 4, 4}, torch::kLong)).item<double>() < 1e-12);
    // uniform logits
    CHECK(branchLoss(torch::zeros({2, 2, 3, 5}), torch::ones({2, 3, 5}, torch::kLong)).item<double>() ==
          doctest::Approx(std::log(2.0)).epsilon(1e-6));
    // single pixel with prob(correct) = 0.9
    auto one = torch::zeros({1, 2, 1, 1}, torch::kDouble);
    one[0][1][0][0] = std::log(9.0);
    CHECK(branchLoss(one, torch::ones({1, 1, 1}, torch::kLong)).item<double>() ==
          doctest::Approx(-std::log(0.9)).epsilon(1e-12));
    CHECK_THROWS_AS(branchLoss(torch::zeros({1, 2, 4, 4}), torch::zeros({1, 4, 5}, torch::kLong)), ShapeError);
    CHECK_THROWS_AS(branchLoss(torch::zeros({1, 3, 4, 4}), torch::zeros({1, 4, 4}, torch::kLong)), ShapeError);
  }

  TEST_CASE("input shape is enforced") {
    auto net = buildNetwork(tinySpec(), false, 0);
    CHECK_THROWS_AS(net->forward(torch::zeros({1, 3, 32, 32}), Branch::Table), ShapeError);
    CHECK_THROWS_AS(NetworkSpec::reduced(100, 1).validate(), ConfigError);
  }

  TEST_CASE("gradients reach the encoder from each branch and never the sibling decoder") {
    auto net = buildNetwork(tinySpec(), false, 4);
    net->train();
    torch::manual_seed(5);
    const auto x = torch::rand({2, 3, 64, 64}) * 255.0;
    const auto y = randomMaskBatch(2, 64, 6);

    branchLoss(net->forward(x, Branch::Table), y).backward();
    CHECK(hasNonzeroGrad(net->encoderParameters()));
    CHECK(hasNonzeroGrad(net->decoderParameters(Branch::Table)));
    CHECK(allGradsZero(net->decoderParameters(Branch::Column)));
    const auto tableCount = gradTensorCount(net->encoderParameters());

    zeroGrads(net);
    branchLoss(net->forward(x, Branch::Column), y).backward();
    CHECK(hasNonzeroGrad(net->encoderParameters()));
    CHECK(hasNonzeroGrad(net->decoderParameters(Branch::Column)));
    CHECK(allGradsZero(net->decoderParameters(Branch::Table)));
    CHECK(gradTensorCount(net->encoderParameters()) == tableCount);
    CHECK(tableCount == net->encoderParameters().size());
  }

  TEST_CASE("encoder and decoder parameter groups partition the network") {
    auto net = buildNetwork(tinySpec(), false, 0);
    std::set<void*> seen;
    std::size_t total = 0;
    for (const auto& group : {net->encoderParameters(), net->decoderParameters(Branch::Table),
                              net->decoderParameters(Branch::Column)}) {
      for (const auto& p : group) {
        seen.insert(p.data_ptr());
        ++total;
      }
    }
    CHECK(seen.size() == total);
    CHECK(total == net->parameters().size());
  }

  TEST_CASE("analytic gradients match central finite differences on a 32x32 miniature") {
    auto spec = NetworkSpec::reduced(32, 32);
    spec.dropoutRate = 0.0;
    auto net = buildNetwork(spec, false, 7);
    net->to(torch::kDouble);
    net->eval();
    torch::manual_seed(8);
    const auto x = (torch::rand({1, 3, 32, 32}, torch::kDouble) * 255.0 - 128.0) / 64.0;
    const auto y = randomMaskBatch(1, 32, 9);

    for (auto branch : {Branch::Table, Branch::Column}) {
      zeroGrads(net);
      branchLoss(net->forward(x, branch), y).backward();
      auto params = net->encoderParameters();
      const auto dec = net->decoderParameters(branch);
      params.insert(params.end(), dec.begin(), dec.end());

      std::mt19937 rng(branch == Branch::Table ? 10 : 11);
      int checked = 0, attempts = 0;
      while (checked < 20 && attempts < 400) {
        ++attempts;
        auto& p = params[rng() % params.size()];
        if (!p.grad().defined()) continue;
        const auto flat = p.view(-1);
        const auto idx = static_cast<std::int64_t>(rng() % static_cast<unsigned>(flat.numel()));
        const double analytic = p.grad().view(-1)[idx].item<double>();
        const double h = 1e-6;
        double plus, minus;
        {
          torch::NoGradGuard guard;
          const double orig = flat[idx].item<double>();
          flat[idx] = orig + h;
          plus = branchLoss(net->forward(x, branch), y).item<double>();
          flat[idx] = orig - h;
          minus = branchLoss(net->forward(x, branch), y).item<double>();
          flat[idx] = orig;
        }
        const double numeric = (plus - minus) / (2.0 * h);
        const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
        CHECK(std::abs(analytic - numeric) / scale <= 1e-3);
        ++checked;
      }
      CHECK(checked == 20);
    }
  }

  TEST_CASE("eval forwards are bit-identical") {
    auto net = buildNetwork(tinySpec(), false, 12);
    net->eval();
    torch::NoGradGuard guard;
    torch::manual_seed(13);
    const auto x = torch::rand({1, 3, 64, 64}) * 255.0;
    const auto a = net->forward(x, Branch::Column);
    const auto b = net->forward(x, Branch::Column);
    CHECK(torch::equal(a, b));
    auto twin = buildNetwork(tinySpec(), false, 12);
    twin->eval();
    CHECK(torch::equal(twin->forward(x, Branch::Column), a));
  }

  TEST_CASE("upsampling starts as bilinear interpolation") {
    SkipDecoder dec(2, 2);
    torch::NoGradGuard guard;
    for (auto& p : dec->named_parameters()) {
      if (p.key().find("score_pool") != std::string::npos) p.value().zero_();
    }
    const auto score = torch::ones({1, 2, 4, 4});
    const auto out = dec->forward(score, torch::zeros({1, 2, 16, 16}), torch::zeros({1, 2, 8, 8}));
    CHECK((out.sizes().vec() == std::vector<std::int64_t>{1, 2, 128, 128}));
    // away from the border a constant map stays constant
    const auto interior = out.slice(2, 40, 88).slice(3, 40, 88);
    CHECK((interior - 1.0).abs().max().item<double>() < 1e-5);
  }

  TEST_CASE("checkpoint round trip is bit-identical") {
    testutil::TempDir dir;
    auto net = buildNetwork(tinySpec(), false, 14);
    net->eval();
    torch::NoGradGuard guard;
    torch::manual_seed(15);
    const auto x = torch::rand({1, 3, 64, 64}) * 255.0;
    const auto before = net->forwardBoth(x);
    saveNetwork(dir.path(), net);
    auto loaded = loadNetwork(dir.path());
    loaded->eval();
    CHECK(loaded->spec() == net->spec());
    const auto after = loaded->forwardBoth(x);
    CHECK(torch::equal(before.first, after.first));
    CHECK(torch::equal(before.second, after.second));
  }

  TEST_CASE("weight files round trip every dtype and reject damage") {
    testutil::TempDir dir;
    NamedTensors t = {{"f", torch::randn({2, 3})},
                      {"d", torch::randn({4}, torch::kDouble)},
                      {"u", torch::randint(0, 255, {5}, torch::kUInt8)},
                      {"l", torch::randint(-9, 9, {1, 2, 1}, torch::kLong)},
                      {"s", torch::tensor(3.5f).reshape({})}};
    saveTensors(dir / "w.bin", t);
    const auto back = loadTensors(dir / "w.bin");
    REQUIRE(back.size() == t.size());
    for (const auto& [k, v] : t) {
      CHECK((back.at(k).scalar_type() == v.scalar_type()));
      CHECK(torch::equal(back.at(k), v));
    }
    testutil::writeText(dir / "bad.bin", "nope");
    CHECK_THROWS_AS(loadTensors(dir / "bad.bin"), WeightLoadError);
    {
      std::ifstream in(dir / "w.bin", std::ios::binary);
      std::string bytes((std::istreambuf_iterator<char>(in)), {});
      testutil::writeText(dir / "short.bin", bytes.substr(0, bytes.size() - 3));
    }
    CHECK_THROWS_AS(loadTensors(dir / "short.bin"), WeightLoadError);
    CHECK_THROWS_AS(loadTensors(dir / "missing.bin"), WeightLoadError);
  }

  TEST_CASE("state loading reports missing and ill-shaped tensors") {
    auto net = buildNetwork(tinySpec(), false, 0);
    auto state = networkState(net);
    auto missing = state;
    missing.erase("conv3_2.weight");
    CHECK_THROWS_AS(loadNetworkState(net, missing), WeightLoadError);
    auto wrong = state;
    wrong["conv8_column.bias"] = torch::zeros({3});
    CHECK_THROWS_AS(loadNetworkState(net, wrong), WeightLoadError);
    state["extra.unused"] = torch::zeros({1});
    CHECK_NOTHROW(loadNetworkState(net, state));
  }

  TEST_CASE("pretrained encoder weights load from the cache directory") {
    testutil::TempDir dir;
    const auto spec = tinySpec();
    auto donor = buildNetwork(spec, false, 21);
    NamedTensors vgg;
    for (const auto& name : vggLayerNames()) {
      const auto state = networkState(donor);
      vgg[name + ".weight"] = state.at(name + ".weight");
      vgg[name + ".bias"] = state.at(name + ".bias");
    }
    saveTensors(dir / "vgg19.bin", vgg);
    auto net = buildNetwork(spec, true, 99, dir.path());
    const auto got = networkState(net);
    CHECK(torch::equal(got.at("conv5_4.weight"), vgg.at("conv5_4.weight")));
    CHECK(torch::equal(got.at("conv1_1.bias"), vgg.at("conv1_1.bias")));

    CHECK_THROWS_AS(buildNetwork(NetworkSpec::reduced(64, 8), true, 0, dir.path()), WeightLoadError);
    vgg.erase("conv2_1.bias");
    saveTensors(dir / "vgg19.bin", vgg);
    CHECK_THROWS_AS(buildNetwork(spec, true, 0, dir.path()), WeightLoadError);
    testutil::TempDir empty;
    CHECK_THROWS_AS(buildNetwork(spec, true, 0, empty.path()), WeightLoadError);
  }

  TEST_CASE("network spec JSON round trip") {
    auto s = NetworkSpec::reduced(256, 4);
    s.dropoutRate = 0.3;
    CHECK(NetworkSpec::fromJson(s.toJson()) == s);
    CHECK((s.encoderWidths == std::array<int, 5>{16, 32, 64, 128, 128}));
    CHECK_THROWS_AS(NetworkSpec::fromJson({{"input_size", 48}}), ConfigError);
  }
}
