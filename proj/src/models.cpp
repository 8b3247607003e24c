#include "synthaug/models.hpp"

namespace synthaug::models {

namespace {

torch::nn::Conv2d conv3x3(std::int64_t in, std::int64_t out, std::int64_t stride) {
    return torch::nn::Conv2d(
        torch::nn::Conv2dOptions(in, out, 3).stride(stride).padding(1).bias(false));
}

torch::nn::Conv2d conv1x1(std::int64_t in, std::int64_t out, std::int64_t stride) {
    return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 1).stride(stride).bias(false));
}

}  // namespace

BasicBlockImpl::BasicBlockImpl(std::int64_t in, std::int64_t out, std::int64_t stride) {
    conv1 = register_module("conv1", conv3x3(in, out, stride));
    bn1 = register_module("bn1", torch::nn::BatchNorm2d(out));
    conv2 = register_module("conv2", conv3x3(out, out, 1));
    bn2 = register_module("bn2", torch::nn::BatchNorm2d(out));
    if (stride != 1 || in != out) {
        downsample = register_module(
            "downsample", torch::nn::Sequential(conv1x1(in, out, stride), torch::nn::BatchNorm2d(out)));
    }
}

torch::Tensor BasicBlockImpl::forward(const torch::Tensor& x) {
    auto out = torch::relu(bn1->forward(conv1->forward(x)));
    out = bn2->forward(conv2->forward(out));
    auto skip = downsample ? downsample->forward(x) : x;
    return torch::relu(out + skip);
}

TinyResNetImpl::TinyResNetImpl(std::int64_t num_classes) {
    stem = register_module("stem", conv3x3(3, 16, 2));
    stem_bn = register_module("stem_bn", torch::nn::BatchNorm2d(16));
    block1 = register_module("block1", BasicBlock(16, 16, 1));
    block2 = register_module("block2", BasicBlock(16, 32, 2));
    block3 = register_module("block3", BasicBlock(32, 64, 2));
    fc = register_module("fc", torch::nn::Linear(64, num_classes));
}

torch::Tensor TinyResNetImpl::forward(const torch::Tensor& batch) {
    auto x = torch::relu(stem_bn->forward(stem->forward(batch)));
    x = block1->forward(x);
    x = block2->forward(x);
    x = block3->forward(x);
    x = torch::adaptive_avg_pool2d(x, {1, 1}).flatten(1);
    return fc->forward(x);
}

BottleneckImpl::BottleneckImpl(std::int64_t in, std::int64_t mid, std::int64_t out,
                               std::int64_t stride) {
    conv1 = register_module("conv1", conv1x1(in, mid, 1));
    bn1 = register_module("bn1", torch::nn::BatchNorm2d(mid));
    conv2 = register_module("conv2", conv3x3(mid, mid, stride));
    bn2 = register_module("bn2", torch::nn::BatchNorm2d(mid));
    conv3 = register_module("conv3", conv1x1(mid, out, 1));
    bn3 = register_module("bn3", torch::nn::BatchNorm2d(out));
    if (stride != 1 || in != out) {
        downsample = register_module(
            "downsample", torch::nn::Sequential(conv1x1(in, out, stride), torch::nn::BatchNorm2d(out)));
    }
}

torch::Tensor BottleneckImpl::forward(const torch::Tensor& x) {
    auto out = torch::relu(bn1->forward(conv1->forward(x)));
    out = torch::relu(bn2->forward(conv2->forward(out)));
    out = bn3->forward(conv3->forward(out));
    auto skip = downsample ? downsample->forward(x) : x;
    return torch::relu(out + skip);
}

namespace {

torch::nn::Sequential make_stage(std::int64_t in, std::int64_t mid, std::int64_t blocks,
                                 std::int64_t stride) {
    const std::int64_t out = mid * 4;
    torch::nn::Sequential stage;
    stage->push_back(Bottleneck(in, mid, out, stride));
    for (std::int64_t i = 1; i < blocks; ++i) stage->push_back(Bottleneck(out, mid, out, 1));
    return stage;
}

}  // namespace

ResNet50Impl::ResNet50Impl(std::int64_t num_classes) {
    conv1 = register_module(
        "conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(3, 64, 7).stride(2).padding(3).bias(false)));
    bn1 = register_module("bn1", torch::nn::BatchNorm2d(64));
    layer1 = register_module("layer1", make_stage(64, 64, 3, 1));
    layer2 = register_module("layer2", make_stage(256, 128, 4, 2));
    layer3 = register_module("layer3", make_stage(512, 256, 6, 2));
    layer4 = register_module("layer4", make_stage(1024, 512, 3, 2));
    fc = register_module("fc", torch::nn::Linear(2048, num_classes));
}

torch::Tensor ResNet50Impl::forward(const torch::Tensor& batch) {
    auto x = torch::relu(bn1->forward(conv1->forward(batch)));
    x = torch::max_pool2d(x, 3, 2, 1);
    x = layer1->forward(x);
    x = layer2->forward(x);
    x = layer3->forward(x);
    x = layer4->forward(x);
    x = torch::adaptive_avg_pool2d(x, {1, 1}).flatten(1);
    return fc->forward(x);
}

std::int64_t parameter_count(const torch::nn::Module& m) {
    std::int64_t n = 0;
    for (const auto& p : m.parameters()) n += p.numel();
    return n;
}

}  // namespace synthaug::models
