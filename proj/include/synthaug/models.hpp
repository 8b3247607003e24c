#ifndef SYNTHAUG_MODELS_HPP
#define SYNTHAUG_MODELS_HPP

#include <cstdint>
#include <memory>

#include <torch/torch.h>

namespace synthaug::models {

// Common surface for classifier backbones: a logits forward plus access to
// the 2-output head so training can tell head from backbone parameters.
struct BackboneImpl : torch::nn::Module {
    ~BackboneImpl() override = default;
    virtual torch::Tensor forward(const torch::Tensor& batch) = 0;
    virtual torch::nn::Linear head() = 0;
};

struct BasicBlockImpl : torch::nn::Module {
    BasicBlockImpl(std::int64_t in, std::int64_t out, std::int64_t stride);
    torch::Tensor forward(const torch::Tensor& x);

    torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
    torch::nn::BatchNorm2d bn1{nullptr}, bn2{nullptr};
    torch::nn::Sequential downsample{nullptr};
};
TORCH_MODULE(BasicBlock);

// Small residual net for low-resolution inputs: stride-2 stem, three basic
// blocks at 16/32/64 channels, global average pooling, 2-way linear head.
struct TinyResNetImpl : BackboneImpl {
    TinyResNetImpl(std::int64_t num_classes = 2);
    torch::Tensor forward(const torch::Tensor& batch) override;
    torch::nn::Linear head() override { return fc; }

    torch::nn::Conv2d stem{nullptr};
    torch::nn::BatchNorm2d stem_bn{nullptr};
    BasicBlock block1{nullptr}, block2{nullptr}, block3{nullptr};
    torch::nn::Linear fc{nullptr};
};
TORCH_MODULE(TinyResNet);

struct BottleneckImpl : torch::nn::Module {
    BottleneckImpl(std::int64_t in, std::int64_t mid, std::int64_t out, std::int64_t stride);
    torch::Tensor forward(const torch::Tensor& x);

    torch::nn::Conv2d conv1{nullptr}, conv2{nullptr}, conv3{nullptr};
    torch::nn::BatchNorm2d bn1{nullptr}, bn2{nullptr}, bn3{nullptr};
    torch::nn::Sequential downsample{nullptr};
};
TORCH_MODULE(Bottleneck);

// Canonical 50-layer bottleneck residual network (stages 3/4/6/3, widths
// 64/128/256/512, expansion 4) with the final layer replaced by a 2-output
// linear head.
struct ResNet50Impl : BackboneImpl {
    ResNet50Impl(std::int64_t num_classes = 2);
    torch::Tensor forward(const torch::Tensor& batch) override;
    torch::nn::Linear head() override { return fc; }

    torch::nn::Conv2d conv1{nullptr};
    torch::nn::BatchNorm2d bn1{nullptr};
    torch::nn::Sequential layer1{nullptr}, layer2{nullptr}, layer3{nullptr}, layer4{nullptr};
    torch::nn::Linear fc{nullptr};
};
TORCH_MODULE(ResNet50);

std::int64_t parameter_count(const torch::nn::Module& m);

}  // namespace synthaug::models

#endif
