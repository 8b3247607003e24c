#ifndef SYNTHAUG_IMAGEIO_HPP
#define SYNTHAUG_IMAGEIO_HPP

#include <filesystem>

#include <torch/torch.h>

namespace synthaug::imageio {

// Decodes an image file into a float32 CHW tensor in [0, 1] with exactly
// 3 channels (grayscale inputs are replicated).
torch::Tensor load_image(const std::filesystem::path& path);

// Encodes a CHW float tensor in [0, 1] as an 8-bit PNG. Values are clamped
// and rounded to the nearest 1/255 step. The write is atomic (tmp + rename)
// so an existing file is always a complete one.
void save_png(const torch::Tensor& chw, const std::filesystem::path& path);

}  // namespace synthaug::imageio

#endif
