#ifndef SYNTHAUG_TENSOR_STORE_HPP
#define SYNTHAUG_TENSOR_STORE_HPP

#include <filesystem>
#include <map>
#include <string>

#include <torch/torch.h>

namespace synthaug::store {

using TensorMap = std::map<std::string, torch::Tensor>;

// Single-file named-tensor container: magic, tensor count, then per tensor
// name / dtype / shape / raw little-endian data, sorted by name. float32,
// float64 and int64 are supported. Writes are atomic (tmp + rename).
void save_tensors(const TensorMap& tensors, const std::filesystem::path& path);
TensorMap load_tensors(const std::filesystem::path& path);

// Parameters and buffers of a module, by their registered names.
TensorMap state_dict(const torch::nn::Module& module);

// Copies `state` into the module's parameters/buffers. With strict=true any
// missing, extra or shape-mismatched name raises DataError listing them all.
void load_state_dict(torch::nn::Module& module, const TensorMap& state, bool strict = true);

// Small-text companion writer (sidecars, reports): tmp + rename, so a file
// that exists is always complete.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace synthaug::store

#endif
