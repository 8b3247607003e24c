#include "synthaug/tensor_store.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "synthaug/common.hpp"

namespace synthaug::store {

namespace {

constexpr char kMagic[8] = {'S', 'Y', 'N', 'T', 'E', 'N', 'S', '1'};

std::uint8_t dtype_code(torch::ScalarType t) {
    switch (t) {
        case torch::kFloat32: return 0;
        case torch::kFloat64: return 1;
        case torch::kInt64: return 2;
        default: throw UsageError("tensor store: unsupported dtype");
    }
}

torch::ScalarType code_dtype(std::uint8_t c) {
    switch (c) {
        case 0: return torch::kFloat32;
        case 1: return torch::kFloat64;
        case 2: return torch::kInt64;
        default: throw DataError("tensor store: unknown dtype code " + std::to_string(c));
    }
}

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const std::string& path) {
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
        throw DataError("tensor store: truncated file " + path);
    }
    return v;
}

}  // namespace

void save_tensors(const TensorMap& tensors, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("tensor store: cannot write " + path.string());

    os.write(kMagic, sizeof(kMagic));
    write_pod<std::uint64_t>(os, tensors.size());
    for (const auto& [name, raw] : tensors) {
        auto t = raw.detach().contiguous().cpu();
        write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod<std::uint8_t>(os, dtype_code(t.scalar_type()));
        write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(t.dim()));
        for (std::int64_t d = 0; d < t.dim(); ++d) write_pod<std::int64_t>(os, t.size(d));
        const auto nbytes = static_cast<std::uint64_t>(t.numel() * t.element_size());
        write_pod<std::uint64_t>(os, nbytes);
        os.write(static_cast<const char*>(t.data_ptr()), static_cast<std::streamsize>(nbytes));
    }
    os.close();
    if (!os) throw IoError("tensor store: write failed for " + path.string());
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("tensor store: cannot finalize " + path.string() + ": " + ec.message());
}

TensorMap load_tensors(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("tensor store: cannot open " + path.string());

    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
        throw DataError("tensor store: bad magic in " + path.string());
    }
    const auto count = read_pod<std::uint64_t>(is, path.string());
    TensorMap out;
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto name_len = read_pod<std::uint32_t>(is, path.string());
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len)) {
            throw DataError("tensor store: truncated file " + path.string());
        }
        const auto dtype = code_dtype(read_pod<std::uint8_t>(is, path.string()));
        const auto ndim = read_pod<std::uint8_t>(is, path.string());
        std::vector<std::int64_t> sizes;
        for (std::uint8_t d = 0; d < ndim; ++d) sizes.push_back(read_pod<std::int64_t>(is, path.string()));
        const auto nbytes = read_pod<std::uint64_t>(is, path.string());
        auto t = torch::empty(sizes, torch::TensorOptions().dtype(dtype));
        if (static_cast<std::uint64_t>(t.numel() * t.element_size()) != nbytes) {
            throw DataError("tensor store: size mismatch for tensor '" + name + "' in " +
                            path.string());
        }
        if (!is.read(static_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(nbytes))) {
            throw DataError("tensor store: truncated file " + path.string());
        }
        out.emplace(std::move(name), std::move(t));
    }
    return out;
}

TensorMap state_dict(const torch::nn::Module& module) {
    TensorMap out;
    for (const auto& p : module.named_parameters()) out.emplace(p.key(), p.value());
    for (const auto& b : module.named_buffers()) out.emplace(b.key(), b.value());
    return out;
}

void load_state_dict(torch::nn::Module& module, const TensorMap& state, bool strict) {
    auto own = state_dict(module);
    std::string problems;
    for (const auto& [name, tensor] : state) {
        auto it = own.find(name);
        if (it == own.end()) {
            if (strict) problems += "\n  unexpected tensor: " + name;
            continue;
        }
        if (it->second.sizes() != tensor.sizes()) {
            problems += "\n  shape mismatch: " + name;
            continue;
        }
        torch::NoGradGuard no_grad;
        it->second.copy_(tensor.to(it->second.dtype()));
    }
    if (strict) {
        for (const auto& [name, tensor] : own) {
            if (!state.count(name)) problems += "\n  missing tensor: " + name;
        }
    }
    if (!problems.empty()) throw DataError("load_state_dict:" + problems);
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        out << text;
        if (!out) throw IoError("short write on " + path.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot finalize " + path.string() + ": " + ec.message());
}

}  // namespace synthaug::store
