#include "synthaug/imageio.hpp"

#include <fstream>
#include <vector>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "synthaug/common.hpp"

namespace synthaug::imageio {

torch::Tensor load_image(const std::filesystem::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw IoError("cannot read image: " + path.string());
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);

    auto t = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, 3}, torch::kUInt8);
    return t.permute({2, 0, 1}).to(torch::kFloat32).div_(255.0).contiguous();
}

void save_png(const torch::Tensor& chw, const std::filesystem::path& path) {
    if (chw.dim() != 3 || chw.size(0) != 3) {
        throw UsageError("save_png expects a 3xHxW tensor");
    }
    auto bytes = chw.detach()
                     .clamp(0.0, 1.0)
                     .mul(255.0)
                     .round()
                     .to(torch::kUInt8)
                     .permute({1, 2, 0})
                     .contiguous();
    cv::Mat rgb(static_cast<int>(chw.size(1)), static_cast<int>(chw.size(2)), CV_8UC3,
                bytes.data_ptr<std::uint8_t>());
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);

    // Fixed compression level keeps rewrites byte-identical. Encoding to a
    // buffer and renaming afterwards means an existing file is always a
    // complete image.
    std::vector<std::uint8_t> encoded;
    if (!cv::imencode(".png", bgr, encoded, {cv::IMWRITE_PNG_COMPRESSION, 6})) {
        throw IoError("cannot encode image: " + path.string());
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write image: " + path.string());
        out.write(reinterpret_cast<const char*>(encoded.data()),
                  static_cast<std::streamsize>(encoded.size()));
        if (!out) throw IoError("short write on image: " + path.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot finalize image " + path.string() + ": " + ec.message());
}

}  // namespace synthaug::imageio
