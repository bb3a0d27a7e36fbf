#include "ecdl/patches.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "ecdl/error.hpp"

namespace ecdl {

namespace {

class HeaderReader {
public:
    explicit HeaderReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    // Skips whitespace and '#' comments, then reads one unsigned decimal field.
    std::size_t number(const char* field)
    {
        skip_space_and_comments();
        require(pos_ < bytes_.size() && std::isdigit(bytes_[pos_]), ErrorCode::malformed_header,
                std::string("PGM: expected ") + field);
        std::size_t value = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
            require(value <= (1u << 30), ErrorCode::malformed_header, std::string("PGM: ") + field + " too large");
            ++pos_;
        }
        return value;
    }

    // Exactly one whitespace byte separates maxval from the raster.
    std::size_t raster_offset()
    {
        require(pos_ < bytes_.size() && std::isspace(bytes_[pos_]), ErrorCode::malformed_header, "PGM: missing separator before raster");
        return pos_ + 1;
    }

private:
    void skip_space_and_comments()
    {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 2;
};

}  // namespace

GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes)
{
    require(bytes.size() >= 2 && bytes[0] == 'P', ErrorCode::malformed_header, "PGM: missing magic number");
    require(bytes[1] == '5', ErrorCode::unsupported_format,
            std::string("PGM: only binary P5 is supported, got P") + static_cast<char>(bytes[1]));

    HeaderReader header(bytes);
    GrayImage img;
    img.width = header.number("width");
    img.height = header.number("height");
    const std::size_t maxval = header.number("maxval");
    require(img.width >= 1 && img.height >= 1, ErrorCode::malformed_header, "PGM: zero image dimension");
    require(maxval == 255, ErrorCode::unsupported_maxval, "PGM: maxval " + std::to_string(maxval) + " (only 255 supported)");

    const std::size_t offset = header.raster_offset();
    const std::size_t need = img.width * img.height;
    require(bytes.size() >= offset + need, ErrorCode::truncated_data,
            "PGM: expected " + std::to_string(need) + " raster bytes, got " + std::to_string(bytes.size() - std::min(bytes.size(), offset)));
    img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                      bytes.begin() + static_cast<std::ptrdiff_t>(offset + need));
    return img;
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img)
{
    require(img.width >= 1 && img.height >= 1 && img.pixels.size() == img.width * img.height, ErrorCode::invalid_argument,
            "PGM: pixel buffer does not match dimensions");
    const std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

GrayImage load_pgm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open " + path.string());
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return decode_pgm(bytes);
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path)
{
    const auto bytes = encode_pgm(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::io, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(out), ErrorCode::io, "write failed: " + path.string());
}

std::size_t patch_count(std::size_t width, std::size_t height, std::size_t side, std::size_t stride)
{
    require(side >= 1 && stride >= 1, ErrorCode::invalid_argument, "patch side and stride must be positive");
    require(side <= width && side <= height, ErrorCode::invalid_argument,
            "patch side " + std::to_string(side) + " exceeds image " + std::to_string(width) + "x" + std::to_string(height));
    return ((height - side) / stride + 1) * ((width - side) / stride + 1);
}

PatchMatrix extract_patches(const GrayImage& img, std::size_t side, std::size_t stride)
{
    const std::size_t count = patch_count(img.width, img.height, side, stride);
    PatchMatrix out;
    out.side = side;
    out.stride = stride;
    out.source_width = img.width;
    out.source_height = img.height;
    out.data.resize(static_cast<Eigen::Index>(side * side), static_cast<Eigen::Index>(count));

    Eigen::Index col = 0;
    for (std::size_t top = 0; top + side <= img.height; top += stride) {
        for (std::size_t left = 0; left + side <= img.width; left += stride) {
            Eigen::Index row = 0;
            for (std::size_t r = 0; r < side; ++r) {
                for (std::size_t c = 0; c < side; ++c) out.data(row++, col) = img.at(top + r, left + c);
            }
            ++col;
        }
    }
    return out;
}

GrayImage assemble_patches(const PatchMatrix& patches)
{
    const std::size_t side = patches.side;
    const std::size_t stride = patches.stride;
    const std::size_t w = patches.source_width;
    const std::size_t h = patches.source_height;
    const std::size_t count = patch_count(w, h, side, stride);
    require(patches.data.rows() == static_cast<Eigen::Index>(side * side) && patches.data.cols() == static_cast<Eigen::Index>(count),
            ErrorCode::dimension_mismatch, "assemble_patches: patch matrix shape does not match its geometry");
    require(stride <= side, ErrorCode::coverage_gap, "assemble_patches: stride " + std::to_string(stride) + " leaves gaps between patches of side " + std::to_string(side));
    require((h - side) % stride == 0 && (w - side) % stride == 0, ErrorCode::coverage_gap,
            "assemble_patches: patches do not reach the bottom/right image border");

    std::vector<double> sum(w * h, 0.0);
    std::vector<std::uint32_t> copies(w * h, 0);
    Eigen::Index col = 0;
    for (std::size_t top = 0; top + side <= h; top += stride) {
        for (std::size_t left = 0; left + side <= w; left += stride) {
            Eigen::Index row = 0;
            for (std::size_t r = 0; r < side; ++r) {
                for (std::size_t c = 0; c < side; ++c) {
                    const std::size_t p = (top + r) * w + left + c;
                    sum[p] += patches.data(row++, col);
                    ++copies[p];
                }
            }
            ++col;
        }
    }

    GrayImage img{w, h, std::vector<std::uint8_t>(w * h)};
    for (std::size_t p = 0; p < w * h; ++p) {
        const double v = std::floor(sum[p] / copies[p] + 0.5);
        img.pixels[p] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
    return img;
}

double psnr(double mse, double peak)
{
    require(mse >= 0.0, ErrorCode::invalid_argument, "psnr: negative mse");
    if (mse == 0.0) return kPerfectPsnr;
    return 10.0 * std::log10(peak * peak / mse);
}

}  // namespace ecdl
