#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "ecdl/matrix.hpp"

namespace ecdl {

struct GrayImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  // row-major

    std::uint8_t at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

inline constexpr double kPeak8Bit = 255.0;

/// Binary 8-bit PGM (P5, maxval 255).
GrayImage load_pgm(const std::filesystem::path& path);
void save_pgm(const GrayImage& img, const std::filesystem::path& path);
GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);

struct PatchMatrix {
    Matrix data;  // side^2 x M, one row-major vectorized patch per column
    std::size_t side = 0;
    std::size_t stride = 0;
    std::size_t source_width = 0;
    std::size_t source_height = 0;
};

/// floor((H - side)/stride + 1) * floor((W - side)/stride + 1)
std::size_t patch_count(std::size_t width, std::size_t height, std::size_t side, std::size_t stride);

/// Patches ordered by top-left corner in row-major scan; raw intensities, no centering.
PatchMatrix extract_patches(const GrayImage& img, std::size_t side, std::size_t stride);

/// Averages every patch copy covering a pixel, rounds half up and clamps to [0, 255].
GrayImage assemble_patches(const PatchMatrix& patches);

/// Returned by psnr() for a zero MSE; never produced by a finite ratio.
inline constexpr double kPerfectPsnr = std::numeric_limits<double>::infinity();

double psnr(double mse, double peak = kPeak8Bit);

}  // namespace ecdl
