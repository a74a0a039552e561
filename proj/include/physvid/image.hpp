#pragma once

// P6/P5 netpbm images, 8-bit, with values held as real64 in [0,1].

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "physvid/common.hpp"

namespace physvid {

struct ImageRGB {
    int width = 0, height = 0;
    std::vector<double> data;  // height*width*3, row-major

    ImageRGB() = default;
    ImageRGB(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<size_t>(w) * h * 3, fill) {}
    double& at(int y, int x, int c) { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
    double at(int y, int x, int c) const { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
};

struct ImageGray {
    int width = 0, height = 0;
    std::vector<double> data;  // height*width

    ImageGray() = default;
    ImageGray(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}
    double& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
    double at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
};

uint8_t quantize8(double v);  // round(clamp01(v)*255)

// Writers are atomic: tmp file + rename.
void write_ppm(const std::filesystem::path& path, const ImageRGB& img);
void write_pgm(const std::filesystem::path& path, const ImageGray& img);
ImageRGB read_ppm(const std::filesystem::path& path);
ImageGray read_pgm(const std::filesystem::path& path);

}  // namespace physvid
