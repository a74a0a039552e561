#include "physvid/image.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace physvid {

namespace {

// Skips whitespace and '#' comments, then reads one unsigned integer.
int read_pnm_int(std::istream& in, const std::string& path) {
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
        } else if (!std::isspace(c)) {
            break;
        }
    }
    if (c == EOF) throw DataError(path + ": truncated netpbm header");
    int value = 0;
    bool any = false;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        any = true;
        c = in.get();
    }
    if (!any) throw DataError(path + ": malformed netpbm header");
    return value;
}

void write_atomic(const std::filesystem::path& path, const std::string& bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw DataError("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

uint8_t quantize8(double v) {
    double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    return static_cast<uint8_t>(std::lround(c * 255.0));
}

void write_ppm(const std::filesystem::path& path, const ImageRGB& img) {
    std::string bytes;
    char header[64];
    std::snprintf(header, sizeof(header), "P6\n%d %d\n255\n", img.width, img.height);
    bytes = header;
    bytes.reserve(bytes.size() + img.data.size());
    for (double v : img.data) bytes.push_back(static_cast<char>(quantize8(v)));
    write_atomic(path, bytes);
}

void write_pgm(const std::filesystem::path& path, const ImageGray& img) {
    std::string bytes;
    char header[64];
    std::snprintf(header, sizeof(header), "P5\n%d %d\n255\n", img.width, img.height);
    bytes = header;
    bytes.reserve(bytes.size() + img.data.size());
    for (double v : img.data) bytes.push_back(static_cast<char>(quantize8(v)));
    write_atomic(path, bytes);
}

ImageRGB read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    char m0 = static_cast<char>(in.get()), m1 = static_cast<char>(in.get());
    if (m0 != 'P' || m1 != '6') throw DataError(path.string() + ": not a P6 ppm");
    int w = read_pnm_int(in, path.string());
    int h = read_pnm_int(in, path.string());
    int maxval = read_pnm_int(in, path.string());
    if (maxval != 255) throw DataError(path.string() + ": only 8-bit ppm supported");
    if (w <= 0 || h <= 0) throw DataError(path.string() + ": bad dimensions");
    std::vector<char> raw(static_cast<size_t>(w) * h * 3);
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw DataError(path.string() + ": truncated pixel data");
    ImageRGB img(w, h);
    for (size_t i = 0; i < raw.size(); ++i)
        img.data[i] = static_cast<uint8_t>(raw[i]) / 255.0;
    return img;
}

ImageGray read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    char m0 = static_cast<char>(in.get()), m1 = static_cast<char>(in.get());
    if (m0 != 'P' || m1 != '5') throw DataError(path.string() + ": not a P5 pgm");
    int w = read_pnm_int(in, path.string());
    int h = read_pnm_int(in, path.string());
    int maxval = read_pnm_int(in, path.string());
    if (maxval != 255) throw DataError(path.string() + ": only 8-bit pgm supported");
    if (w <= 0 || h <= 0) throw DataError(path.string() + ": bad dimensions");
    std::vector<char> raw(static_cast<size_t>(w) * h);
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw DataError(path.string() + ": truncated pixel data");
    ImageGray img(w, h);
    for (size_t i = 0; i < raw.size(); ++i)
        img.data[i] = static_cast<uint8_t>(raw[i]) / 255.0;
    return img;
}

}  // namespace physvid
