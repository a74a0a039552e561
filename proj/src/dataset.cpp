#include "physvid/dataset.hpp"

#include <fstream>
#include <json.hpp>

namespace physvid {

using nlohmann::json;

std::string frame_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d", index);
    return buf;
}

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& t) {
    json j;
    j["family"] = family_to_string(t.family);
    j["params"] = t.params;
    j["z0"] = t.z0;
    if (!t.pivot.empty()) j["pivot"] = t.pivot;
    j["homography"] = t.homography;
    j["fps"] = t.fps;
    j["train_indices"] = t.train_indices;
    j["test_indices"] = t.test_indices;
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::trunc);
        if (!os) throw DataError("cannot write " + path.string());
        os << j.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, path);
}

GroundTruth read_ground_truth(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open " + path.string());
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    GroundTruth t;
    try {
        t.family = family_from_string(j.at("family").get<std::string>());
        t.params = j.at("params").get<std::map<std::string, double>>();
        t.z0 = j.at("z0").get<std::vector<double>>();
        if (j.contains("pivot")) t.pivot = j.at("pivot").get<std::vector<double>>();
        if (j.contains("homography")) t.homography = j.at("homography").get<std::array<double, 9>>();
        t.fps = j.at("fps").get<double>();
        t.train_indices = j.at("train_indices").get<std::vector<int>>();
        t.test_indices = j.at("test_indices").get<std::vector<int>>();
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return t;
}

FrameDataset FrameDataset::load(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    FrameDataset ds;
    ds.dir = dir;
    if (!fs::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());

    // times
    {
        std::ifstream is(dir / "times.txt");
        if (!is) throw DataError("missing " + (dir / "times.txt").string());
        double t;
        while (is >> t) ds.times.push_back(t);
        if (ds.times.empty()) throw DataError("times.txt is empty");
        for (size_t i = 1; i < ds.times.size(); ++i)
            if (!(ds.times[i] > ds.times[i - 1]))
                throw DataError("times.txt must be strictly increasing");
    }
    int n = static_cast<int>(ds.times.size());

    // frames (optional)
    if (fs::is_directory(dir / "frames")) {
        for (int i = 0; i < n; ++i) {
            auto p = dir / "frames" / (frame_name(i) + ".ppm");
            if (!fs::exists(p)) throw DataError("missing frame " + p.string());
            ds.frames.push_back(read_ppm(p));
        }
    }

    // masks (optional, per object)
    if (fs::is_directory(dir / "masks")) {
        for (int k = 0;; ++k) {
            auto objdir = dir / "masks" / ("obj" + std::to_string(k));
            if (!fs::is_directory(objdir)) break;
            std::vector<ImageGray> seq;
            for (int i = 0; i < n; ++i) {
                auto p = objdir / (frame_name(i) + ".pgm");
                if (!fs::exists(p)) throw DataError("missing mask " + p.string());
                ImageGray m = read_pgm(p);
                for (auto& v : m.data) v = v >= 0.5 ? 1.0 : 0.0;
                seq.push_back(std::move(m));
            }
            ds.masks.push_back(std::move(seq));
        }
    }

    if (ds.frames.empty() && ds.masks.empty())
        throw DataError(dir.string() + " has neither frames/ nor masks/");

    int w = ds.frames.empty() ? ds.masks[0][0].width : ds.frames[0].width;
    int h = ds.frames.empty() ? ds.masks[0][0].height : ds.frames[0].height;
    for (const auto& f : ds.frames)
        if (f.width != w || f.height != h) throw DataError("frame size mismatch");
    for (const auto& seq : ds.masks)
        for (const auto& m : seq)
            if (m.width != w || m.height != h) throw DataError("mask size mismatch");
    ds.grid = PixelGrid(w, h);

    if (fs::exists(dir / "truth.json")) ds.truth = read_ground_truth(dir / "truth.json");
    if (ds.truth) {
        for (int idx : ds.truth->train_indices)
            if (idx < 0 || idx >= n) throw DataError("train index out of range");
        for (int idx : ds.truth->test_indices)
            if (idx < 0 || idx >= n) throw DataError("test index out of range");
    }
    return ds;
}

std::vector<int> FrameDataset::train_indices() const {
    if (truth && !truth->train_indices.empty()) return truth->train_indices;
    std::vector<int> all(times.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    return all;
}

std::vector<int> FrameDataset::test_indices() const {
    if (truth) return truth->test_indices;
    return {};
}

}  // namespace physvid
