#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "physvid/init.hpp"
#include "physvid/synthgen.hpp"

using namespace physvid;
namespace fs = std::filesystem;

namespace {

Scenario small_pendulum(uint64_t seed) {
    Scenario sc;
    sc.family = Family::Pendulum;
    sc.width = 32;
    sc.height = 32;
    sc.fps = 10.0;
    sc.frames = 6;
    sc.seed = seed;
    sc.params = {{"length", 0.5}, {"damping", 0.4}};
    sc.z0 = {0.7, 0.8};
    sc.pivot = {0.0, -0.55};
    sc.train_indices = {0, 1, 2};
    sc.test_indices = {3, 4, 5};
    return sc;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

bool dirs_identical(const fs::path& a, const fs::path& b) {
    std::vector<fs::path> rel;
    for (auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file()) rel.push_back(fs::relative(e.path(), a));
    std::sort(rel.begin(), rel.end());
    for (const auto& r : rel) {
        if (!fs::exists(b / r)) return false;
        if (slurp(a / r) != slurp(b / r)) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("sprite rasterization identities") {
    Rng rng(5);
    Scenario sc = small_pendulum(5);
    PixelGrid grid(sc.width, sc.height);

    // a sprite whose texel grid matches the pixel grid exactly
    Sprite sprite;
    sprite.x0 = -1.0;
    sprite.y0 = -1.0;
    sprite.x1 = 1.0;
    sprite.y1 = 1.0;
    sprite.texture = ImageRGB(32, 32);
    sprite.alpha = ImageGray(32, 32, 1.0);
    for (size_t i = 0; i < sprite.texture.data.size(); ++i)
        sprite.texture.data[i] = rng.uniform();

    // identity transform: local coords = pixel coords
    std::vector<double> local;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            auto [nx, ny] = grid.normalized(x, y);
            local.push_back(nx);
            local.push_back(ny);
        }
    SpriteRaster r = rasterize_sprite(sprite, local, grid);
    for (size_t i = 0; i < r.rgb.data.size(); ++i)
        CHECK(std::abs(r.rgb.data[i] - sprite.texture.data[i]) <= 1.0 / 255.0);

    // integer-pixel translation moves the mask exactly
    Sprite box = sprite;
    box.alpha = ImageGray(32, 32, 0.0);
    for (int y = 10; y < 20; ++y)
        for (int x = 8; x < 16; ++x) box.alpha.at(y, x) = 1.0;
    SpriteRaster r0 = rasterize_sprite(box, local, grid);
    std::vector<double> shifted;
    int dx = 3, dy = 2;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            auto [nx, ny] = grid.normalized(x - dx, y - dy);
            shifted.push_back(nx);
            shifted.push_back(ny);
        }
    SpriteRaster r1 = rasterize_sprite(box, shifted, grid);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            bool inside = y - dy >= 0 && x - dx >= 0;
            double expect = inside ? r0.mask.at(y - dy, x - dx) : 0.0;
            CHECK(r1.mask.at(y, x) == expect);
        }
}

TEST_CASE("rotation by pi twice returns the mask within a boundary band") {
    Scenario sc = small_pendulum(7);
    Rng rng(7);
    Sprite sprite = build_sprite(sc, 0, rng);
    PixelGrid grid(sc.width, sc.height);

    auto rotate_local = [&](double angle, const Tensor& pts) {
        return rotate_by_minus(pts, Tensor::scalar(angle));
    };
    Tensor pts = grid.coords();
    std::vector<double> ident(pts.values().begin(), pts.values().end());
    Tensor once = rotate_local(3.14159265358979323846, pts);
    Tensor twice = rotate_local(3.14159265358979323846, once);
    std::vector<double> tw(twice.values().begin(), twice.values().end());

    SpriteRaster a = rasterize_sprite(sprite, ident, grid);
    SpriteRaster b = rasterize_sprite(sprite, tw, grid);

    // disagreements only within one pixel of the silhouette boundary
    for (int y = 1; y + 1 < grid.height; ++y)
        for (int x = 1; x + 1 < grid.width; ++x) {
            if (a.mask.at(y, x) == b.mask.at(y, x)) continue;
            bool near_edge = false;
            for (int oy = -1; oy <= 1 && !near_edge; ++oy)
                for (int ox = -1; ox <= 1 && !near_edge; ++ox)
                    if (a.mask.at(y + oy, x + ox) != a.mask.at(y, x)) near_edge = true;
            CHECK(near_edge);
        }
}

TEST_CASE("generation fixed point and determinism") {
    fs::path base = fs::temp_directory_path() / "physvid_test_synth";
    fs::remove_all(base);

    // equilibrium start: every frame identical
    Scenario still = small_pendulum(11);
    still.z0 = {0.0, 0.0};
    generate(still, base / "still");
    std::string f0 = slurp(base / "still" / "frames" / "0000.ppm");
    for (int i = 1; i < still.frames; ++i)
        CHECK(slurp(base / "still" / "frames" / (frame_name(i) + ".ppm")) == f0);

    // same seed twice -> bit-identical datasets
    Scenario sc = small_pendulum(23);
    generate(sc, base / "a");
    generate(sc, base / "b");
    CHECK(dirs_identical(base / "a", base / "b"));

    // truth round-trips exactly
    GroundTruth t = read_ground_truth(base / "a" / "truth.json");
    CHECK(t.family == Family::Pendulum);
    CHECK(t.params.at("length") == 0.5);
    CHECK(t.params.at("damping") == 0.4);
    CHECK(t.z0 == std::vector<double>{0.7, 0.8});
    CHECK(t.pivot == std::vector<double>{0.0, -0.55});
    CHECK(t.fps == 10.0);
    CHECK(t.train_indices == std::vector<int>{0, 1, 2});

    // dataset loads cleanly
    FrameDataset ds = FrameDataset::load(base / "a");
    CHECK(ds.frame_count() == 6);
    CHECK(ds.has_frames());
    CHECK(ds.object_count() == 1);

    fs::remove_all(base);
}

TEST_CASE("mask area is stable under rotation") {
    Scenario sc = small_pendulum(31);
    sc.width = 64;
    sc.height = 64;
    sc.frames = 8;
    sc.params["damping"] = 0.0;
    sc.z0 = {0.9, 0.0};
    sc.train_indices = {0, 1, 2, 3};
    sc.test_indices = {4, 5, 6, 7};
    fs::path dir = fs::temp_directory_path() / "physvid_test_area";
    fs::remove_all(dir);
    generate(sc, dir);
    FrameDataset ds = FrameDataset::load(dir);
    std::vector<double> areas;
    for (int f = 0; f < ds.frame_count(); ++f) {
        double a = 0;
        for (double v : ds.masks[0][static_cast<size_t>(f)].data) a += v;
        areas.push_back(a);
    }
    double mean = 0;
    for (double a : areas) mean += a;
    mean /= areas.size();
    for (double a : areas) CHECK(std::abs(a - mean) / mean < 0.03);
    fs::remove_all(dir);
}

TEST_CASE("pendulum frame 0 axis agrees with the PCA initializer") {
    Scenario sc = small_pendulum(41);
    sc.width = 64;
    sc.height = 64;
    sc.z0 = {0.0, 1.2};  // hanging vertical at t = 0
    fs::path dir = fs::temp_directory_path() / "physvid_test_axis";
    fs::remove_all(dir);
    generate(sc, dir);
    FrameDataset ds = FrameDataset::load(dir);
    double angle = estimate_angle_pca(ds.masks[0][0]);
    CHECK(std::abs(angle) < 2.0 * 3.14159265358979323846 / 180.0);
    fs::remove_all(dir);
}

TEST_CASE("scenario json round trip") {
    Scenario sc = small_pendulum(3);
    nlohmann::json j = scenario_to_json(sc);
    Scenario back = scenario_from_json(j);
    CHECK(back.family == sc.family);
    CHECK(back.params == sc.params);
    CHECK(back.z0 == sc.z0);
    CHECK(back.train_indices == sc.train_indices);

    nlohmann::json bad = j;
    bad["test_indices"] = {0};  // overlaps train
    CHECK_THROWS_AS(scenario_from_json(bad), ConfigError);
}
