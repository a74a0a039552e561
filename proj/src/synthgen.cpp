#include "physvid/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace physvid {

using nlohmann::json;

Scenario scenario_from_json(const json& j) {
    Scenario s;
    try {
        s.family = family_from_string(j.at("family").get<std::string>());
        if (j.contains("width")) s.width = j.at("width").get<int>();
        if (j.contains("height")) s.height = j.at("height").get<int>();
        if (j.contains("fps")) s.fps = j.at("fps").get<double>();
        if (j.contains("frames")) s.frames = j.at("frames").get<int>();
        if (j.contains("seed")) s.seed = j.at("seed").get<uint64_t>();
        if (j.contains("mask_only")) s.mask_only = j.at("mask_only").get<bool>();
        if (j.contains("substeps")) s.substeps = j.at("substeps").get<int>();
        if (j.contains("background")) {
            std::string k = j.at("background").get<std::string>();
            if (k == "checker") s.background = BackgroundKind::Checker;
            else if (k == "noise") s.background = BackgroundKind::Noise;
            else if (k == "flat") s.background = BackgroundKind::Flat;
            else throw ConfigError("unknown background kind '" + k + "'");
        }
        if (j.contains("noise_cells")) s.noise_cells = j.at("noise_cells").get<double>();
        if (j.contains("sprite")) {
            const json& sp = j.at("sprite");
            if (sp.contains("rod_length")) s.sprite.rod_length = sp.at("rod_length").get<double>();
            if (sp.contains("rod_width")) s.sprite.rod_width = sp.at("rod_width").get<double>();
            if (sp.contains("bob_radius")) s.sprite.bob_radius = sp.at("bob_radius").get<double>();
            if (sp.contains("blob_radius")) s.sprite.blob_radius = sp.at("blob_radius").get<double>();
            if (sp.contains("block_w")) s.sprite.block_w = sp.at("block_w").get<double>();
            if (sp.contains("block_h")) s.sprite.block_h = sp.at("block_h").get<double>();
        }
        s.params = j.at("params").get<std::map<std::string, double>>();
        s.z0 = j.at("z0").get<std::vector<double>>();
        if (j.contains("pivot")) s.pivot = j.at("pivot").get<std::vector<double>>();
        if (j.contains("track_origin"))
            s.track_origin = j.at("track_origin").get<std::vector<double>>();
        if (j.contains("track_angle")) s.track_angle = j.at("track_angle").get<double>();
        if (j.contains("scale")) s.scale = j.at("scale").get<double>();
        if (j.contains("homography")) s.homography = j.at("homography").get<std::array<double, 9>>();
        if (j.contains("train_indices")) s.train_indices = j.at("train_indices").get<std::vector<int>>();
        if (j.contains("test_indices")) s.test_indices = j.at("test_indices").get<std::vector<int>>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad scenario: ") + e.what());
    }
    if (s.width <= 0 || s.height <= 0 || s.frames <= 0 || !(s.fps > 0))
        throw ConfigError("scenario needs positive width/height/frames/fps");
    if (static_cast<int>(s.z0.size()) != state_dim(s.family))
        throw ConfigError("scenario z0 has wrong dimension for family " +
                          family_to_string(s.family));
    for (int idx : s.train_indices)
        if (idx < 0 || idx >= s.frames) throw ConfigError("train index out of range");
    for (int idx : s.test_indices) {
        if (idx < 0 || idx >= s.frames) throw ConfigError("test index out of range");
        if (std::find(s.train_indices.begin(), s.train_indices.end(), idx) !=
            s.train_indices.end())
            throw ConfigError("train and test indices overlap at " + std::to_string(idx));
    }
    if (s.homography[8] != 1.0) throw ConfigError("scenario homography must have h33 = 1");
    return s;
}

json scenario_to_json(const Scenario& s) {
    json j;
    j["family"] = family_to_string(s.family);
    j["width"] = s.width;
    j["height"] = s.height;
    j["fps"] = s.fps;
    j["frames"] = s.frames;
    j["seed"] = s.seed;
    j["mask_only"] = s.mask_only;
    j["substeps"] = s.substeps;
    j["background"] = s.background == BackgroundKind::Checker
                          ? "checker"
                          : (s.background == BackgroundKind::Noise ? "noise" : "flat");
    j["noise_cells"] = s.noise_cells;
    j["sprite"] = {{"rod_length", s.sprite.rod_length}, {"rod_width", s.sprite.rod_width},
                   {"bob_radius", s.sprite.bob_radius}, {"blob_radius", s.sprite.blob_radius},
                   {"block_w", s.sprite.block_w},       {"block_h", s.sprite.block_h}};
    j["params"] = s.params;
    j["z0"] = s.z0;
    if (!s.pivot.empty()) j["pivot"] = s.pivot;
    if (!s.track_origin.empty()) j["track_origin"] = s.track_origin;
    j["track_angle"] = s.track_angle;
    j["scale"] = s.scale;
    j["homography"] = s.homography;
    j["train_indices"] = s.train_indices;
    j["test_indices"] = s.test_indices;
    return j;
}

namespace {

constexpr double kPi = 3.14159265358979323846;

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

// Seeded value-noise on a lattice, 2 octaves.
struct ValueNoise {
    std::vector<double> lattice;
    int n = 0;

    ValueNoise(int cells, Rng& rng) : n(cells) {
        lattice.resize(static_cast<size_t>(n) * n);
        for (auto& v : lattice) v = rng.uniform();
    }
    double at(double u, double v) const {  // u,v in [0,1)
        double x = u * n, y = v * n;
        int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
        double fx = smooth(x - x0), fy = smooth(y - y0);
        auto L = [&](int xi, int yi) {
            xi = ((xi % n) + n) % n;
            yi = ((yi % n) + n) % n;
            return lattice[static_cast<size_t>(yi) * n + xi];
        };
        double a = L(x0, y0) * (1 - fx) + L(x0 + 1, y0) * fx;
        double b = L(x0, y0 + 1) * (1 - fx) + L(x0 + 1, y0 + 1) * fx;
        return a * (1 - fy) + b * fy;
    }
};

struct Palette {
    double c0[3], c1[3];
};

Palette sample_palette(Rng& rng) {
    Palette p;
    for (int c = 0; c < 3; ++c) p.c0[c] = rng.uniform(0.05, 0.5);
    for (int c = 0; c < 3; ++c) p.c1[c] = rng.uniform(0.5, 0.95);
    return p;
}

}  // namespace

ImageRGB build_background(const Scenario& sc, Rng& rng) {
    ImageRGB bg(sc.width, sc.height);
    Palette pal = sample_palette(rng);
    PixelGrid grid(sc.width, sc.height);
    switch (sc.background) {
        case BackgroundKind::Flat: {
            for (int y = 0; y < sc.height; ++y)
                for (int x = 0; x < sc.width; ++x)
                    for (int c = 0; c < 3; ++c) bg.at(y, x, c) = pal.c0[c];
            break;
        }
        case BackgroundKind::Checker: {
            int cells = std::max(2, static_cast<int>(sc.noise_cells));
            for (int y = 0; y < sc.height; ++y)
                for (int x = 0; x < sc.width; ++x) {
                    int cx = x * cells / sc.width, cy = y * cells / sc.height;
                    const double* col = ((cx + cy) % 2 == 0) ? pal.c0 : pal.c1;
                    for (int c = 0; c < 3; ++c) bg.at(y, x, c) = col[c];
                }
            break;
        }
        case BackgroundKind::Noise: {
            ValueNoise n1(std::max(2, static_cast<int>(sc.noise_cells)), rng);
            ValueNoise n2(std::max(2, static_cast<int>(sc.noise_cells) * 2), rng);
            for (int y = 0; y < sc.height; ++y)
                for (int x = 0; x < sc.width; ++x) {
                    double u = (x + 0.5) / sc.width, v = (y + 0.5) / sc.height;
                    double t = 0.7 * n1.at(u, v) + 0.3 * n2.at(u, v);
                    for (int c = 0; c < 3; ++c)
                        bg.at(y, x, c) = pal.c0[c] * (1 - t) + pal.c1[c] * t;
                }
            break;
        }
    }
    return bg;
}

void Sprite::sample(double lx, double ly, double rgb[3], double& a) const {
    double du = (x1 - x0) / texture.width;
    double dv = (y1 - y0) / texture.height;
    double u = (lx - x0) / du - 0.5;
    double v = (ly - y0) / dv - 0.5;
    int iu = static_cast<int>(std::floor(u)), iv = static_cast<int>(std::floor(v));
    double fu = u - iu, fv = v - iv;
    auto tap = [&](int x, int y, int c) -> double {
        if (x < 0 || y < 0 || x >= texture.width || y >= texture.height) return 0.0;
        return c < 0 ? alpha.at(y, x) : texture.at(y, x, c);
    };
    auto lerp2 = [&](int c) {
        double t00 = tap(iu, iv, c), t10 = tap(iu + 1, iv, c);
        double t01 = tap(iu, iv + 1, c), t11 = tap(iu + 1, iv + 1, c);
        return (t00 * (1 - fu) + t10 * fu) * (1 - fv) + (t01 * (1 - fu) + t11 * fu) * fv;
    };
    a = lerp2(-1);
    for (int c = 0; c < 3; ++c) rgb[c] = lerp2(c);
}

namespace {

// Analytic silhouettes in local coordinates.
struct Silhouette {
    Family family;
    SpriteSpec sp;
    int object_index;

    bool inside(double x, double y) const {
        switch (family) {
            case Family::Pendulum: {
                bool rod = std::abs(x) <= sp.rod_width / 2 && y >= 0.0 && y <= sp.rod_length;
                double dx = x, dy = y - sp.rod_length;
                bool bob = sp.bob_radius > 0 && dx * dx + dy * dy <= sp.bob_radius * sp.bob_radius;
                return rod || bob;
            }
            case Family::Spring: {
                // digit-like blob: main disk with two offset lobes
                double r = sp.blob_radius;
                double s1 = object_index == 0 ? 1.0 : -1.0;
                if (x * x + y * y <= r * r) return true;
                double ax = x - s1 * 0.55 * r, ay = y - 0.45 * r;
                if (ax * ax + ay * ay <= 0.55 * r * 0.55 * r) return true;
                double bx = x + s1 * 0.45 * r, by = y + 0.55 * r;
                return bx * bx + by * by <= 0.5 * r * 0.5 * r;
            }
            case Family::Block:
                return std::abs(x) <= sp.block_w / 2 && std::abs(y) <= sp.block_h / 2;
            case Family::Ball: {
                double r = sp.blob_radius;
                return x * x + y * y <= r * r;
            }
        }
        return false;
    }
};

}  // namespace

Sprite build_sprite(const Scenario& sc, int object_index, Rng& rng) {
    Silhouette sil{sc.family, sc.sprite, object_index};

    // local bounding box with a small margin
    double x0, y0, x1, y1;
    switch (sc.family) {
        case Family::Pendulum: {
            double r = std::max(sc.sprite.bob_radius, sc.sprite.rod_width / 2);
            x0 = -r - 0.05;
            x1 = r + 0.05;
            y0 = -0.05;
            y1 = sc.sprite.rod_length + sc.sprite.bob_radius + 0.05;
            break;
        }
        case Family::Spring:
        case Family::Ball: {
            double r = sc.sprite.blob_radius * 1.7 + 0.05;
            x0 = -r; x1 = r; y0 = -r; y1 = r;
            break;
        }
        case Family::Block: {
            x0 = -sc.sprite.block_w / 2 - 0.05;
            x1 = sc.sprite.block_w / 2 + 0.05;
            y0 = -sc.sprite.block_h / 2 - 0.05;
            y1 = sc.sprite.block_h / 2 + 0.05;
            break;
        }
    }

    // texel pitch = half the output pixel pitch
    double pitch = 0.5 * 2.0 / std::max(sc.width, sc.height);
    int w = std::max(4, static_cast<int>(std::ceil((x1 - x0) / pitch)));
    int h = std::max(4, static_cast<int>(std::ceil((y1 - y0) / pitch)));

    Sprite sprite;
    sprite.x0 = x0;
    sprite.y0 = y0;
    sprite.x1 = x1;
    sprite.y1 = y1;
    sprite.texture = ImageRGB(w, h);
    sprite.alpha = ImageGray(w, h);

    Palette pal = sample_palette(rng);
    ValueNoise tex(5, rng);

    double du = (x1 - x0) / w, dv = (y1 - y0) / h;
    for (int ty = 0; ty < h; ++ty)
        for (int tx = 0; tx < w; ++tx) {
            // 4x4 supersampled coverage
            int hit = 0;
            for (int sy = 0; sy < 4; ++sy)
                for (int sx = 0; sx < 4; ++sx) {
                    double lx = x0 + (tx + (sx + 0.5) / 4.0) * du;
                    double ly = y0 + (ty + (sy + 0.5) / 4.0) * dv;
                    hit += sil.inside(lx, ly);
                }
            double a = hit / 16.0;
            sprite.alpha.at(ty, tx) = a;
            double u = static_cast<double>(tx) / w, v = static_cast<double>(ty) / h;
            double t = tex.at(u, v);
            for (int c = 0; c < 3; ++c)
                sprite.texture.at(ty, tx, c) = pal.c0[c] * (1 - t) + pal.c1[c] * t;
        }
    return sprite;
}

SpriteRaster rasterize_sprite(const Sprite& sprite, const std::vector<double>& local_xy,
                              const PixelGrid& grid) {
    if (static_cast<int64_t>(local_xy.size()) != grid.count() * 2)
        throw ShapeError("rasterize_sprite: local coordinate count mismatch");
    SpriteRaster out;
    out.rgb = ImageRGB(grid.width, grid.height);
    out.alpha = ImageGray(grid.width, grid.height);
    out.mask = ImageGray(grid.width, grid.height);
    for (int64_t i = 0; i < grid.count(); ++i) {
        double rgb[3];
        double a;
        sprite.sample(local_xy[static_cast<size_t>(2 * i)], local_xy[static_cast<size_t>(2 * i + 1)], rgb, a);
        out.alpha.data[static_cast<size_t>(i)] = a;
        out.mask.data[static_cast<size_t>(i)] = a >= 0.5 ? 1.0 : 0.0;
        for (int c = 0; c < 3; ++c) out.rgb.data[static_cast<size_t>(i) * 3 + c] = rgb[c];
    }
    return out;
}

void generate(const Scenario& sc, const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;

    {  // homography must stay invertible on the image domain
        const auto& m = sc.homography;
        double det = m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
                     m[2] * (m[3] * m[7] - m[4] * m[6]);
        if (std::abs(det) < 1e-9) throw ConfigError("scenario homography is singular");
    }
    if (sc.family == Family::Pendulum && sc.pivot.size() != 2)
        throw ConfigError("pendulum scenario needs a pivot");
    if (sc.family == Family::Block && sc.track_origin.size() != 2)
        throw ConfigError("block scenario needs a track origin");

    Rng rng(sc.seed);
    PixelGrid grid(sc.width, sc.height);
    int n_objects = sc.family == Family::Spring ? 2 : 1;

    ImageRGB bg = build_background(sc, rng);
    std::vector<Sprite> sprites;
    for (int k = 0; k < n_objects; ++k) sprites.push_back(build_sprite(sc, k, rng));

    // truth trajectory (no tape; positive-space constants)
    std::vector<double> times(static_cast<size_t>(sc.frames));
    for (int i = 0; i < sc.frames; ++i) times[static_cast<size_t>(i)] = i / sc.fps;
    RhsParams rp;
    auto param = [&](const char* name) {
        auto it = sc.params.find(name);
        if (it == sc.params.end())
            throw ConfigError(std::string("scenario params missing '") + name + "'");
        return Tensor::scalar(it->second);
    };
    switch (sc.family) {
        case Family::Pendulum:
            rp.length = param("length");
            rp.damping = param("damping");
            break;
        case Family::Spring:
            rp.k = param("k");
            rp.l_rest = param("l_rest");
            break;
        case Family::Block:
            rp.alpha = param("alpha");
            rp.mu = param("mu");
            break;
        case Family::Ball:
            break;
    }
    Tensor z0 = Tensor::constant({state_dim(sc.family)}, sc.z0);
    Trajectory traj = integrate(sc.family, z0, rp, times, sc.substeps);

    Homography H = Homography::from_matrix(sc.homography);
    bool identity_h = true;
    for (int i = 0; i < 9; ++i)
        identity_h = identity_h &&
                     sc.homography[static_cast<size_t>(i)] == (i % 4 == 0 ? 1.0 : 0.0);

    fs::create_directories(out_dir / "frames");
    for (int k = 0; k < n_objects; ++k)
        fs::create_directories(out_dir / "masks" / ("obj" + std::to_string(k)));

    Tensor pts = grid.coords();
    for (int f = 0; f < sc.frames; ++f) {
        const Tensor& state = traj.at(static_cast<size_t>(f));
        Tensor xh = identity_h ? pts : apply_homography(H, pts);

        std::vector<SpriteRaster> rasters;
        for (int k = 0; k < n_objects; ++k) {
            Tensor local;
            switch (sc.family) {
                case Family::Pendulum:
                    local = pendulum_local(xh, slice(state, 0, 1),
                                           Tensor::constant({2}, {sc.pivot[0], sc.pivot[1]}));
                    break;
                case Family::Spring:
                    local = spring_local(xh, slice(state, 2 * k, 2), Tensor::zeros({2}));
                    break;
                case Family::Block:
                    local = block_local(
                        xh, slice(state, 0, 1),
                        Tensor::constant({2}, {sc.track_origin[0], sc.track_origin[1]}),
                        Tensor::scalar(sc.track_angle), Tensor::scalar(sc.scale));
                    break;
                case Family::Ball:
                    local = ball_local(xh, slice(state, 0, 2), Tensor::scalar(sc.scale));
                    break;
            }
            std::vector<double> lv(local.values().begin(), local.values().end());
            rasters.push_back(rasterize_sprite(sprites[static_cast<size_t>(k)], lv, grid));
        }

        if (!sc.mask_only) {
            ImageRGB frame = bg;
            for (int64_t i = 0; i < grid.count(); ++i) {
                // same layering rule as the renderer: arg-max alpha, ties to
                // the lowest object index
                int win = 0;
                double a = rasters[0].alpha.data[static_cast<size_t>(i)];
                for (int k = 1; k < n_objects; ++k)
                    if (rasters[static_cast<size_t>(k)].alpha.data[static_cast<size_t>(i)] > a) {
                        a = rasters[static_cast<size_t>(k)].alpha.data[static_cast<size_t>(i)];
                        win = k;
                    }
                for (int c = 0; c < 3; ++c) {
                    double tex = rasters[static_cast<size_t>(win)].rgb.data[static_cast<size_t>(i) * 3 + c];
                    frame.data[static_cast<size_t>(i) * 3 + c] =
                        (1.0 - a) * frame.data[static_cast<size_t>(i) * 3 + c] + a * tex;
                }
            }
            write_ppm(out_dir / "frames" / (frame_name(f) + ".ppm"), frame);
        }
        for (int k = 0; k < n_objects; ++k)
            write_pgm(out_dir / "masks" / ("obj" + std::to_string(k)) / (frame_name(f) + ".pgm"),
                      rasters[static_cast<size_t>(k)].mask);
    }

    {  // times.txt
        std::string body;
        char buf[64];
        for (double t : times) {
            std::snprintf(buf, sizeof(buf), "%.17g\n", t);
            body += buf;
        }
        auto tmp = out_dir / "times.txt.tmp";
        {
            std::ofstream os(tmp, std::ios::trunc);
            if (!os) throw DataError("cannot write times.txt");
            os << body;
        }
        fs::rename(tmp, out_dir / "times.txt");
    }

    GroundTruth truth;
    truth.family = sc.family;
    truth.params = sc.params;
    if (sc.family == Family::Block) {
        truth.params["scale"] = sc.scale;
        truth.params["track_angle"] = sc.track_angle;
    }
    if (sc.family == Family::Ball) truth.params["scale"] = sc.scale;
    truth.z0 = sc.z0;
    truth.pivot = sc.pivot;
    truth.homography = sc.homography;
    truth.fps = sc.fps;
    truth.train_indices = sc.train_indices;
    truth.test_indices = sc.test_indices;
    write_ground_truth(out_dir / "truth.json", truth);
}

}  // namespace physvid
