#include "physvid/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "physvid/renderer.hpp"

namespace physvid {

double psnr(const ImageRGB& a, const ImageRGB& b) {
    if (a.width != b.width || a.height != b.height)
        throw ShapeError("psnr: image shapes differ");
    double se = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        double d = a.data[i] - b.data[i];
        se += d * d;
    }
    double mse = se / static_cast<double>(a.data.size());
    if (mse < 1e-12) return kPsnrCap;
    return 10.0 * std::log10(1.0 / mse);
}

double iou(const ImageGray& a, const ImageGray& b) {
    if (a.width != b.width || a.height != b.height)
        throw ShapeError("iou: mask shapes differ");
    int64_t inter = 0, uni = 0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        bool av = a.data[i] >= 0.5, bv = b.data[i] >= 0.5;
        inter += av && bv;
        uni += av || bv;
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double homography_deviation(const Homography& h) {
    auto m = h.matrix();
    static constexpr double kId[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    double s = 0.0;
    for (int i = 0; i < 9; ++i) {
        double d = m[static_cast<size_t>(i)] - kId[i];
        s += d * d;
    }
    return std::sqrt(s);
}

std::vector<ParamError> param_report(const SceneModel& scene, const GroundTruth& truth,
                                     const PixelGrid& grid) {
    if (scene.cfg.family != truth.family)
        throw DataError("param_report: scene family " + family_to_string(scene.cfg.family) +
                        " does not match truth family " + family_to_string(truth.family));
    std::vector<ParamError> out;
    auto push = [&](const std::string& name, double est, double tru) {
        ParamError e;
        e.name = name;
        e.estimated = est;
        e.truth = tru;
        if (tru != 0.0) {
            e.error = std::abs(est - tru) / std::abs(tru);
            e.relative = true;
        } else {
            e.error = std::abs(est - tru);
            e.relative = false;
        }
        out.push_back(e);
    };

    for (const auto& [name, tru] : truth.params) {
        double est;
        if (name == "length") est = softplus_value(scene.length_raw.value());
        else if (name == "damping") est = softplus_value(scene.damping_raw.value());
        else if (name == "k") est = softplus_value(scene.k_raw.value());
        else if (name == "l_rest") est = softplus_value(scene.l_rest_raw.value());
        else if (name == "alpha") est = scene.alpha.value();
        else if (name == "mu") est = softplus_value(scene.mu_raw.value());
        else if (name == "scale") est = softplus_value(scene.scale_raw.value());
        else continue;  // truth entries the model does not expose
        push(name, est, tru);
    }
    for (size_t i = 0; i < truth.z0.size() && i < static_cast<size_t>(scene.z0.size()); ++i)
        push("z0." + std::to_string(i), scene.z0.at(static_cast<int64_t>(i)), truth.z0[i]);

    if (!truth.pivot.empty() && scene.cfg.family == Family::Pendulum) {
        double dx = scene.pivot.at(0) - truth.pivot[0];
        double dy = scene.pivot.at(1) - truth.pivot[1];
        double diag = std::hypot(grid.width * grid.scale, grid.height * grid.scale);
        ParamError e;
        e.name = "pivot";
        e.estimated = std::hypot(scene.pivot.at(0), scene.pivot.at(1));
        e.truth = std::hypot(truth.pivot[0], truth.pivot[1]);
        e.error = std::hypot(dx, dy) / diag;
        e.relative = true;
        out.push_back(e);
    }
    return out;
}

nlohmann::json MetricsReport::to_json() const {
    nlohmann::json j;
    j["frames"] = frame_indices;
    j["psnr"] = psnr_per_frame;
    j["psnr_mean"] = psnr_mean;
    j["iou"] = iou_per_frame;
    j["iou_mean"] = iou_mean;
    nlohmann::json pe = nlohmann::json::array();
    for (const auto& e : param_errors)
        pe.push_back({{"name", e.name},
                      {"estimated", e.estimated},
                      {"truth", e.truth},
                      {"error", e.error},
                      {"relative", e.relative}});
    j["param_errors"] = pe;
    if (delta_h) j["delta_h"] = *delta_h;
    j["wall_seconds"] = wall_seconds;
    j["config_hash"] = config_hash;
    return j;
}

std::string MetricsReport::summary() const {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    if (!psnr_per_frame.empty()) os << "psnr_mean_db " << psnr_mean << "\n";
    if (!iou_per_frame.empty()) os << "iou_mean " << iou_mean << "\n";
    for (const auto& e : param_errors) {
        os << "param " << e.name << " est " << e.estimated << " true " << e.truth
           << (e.relative ? " rel_err " : " abs_err ") << e.error << "\n";
    }
    if (delta_h) os << "delta_h " << *delta_h << "\n";
    os << "wall_seconds " << wall_seconds << "\n";
    os << "config_hash " << config_hash << "\n";
    return os.str();
}

MetricsReport evaluate(const SceneModel& scene, const FrameDataset& data,
                       const std::vector<int>& indices, int substeps,
                       const std::string& config_hash_hex) {
    auto t_start = std::chrono::steady_clock::now();
    MetricsReport rep;
    rep.config_hash = config_hash_hex;
    rep.frame_indices = indices;

    std::vector<int> train = data.train_indices();
    double t0 = data.times[static_cast<size_t>(*std::min_element(train.begin(), train.end()))];

    std::vector<double> times;
    for (int idx : indices) {
        if (idx < 0 || idx >= data.frame_count())
            throw DataError("evaluate: frame index out of range");
        times.push_back(data.times[static_cast<size_t>(idx)]);
    }
    std::vector<RenderedFrame> rendered = render_sequence(scene, t0, times, substeps, data.grid);

    for (size_t i = 0; i < indices.size(); ++i) {
        int idx = indices[i];
        if (data.has_frames() && scene.bg)
            rep.psnr_per_frame.push_back(
                psnr(rendered[i].rgb, data.frames[static_cast<size_t>(idx)]));
        if (!data.masks.empty()) {
            double acc = 0.0;
            int n = 0;
            for (size_t k = 0; k < data.masks.size() && k < rendered[i].occupancy.size(); ++k) {
                acc += iou(rendered[i].occupancy[k], data.masks[k][static_cast<size_t>(idx)]);
                ++n;
            }
            if (n > 0) rep.iou_per_frame.push_back(acc / n);
        }
    }
    auto mean = [](const std::vector<double>& v) {
        if (v.empty()) return 0.0;
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    rep.psnr_mean = mean(rep.psnr_per_frame);
    rep.iou_mean = mean(rep.iou_per_frame);

    if (data.truth) rep.param_errors = param_report(scene, *data.truth, data.grid);
    if (scene.cfg.use_homography) rep.delta_h = homography_deviation(scene.hom);

    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return rep;
}

}  // namespace physvid
