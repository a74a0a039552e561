#include "physvid/training.hpp"

#include <algorithm>
#include <cmath>

namespace physvid {

double lr_schedule(double epoch, double r0, double beta, int n_decay) {
    return r0 * std::pow(beta, epoch / static_cast<double>(n_decay));
}

int frame_curriculum(int64_t step, int n_fr0, int n_incrT, int total_frames) {
    int64_t active = n_fr0 + step / n_incrT;
    return static_cast<int>(std::min<int64_t>(active, total_frames));
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               int64_t t, double rate, double beta1, double beta2, double eps) {
    if (params.size() != grads.size())
        throw ShapeError("adam_step: parameter/gradient size mismatch");
    if (t < 1) throw NumericError("adam_step: step counter must be >= 1");
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (size_t i = 0; i < params.size(); ++i) {
        double g = grads[i];
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
        double mh = state.m[i] / bc1;
        double vh = state.v[i] / bc2;
        params[i] -= rate * mh / (std::sqrt(vh) + eps);
    }
}

Tensor gather_rows(const Tensor& src, const std::vector<int64_t>& rows) {
    if (src.shape().size() != 2) throw ShapeError("gather_rows: source must be 2-d");
    int64_t cols = src.shape()[1];
    std::vector<double> out(rows.size() * static_cast<size_t>(cols));
    const auto sv = src.values();
    for (size_t r = 0; r < rows.size(); ++r)
        std::copy_n(sv.data() + rows[r] * cols, cols, out.data() + r * cols);
    return Tensor::constant({static_cast<int64_t>(rows.size()), cols}, std::move(out));
}

std::map<std::string, double> physics_snapshot(const SceneModel& scene) {
    std::map<std::string, double> snap;
    switch (scene.cfg.family) {
        case Family::Pendulum:
            snap["length"] = softplus_value(scene.length_raw.value());
            snap["damping"] = softplus_value(scene.damping_raw.value());
            snap["pivot.x"] = scene.pivot.at(0);
            snap["pivot.y"] = scene.pivot.at(1);
            break;
        case Family::Spring:
            snap["k"] = softplus_value(scene.k_raw.value());
            snap["l_rest"] = softplus_value(scene.l_rest_raw.value());
            break;
        case Family::Block:
            snap["alpha"] = scene.alpha.value();
            snap["mu"] = softplus_value(scene.mu_raw.value());
            snap["scale"] = softplus_value(scene.scale_raw.value());
            snap["track_angle"] = scene.track_angle.value();
            break;
        case Family::Ball:
            snap["scale"] = softplus_value(scene.scale_raw.value());
            break;
    }
    for (int64_t i = 0; i < scene.z0.size(); ++i)
        snap["z0." + std::to_string(i)] = scene.z0.at(i);
    return snap;
}

namespace {

// A coarse first-frame mask: the bounding box of the precise mask padded by
// two pixels, matching the rough blobs the spring supervision expects.
Tensor coarse_mask_tensor(const ImageGray& mask, const PixelGrid& grid) {
    int x0 = mask.width, y0 = mask.height, x1 = -1, y1 = -1;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(y, x) >= 0.5) {
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
    if (x1 < 0) throw DataError("coarse mask: empty first-frame mask");
    x0 = std::max(0, x0 - 2);
    y0 = std::max(0, y0 - 2);
    x1 = std::min(mask.width - 1, x1 + 2);
    y1 = std::min(mask.height - 1, y1 + 2);
    std::vector<double> v(static_cast<size_t>(grid.count()), 0.0);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            v[static_cast<size_t>(y) * mask.width + x] = 1.0;
    return Tensor::constant({grid.count(), 1}, std::move(v));
}

// Pixel-pitch band extending the visible area by 20% per side.
Tensor band_points(const PixelGrid& grid, int stride) {
    std::vector<double> pts;
    int ext_x = grid.width / 5, ext_y = grid.height / 5;
    for (int y = -ext_y; y < grid.height + ext_y; y += stride)
        for (int x = -ext_x; x < grid.width + ext_x; x += stride) {
            if (x >= 0 && x < grid.width && y >= 0 && y < grid.height) continue;
            auto [nx, ny] = grid.normalized(x, y);
            pts.push_back(nx);
            pts.push_back(ny);
        }
    int64_t count = static_cast<int64_t>(pts.size() / 2);
    return Tensor::constant({count, 2}, std::move(pts));
}

struct ParamSlot {
    SceneParam param;
    AdamState adam;
};

}  // namespace

FitResult fit(const FrameDataset& data, SceneModel& scene, const RunConfig& cfg,
              const std::filesystem::path& emergency_dir) {
    if (cfg.threads > 0) set_num_threads(cfg.threads);
    if (scene.cfg.family != (data.truth ? data.truth->family : scene.cfg.family))
        throw DataError("dataset family does not match the configured scene");

    DataTerm term = cfg.train.data_term == "bce" ? DataTerm::MaskBce : DataTerm::Photometric;
    if (term == DataTerm::Photometric && !data.has_frames())
        throw DataError("photometric training needs frames/, dataset has none");
    if (term == DataTerm::MaskBce && data.masks.empty())
        throw DataError("bce training needs masks/, dataset has none");

    std::vector<int> train = data.train_indices();
    if (train.empty()) throw DataError("no training frames");
    std::sort(train.begin(), train.end());
    int total_frames = static_cast<int>(train.size());

    std::vector<double> train_times;
    for (int idx : train) train_times.push_back(data.times[static_cast<size_t>(idx)]);

    const PixelGrid& grid = data.grid;
    int64_t px_per_frame = grid.count();

    // cached constants
    Tensor grid_pts = grid.coords();
    Tensor gamma_bg_full;
    if (scene.bg) {
        Tensor g = fourier_features(grid_pts, scene.bg->mapping);
        gamma_bg_full = g;  // constant: B and the grid never change
    }
    LossBatch shared;
    if (scene.cfg.family == Family::Spring) {
        shared.band_pts = band_points(grid, std::max(1, cfg.outside_stride));
        shared.frame0_pts = grid_pts;
        if (static_cast<int>(data.masks.size()) < scene.cfg.n_objects)
            throw DataError("spring scenes need one coarse mask per object on the first frame");
        for (int k = 0; k < scene.cfg.n_objects; ++k)
            shared.coarse_masks.push_back(
                coarse_mask_tensor(data.masks[static_cast<size_t>(k)][static_cast<size_t>(train[0])], grid));
        shared.frame0_traj_index = 0;
    }

    // flattened target lookups
    auto frame_targets = [&](int frame_idx, const std::vector<int64_t>& pix)
        -> std::vector<Tensor> {
        const ImageRGB& img = data.frames[static_cast<size_t>(frame_idx)];
        std::vector<Tensor> chans;
        for (int c = 0; c < 3; ++c) {
            std::vector<double> v(pix.size());
            for (size_t i = 0; i < pix.size(); ++i)
                v[i] = img.data[static_cast<size_t>(pix[i]) * 3 + c];
            chans.push_back(Tensor::constant({static_cast<int64_t>(pix.size()), 1}, std::move(v)));
        }
        return chans;
    };
    auto frame_mask = [&](int frame_idx, const std::vector<int64_t>& pix) -> Tensor {
        const ImageGray& m = data.masks[0][static_cast<size_t>(frame_idx)];
        std::vector<double> v(pix.size());
        for (size_t i = 0; i < pix.size(); ++i) v[i] = m.data[static_cast<size_t>(pix[i])];
        return Tensor::constant({static_cast<int64_t>(pix.size()), 1}, std::move(v));
    };

    std::vector<ParamSlot> slots;
    for (auto& p : scene.params()) slots.push_back({p, {}});

    FitResult result;
    Rng shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    int64_t step = 0;

    auto build_checkpoint = [&]() {
        Checkpoint ck = scene_to_checkpoint(scene, config_to_json(cfg).dump());
        ck.step = step;
        for (auto& e : ck.entries)
            for (auto& s : slots)
                if (s.param.name == e.name) {
                    e.adam_m = s.adam.m;
                    e.adam_v = s.adam.v;
                }
        return ck;
    };

    for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
        int64_t curriculum_clock = cfg.train.curriculum_unit == "epochs" ? epoch : step;
        int active = frame_curriculum(curriculum_clock, cfg.train.curriculum_start,
                                      cfg.train.curriculum_interval, total_frames);

        // epoch population: every pixel of every active frame, shuffled
        std::vector<int64_t> population(static_cast<size_t>(active) * px_per_frame);
        for (int64_t i = 0; i < static_cast<int64_t>(population.size()); ++i) population[i] = i;
        shuffle_rng.shuffle(population);

        double rate_mlp = cfg.train.decay_beta < 1.0
                              ? lr_schedule(epoch, cfg.train.lr_mlp, cfg.train.decay_beta,
                                            cfg.train.decay_step)
                              : cfg.train.lr_mlp;
        double rate_param = cfg.train.decay_physics
                                ? lr_schedule(epoch, cfg.train.lr_param, cfg.train.decay_beta,
                                              cfg.train.decay_step)
                                : cfg.train.lr_param;

        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr_mlp = rate_mlp;
        rec.lr_param = rate_param;
        rec.active_frames = active;
        int batches = 0;

        for (size_t off = 0; off < population.size(); off += static_cast<size_t>(cfg.train.batch)) {
            size_t take = std::min(population.size() - off, static_cast<size_t>(cfg.train.batch));

            // group the batch by frame
            std::vector<std::vector<int64_t>> by_frame(static_cast<size_t>(active));
            for (size_t i = 0; i < take; ++i) {
                int64_t flat = population[off + i];
                by_frame[static_cast<size_t>(flat / px_per_frame)].push_back(flat % px_per_frame);
            }

            Tape tape;
            for (auto& s : slots) tape.watch(s.param.tensor);

            std::vector<double> active_times(train_times.begin(), train_times.begin() + active);
            Trajectory traj = scene.simulate(active_times, cfg.train.substeps);

            LossBatch batch = shared;
            for (int a = 0; a < active; ++a) {
                auto& pix = by_frame[static_cast<size_t>(a)];
                if (pix.empty()) continue;
                std::sort(pix.begin(), pix.end());
                FrameBatch fb;
                fb.frame_index = train[static_cast<size_t>(a)];
                fb.traj_index = static_cast<size_t>(a);
                fb.pts = grid.coords_for(pix);
                if (gamma_bg_full.defined()) fb.gamma_bg = gather_rows(gamma_bg_full, pix);
                if (term == DataTerm::Photometric)
                    fb.target_rgb = frame_targets(fb.frame_index, pix);
                else
                    fb.target_mask = frame_mask(fb.frame_index, pix);
                batch.frames.push_back(std::move(fb));
            }

            LossParts parts;
            try {
                parts = total_loss(scene, traj, batch, epoch, cfg.loss, term);
            } catch (const NumericError&) {
                save_checkpoint(emergency_dir / "emergency.pvk", build_checkpoint());
                throw;
            }
            tape.backward(parts.total);

            ++step;
            for (auto& s : slots) {
                auto g = s.param.tensor.grad();
                if (g.empty()) continue;
                for (double gv : g)
                    if (!std::isfinite(gv)) {
                        save_checkpoint(emergency_dir / "emergency.pvk", build_checkpoint());
                        throw NumericError("non-finite gradient in parameter '" + s.param.name +
                                           "' at step " + std::to_string(step));
                    }
                double rate = s.param.group == ParamGroup::Mlp ? rate_mlp : rate_param;
                adam_step(s.param.tensor.values_mut(), g, s.adam, step, rate,
                          cfg.train.adam_beta1, cfg.train.adam_beta2, cfg.train.adam_eps);
            }

            rec.loss += parts.total.value();
            rec.data += parts.photo;
            rec.reg += parts.reg;
            rec.seg += parts.seg;
            rec.attach += parts.attach;
            rec.outside += parts.outside;
            ++batches;
        }

        if (batches > 0) {
            rec.loss /= batches;
            rec.data /= batches;
            rec.reg /= batches;
            rec.seg /= batches;
            rec.attach /= batches;
            rec.outside /= batches;
        }
        rec.physics = physics_snapshot(scene);
        result.history.push_back(std::move(rec));
    }

    result.steps = step;
    result.checkpoint = build_checkpoint();
    return result;
}

}  // namespace physvid
