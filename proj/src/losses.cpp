#include "physvid/losses.hpp"

#include <cmath>

namespace physvid {

double seg_weight(const LossWeights& w, int epoch) {
    return w.seg0 * std::pow(w.seg_decay, static_cast<double>(epoch / w.seg_interval));
}

Tensor photometric_mse(const std::vector<Tensor>& pred, const std::vector<Tensor>& target) {
    if (pred.size() != target.size() || pred.empty())
        throw ShapeError("photometric_mse: channel count mismatch");
    for (size_t c = 0; c < pred.size(); ++c) {
        if (pred[c].size() != target[c].size())
            throw ShapeError("photometric_mse: pixel count mismatch in channel " +
                             std::to_string(c));
        for (double v : target[c].values())
            if (v < 0.0 || v > 1.0)
                throw ShapeError("photometric_mse: target outside [0,1]");
    }
    Tensor acc;
    int64_t total = 0;
    for (size_t c = 0; c < pred.size(); ++c) {
        Tensor d = sub(pred[c], target[c]);
        Tensor s = sum(mul(d, d));
        acc = acc.defined() ? add(acc, s) : s;
        total += pred[c].size();
    }
    return div(acc, Tensor::scalar(static_cast<double>(total)));
}

Tensor occupancy_regularizer(const std::vector<Tensor>& opacities) {
    if (opacities.empty()) throw ShapeError("occupancy_regularizer: no opacities");
    Tensor acc;
    int64_t total = 0;
    for (const auto& o : opacities) {
        Tensor s = sum(mul(o, sub(Tensor::scalar(1.0), o)));
        acc = acc.defined() ? add(acc, s) : s;
        total += o.size();
    }
    return div(acc, Tensor::scalar(static_cast<double>(total)));
}

Tensor mask_bce(const Tensor& opacity, const Tensor& target) {
    if (opacity.size() != target.size())
        throw ShapeError("mask_bce: size mismatch");
    for (double m : target.values())
        if (std::abs(m) > 1e-9 && std::abs(m - 1.0) > 1e-9)
            throw DataError("mask_bce: target is not binary: " + std::to_string(m));
    Tensor o = clamp(opacity, kBceEps, 1.0 - kBceEps);
    Tensor one = Tensor::scalar(1.0);
    Tensor ll = add(mul(target, log(o)), mul(sub(one, target), log(sub(one, o))));
    return neg(mean(ll));
}

namespace {

Tensor squared_norm(const Tensor& v) { return sum(mul(v, v)); }

}  // namespace

LossParts total_loss(const SceneModel& scene, const Trajectory& traj, const LossBatch& batch,
                     int epoch, const LossWeights& weights, DataTerm term) {
    if (batch.frames.empty()) throw ShapeError("total_loss: empty batch");
    LossParts parts;

    std::vector<Tensor> batch_opacities;
    Tensor data_acc;  // sum of per-frame sums; normalized at the end
    int64_t data_count = 0;

    for (const auto& fb : batch.frames) {
        const Tensor& state = traj.at(fb.traj_index);
        PixelRender pr = render_points(scene, state, fb.pts,
                                       fb.gamma_bg.defined() ? &fb.gamma_bg : nullptr);
        for (const auto& o : pr.opacities) batch_opacities.push_back(o);

        if (term == DataTerm::Photometric) {
            if (pr.rgb.empty())
                throw DataError("photometric loss requires a background field");
            if (fb.target_rgb.size() != 3)
                throw DataError("photometric loss requires rgb targets");
            for (int c = 0; c < 3; ++c) {
                Tensor d = sub(pr.rgb[static_cast<size_t>(c)], fb.target_rgb[static_cast<size_t>(c)]);
                Tensor s = sum(mul(d, d));
                data_acc = data_acc.defined() ? add(data_acc, s) : s;
                data_count += d.size();
            }
        } else {
            if (!fb.target_mask.defined())
                throw DataError("mask BCE requires mask targets");
            Tensor o = clamp(pr.combined_opacity, kBceEps, 1.0 - kBceEps);
            Tensor one = Tensor::scalar(1.0);
            Tensor ll = add(mul(fb.target_mask, log(o)),
                            mul(sub(one, fb.target_mask), log(sub(one, o))));
            Tensor s = neg(sum(ll));
            data_acc = data_acc.defined() ? add(data_acc, s) : s;
            data_count += o.size();
        }
    }
    Tensor data_term = div(data_acc, Tensor::scalar(static_cast<double>(data_count)));
    parts.photo = data_term.value();

    Tensor total = mul(Tensor::scalar(weights.photo), data_term);

    if (weights.reg_epoch >= 0 && epoch >= weights.reg_epoch && weights.reg > 0.0) {
        Tensor reg = occupancy_regularizer(batch_opacities);
        parts.reg = reg.value();
        total = add(total, mul(Tensor::scalar(weights.reg), reg));
    }

    if (scene.cfg.family == Family::Spring) {
        if (batch.coarse_masks.size() != scene.objects.size())
            throw DataError("spring scenes need one coarse mask per object on the first frame");

        // seg: coarse-mask BCE on the first frame
        const Tensor& state0 = traj.at(batch.frame0_traj_index);
        Tensor seg_acc;
        for (size_t k = 0; k < scene.objects.size(); ++k) {
            Tensor local = scene.object_local(static_cast<int>(k), state0, batch.frame0_pts);
            Tensor o4 = scene.objects[k].eval(local);
            Tensor o = slice(o4, 0, batch.frame0_pts.shape()[0], 3, 1);
            Tensor b = mask_bce(o, batch.coarse_masks[k]);
            seg_acc = seg_acc.defined() ? add(seg_acc, b) : b;
        }
        Tensor seg = div(seg_acc, Tensor::scalar(static_cast<double>(scene.objects.size())));
        parts.seg = seg.value();
        total = add(total, mul(Tensor::scalar(seg_weight(weights, epoch)), seg));

        // attach: keep spring attachment points at the local origin
        Tensor att_acc;
        for (const auto& a : scene.attach) {
            Tensor s = squared_norm(a);
            att_acc = att_acc.defined() ? add(att_acc, s) : s;
        }
        parts.attach = att_acc.value();
        total = add(total, mul(Tensor::scalar(weights.attach), att_acc));

        // outside: opacity pushed to zero on the band around the visible area
        if (batch.band_pts.defined()) {
            Tensor out_acc;
            int64_t out_count = 0;
            for (const auto& fb : batch.frames) {
                const Tensor& state = traj.at(fb.traj_index);
                for (size_t k = 0; k < scene.objects.size(); ++k) {
                    Tensor local = scene.object_local(static_cast<int>(k), state, batch.band_pts);
                    Tensor o4 = scene.objects[k].eval(local);
                    Tensor o = slice(o4, 0, batch.band_pts.shape()[0], 3, 1);
                    Tensor s = sum(mul(o, o));
                    out_acc = out_acc.defined() ? add(out_acc, s) : s;
                    out_count += o.size();
                }
            }
            Tensor outside = div(out_acc, Tensor::scalar(static_cast<double>(out_count)));
            parts.outside = outside.value();
            total = add(total, mul(Tensor::scalar(weights.outside), outside));
        }
    }

    parts.total = total;
    if (!std::isfinite(total.value()))
        throw NumericError("total_loss: non-finite loss at epoch " + std::to_string(epoch));
    return parts;
}

}  // namespace physvid
