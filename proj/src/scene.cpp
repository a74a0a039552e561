#include "physvid/scene.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace physvid {

SceneModel SceneModel::create(const SceneConfig& cfg, Rng& rng) {
    SceneModel s;
    s.cfg = cfg;
    if (cfg.use_background) {
        BackgroundField f;
        f.mapping = FourierMapping::sample(cfg.background.fourier, 2, cfg.background.sigma, rng);
        f.net = Mlp::create(2 * cfg.background.fourier, 3, cfg.background.layers,
                            cfg.background.width, rng);
        s.bg = std::move(f);
    }
    for (int k = 0; k < cfg.n_objects; ++k) {
        ObjectField f;
        f.mapping = FourierMapping::sample(cfg.object.fourier, 2, cfg.object.sigma, rng);
        f.net = Mlp::create(2 * cfg.object.fourier, 4, cfg.object.layers, cfg.object.width, rng);
        s.objects.push_back(std::move(f));
    }

    s.z0 = Tensor::zeros({state_dim(cfg.family)});
    switch (cfg.family) {
        case Family::Pendulum:
            s.length_raw = Tensor::scalar(softplus_inverse(1.0));
            s.damping_raw = Tensor::scalar(softplus_inverse(0.5));
            s.pivot = Tensor::zeros({2});
            break;
        case Family::Spring:
            s.k_raw = Tensor::scalar(softplus_inverse(1.5));
            s.l_rest_raw = Tensor::scalar(softplus_inverse(0.5));
            for (int k = 0; k < cfg.n_objects; ++k) s.attach.push_back(Tensor::zeros({2}));
            break;
        case Family::Block:
            s.alpha = Tensor::scalar(0.3);
            s.mu_raw = Tensor::scalar(softplus_inverse(1e-2));
            s.track_origin = Tensor::zeros({2});
            s.track_angle = Tensor::scalar(0.0);
            s.scale_raw = Tensor::scalar(softplus_inverse(0.1));
            break;
        case Family::Ball:
            s.scale_raw = Tensor::scalar(softplus_inverse(0.1));
            break;
    }
    s.hom = Homography::identity();
    return s;
}

std::vector<SceneParam> SceneModel::params() {
    std::vector<SceneParam> out;
    auto add_mlp = [&](const std::string& prefix, Mlp& net) {
        for (size_t i = 0; i < net.weights.size(); ++i) {
            out.push_back({prefix + ".w" + std::to_string(i), ParamGroup::Mlp, net.weights[i]});
            out.push_back({prefix + ".b" + std::to_string(i), ParamGroup::Mlp, net.biases[i]});
        }
    };
    if (bg) add_mlp("bg", bg->net);
    for (size_t k = 0; k < objects.size(); ++k)
        add_mlp("obj" + std::to_string(k), objects[k].net);

    out.push_back({"z0", ParamGroup::Physics, z0});
    switch (cfg.family) {
        case Family::Pendulum:
            out.push_back({"ode.length_raw", ParamGroup::Physics, length_raw});
            out.push_back({"ode.damping_raw", ParamGroup::Physics, damping_raw});
            out.push_back({"pivot", ParamGroup::Physics, pivot});
            break;
        case Family::Spring:
            out.push_back({"ode.k_raw", ParamGroup::Physics, k_raw});
            out.push_back({"ode.l_rest_raw", ParamGroup::Physics, l_rest_raw});
            for (size_t k = 0; k < attach.size(); ++k)
                out.push_back({"attach" + std::to_string(k), ParamGroup::Physics, attach[k]});
            break;
        case Family::Block:
            out.push_back({"ode.alpha", ParamGroup::Physics, alpha});
            out.push_back({"ode.mu_raw", ParamGroup::Physics, mu_raw});
            out.push_back({"track_origin", ParamGroup::Physics, track_origin});
            out.push_back({"track_angle", ParamGroup::Physics, track_angle});
            out.push_back({"scale_raw", ParamGroup::Physics, scale_raw});
            break;
        case Family::Ball:
            out.push_back({"scale_raw", ParamGroup::Physics, scale_raw});
            break;
    }
    if (cfg.use_homography)
        out.push_back({"hom", ParamGroup::Physics, hom.h});
    return out;
}

RhsParams SceneModel::rhs_params() const {
    RhsParams p;
    switch (cfg.family) {
        case Family::Pendulum:
            p.length = softplus(length_raw);
            p.damping = softplus(damping_raw);
            break;
        case Family::Spring:
            p.k = softplus(k_raw);
            p.l_rest = softplus(l_rest_raw);
            break;
        case Family::Block:
            p.alpha = alpha;
            p.mu = softplus(mu_raw);
            break;
        case Family::Ball:
            break;
    }
    return p;
}

Tensor SceneModel::scale() const { return softplus(scale_raw); }

Trajectory SceneModel::simulate(const std::vector<double>& times, int substeps) const {
    return integrate(cfg.family, z0, rhs_params(), times, substeps);
}

Tensor SceneModel::object_local(int k, const Tensor& state, const Tensor& pts_global) const {
    Tensor xh = cfg.use_homography ? apply_homography(hom, pts_global) : pts_global;
    switch (cfg.family) {
        case Family::Pendulum:
            return pendulum_local(xh, slice(state, 0, 1), pivot);
        case Family::Spring:
            return spring_local(xh, slice(state, 2 * k, 2), attach[static_cast<size_t>(k)]);
        case Family::Block:
            return block_local(xh, slice(state, 0, 1), track_origin, track_angle, scale());
        case Family::Ball:
            return ball_local(xh, slice(state, 0, 2), scale());
    }
    throw ConfigError("bad family");
}

void SceneModel::set_positive(Tensor& raw, double value) {
    raw.values_mut()[0] = softplus_inverse(value);
}

void SceneModel::set_named_value(const std::string& key, double value) {
    if (key == "ode.length") { set_positive(length_raw, value); return; }
    if (key == "ode.damping") { set_positive(damping_raw, value); return; }
    if (key == "ode.k") { set_positive(k_raw, value); return; }
    if (key == "ode.l_rest") { set_positive(l_rest_raw, value); return; }
    if (key == "ode.alpha") { alpha.values_mut()[0] = value; return; }
    if (key == "ode.mu") { set_positive(mu_raw, value); return; }
    if (key == "scale") { set_positive(scale_raw, value); return; }
    if (key == "track_angle") { track_angle.values_mut()[0] = value; return; }
    if (key == "pivot.x") { pivot.values_mut()[0] = value; return; }
    if (key == "pivot.y") { pivot.values_mut()[1] = value; return; }
    if (key.rfind("z0.", 0) == 0) {
        size_t idx = static_cast<size_t>(std::stoul(key.substr(3)));
        if (idx >= z0.values().size()) throw ConfigError("z0 index out of range in '" + key + "'");
        z0.values_mut()[idx] = value;
        return;
    }
    throw ConfigError("unknown parameter override '" + key + "'");
}

double SceneModel::get_named_value(const std::string& key) const {
    if (key == "ode.length") return softplus_value(length_raw.value());
    if (key == "ode.damping") return softplus_value(damping_raw.value());
    if (key == "ode.k") return softplus_value(k_raw.value());
    if (key == "ode.l_rest") return softplus_value(l_rest_raw.value());
    if (key == "ode.alpha") return alpha.value();
    if (key == "ode.mu") return softplus_value(mu_raw.value());
    if (key == "scale") return softplus_value(scale_raw.value());
    if (key == "track_angle") return track_angle.value();
    if (key == "pivot.x") return pivot.at(0);
    if (key == "pivot.y") return pivot.at(1);
    if (key.rfind("z0.", 0) == 0)
        return z0.at(static_cast<int64_t>(std::stoul(key.substr(3))));
    throw ConfigError("unknown parameter '" + key + "'");
}

// ---------------------------------------------------------------------------
// Checkpoint binary format
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'P', 'V', 'C', 'K', 'P', 'T', '0', '1'};

void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_i64(std::string& out, int64_t v) { put_u64(out, static_cast<uint64_t>(v)); }

void put_doubles(std::string& out, const std::vector<double>& v) {
    put_u64(out, v.size());
    size_t at = out.size();
    out.resize(at + v.size() * 8);
    std::memcpy(out.data() + at, v.data(), v.size() * 8);
}

void put_string(std::string& out, const std::string& s) {
    put_u64(out, s.size());
    out += s;
}

struct Reader {
    const std::string& buf;
    size_t pos = 0;
    explicit Reader(const std::string& b) : buf(b) {}
    void need(size_t n) const {
        if (pos + n > buf.size()) throw DataError("checkpoint truncated");
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<uint64_t>(static_cast<uint8_t>(buf[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    int64_t i64() { return static_cast<int64_t>(u64()); }
    std::vector<double> doubles() {
        uint64_t n = u64();
        need(n * 8);
        std::vector<double> v(n);
        std::memcpy(v.data(), buf.data() + pos, n * 8);
        pos += n * 8;
        return v;
    }
    std::string str() {
        uint64_t n = u64();
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

void put_shape(std::string& out, const Shape& s) {
    put_u64(out, s.size());
    for (int64_t d : s) put_i64(out, d);
}

Shape read_shape(Reader& r) {
    uint64_t n = r.u64();
    Shape s(n);
    for (auto& d : s) d = r.i64();
    return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    std::string out(kMagic, sizeof(kMagic));
    put_string(out, ck.config_json);
    put_i64(out, ck.step);
    put_i64(out, ck.epoch);
    put_u64(out, ck.entries.size());
    for (const auto& e : ck.entries) {
        put_string(out, e.name);
        put_i64(out, e.group);
        put_shape(out, e.shape);
        put_doubles(out, e.values);
        put_doubles(out, e.adam_m);
        put_doubles(out, e.adam_v);
    }
    put_u64(out, ck.fixed.size());
    for (const auto& f : ck.fixed) {
        put_string(out, f.name);
        put_shape(out, f.shape);
        put_doubles(out, f.values);
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw DataError("cannot write checkpoint " + path.string());
        os.write(out.data(), static_cast<std::streamsize>(out.size()));
        if (!os) throw DataError("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open checkpoint " + path.string());
    std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (buf.size() < sizeof(kMagic) || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
        throw DataError(path.string() + ": not a physvid checkpoint");
    Reader r(buf);
    r.pos = sizeof(kMagic);
    Checkpoint ck;
    ck.config_json = r.str();
    ck.step = r.i64();
    ck.epoch = r.i64();
    uint64_t n = r.u64();
    for (uint64_t i = 0; i < n; ++i) {
        Checkpoint::Entry e;
        e.name = r.str();
        e.group = static_cast<int>(r.i64());
        e.shape = read_shape(r);
        e.values = r.doubles();
        e.adam_m = r.doubles();
        e.adam_v = r.doubles();
        ck.entries.push_back(std::move(e));
    }
    uint64_t nf = r.u64();
    for (uint64_t i = 0; i < nf; ++i) {
        Checkpoint::Fixed f;
        f.name = r.str();
        f.shape = read_shape(r);
        f.values = r.doubles();
        ck.fixed.push_back(std::move(f));
    }
    return ck;
}

Checkpoint scene_to_checkpoint(SceneModel& scene, const std::string& config_json) {
    Checkpoint ck;
    ck.config_json = config_json;
    for (auto& p : scene.params()) {
        Checkpoint::Entry e;
        e.name = p.name;
        e.group = p.group == ParamGroup::Mlp ? 0 : 1;
        e.shape = p.tensor.shape();
        e.values.assign(p.tensor.values().begin(), p.tensor.values().end());
        ck.entries.push_back(std::move(e));
    }
    auto add_fixed = [&](const std::string& name, const Tensor& t) {
        Checkpoint::Fixed f;
        f.name = name;
        f.shape = t.shape();
        f.values.assign(t.values().begin(), t.values().end());
        ck.fixed.push_back(std::move(f));
    };
    if (scene.bg) add_fixed("bg.B", scene.bg->mapping.b);
    for (size_t k = 0; k < scene.objects.size(); ++k)
        add_fixed("obj" + std::to_string(k) + ".B", scene.objects[k].mapping.b);
    return ck;
}

SceneModel scene_from_checkpoint(const SceneConfig& cfg, const Checkpoint& ck) {
    Rng throwaway(0);
    SceneModel scene = SceneModel::create(cfg, throwaway);
    for (const auto& f : ck.fixed) {
        FourierMapping* m = nullptr;
        double sigma = cfg.object.sigma;
        if (f.name == "bg.B" && scene.bg) {
            m = &scene.bg->mapping;
            sigma = cfg.background.sigma;
        } else if (f.name.rfind("obj", 0) == 0) {
            size_t k = static_cast<size_t>(std::stoul(f.name.substr(3)));
            if (k < scene.objects.size()) m = &scene.objects[k].mapping;
        }
        if (!m) throw DataError("checkpoint has unknown fixed tensor '" + f.name + "'");
        *m = FourierMapping::from_values(static_cast<int>(f.shape[0]),
                                         static_cast<int>(f.shape[1]), sigma, f.values);
    }
    auto params = scene.params();
    for (const auto& e : ck.entries) {
        bool found = false;
        for (auto& p : params) {
            if (p.name != e.name) continue;
            if (p.tensor.shape() != e.shape)
                throw DataError("checkpoint shape mismatch for '" + e.name + "'");
            std::copy(e.values.begin(), e.values.end(), p.tensor.values_mut().begin());
            found = true;
            break;
        }
        if (!found) throw DataError("checkpoint has unknown parameter '" + e.name + "'");
    }
    return scene;
}

}  // namespace physvid
