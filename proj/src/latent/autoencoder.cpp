#include "vton/latent/autoencoder.hpp"

#include <cmath>
#include <fstream>

#include "vton/core/optim.hpp"

namespace vton::latent {

namespace o = vton::ops;

int AutoencoderArch::n_down() const {
    int d = downsample, n = 0;
    while (d > 1) {
        if (d % 2) throw ArgError("autoencoder: downsample must be a power of two");
        d /= 2;
        ++n;
    }
    if (n < 1 || n + 1 > static_cast<int>(widths.size()))
        throw ArgError("autoencoder: widths too short for downsample factor");
    return n;
}

json AutoencoderArch::to_json() const {
    return json{{"in_channels", in_channels},
                {"downsample", downsample},
                {"latent_channels", latent_channels},
                {"widths", widths}};
}

AutoencoderArch AutoencoderArch::from_json(const json& j) {
    AutoencoderArch a;
    a.in_channels = j.at("in_channels").get<int>();
    a.downsample = j.at("downsample").get<int>();
    a.latent_channels = j.at("latent_channels").get<int>();
    a.widths = j.at("widths").get<std::vector<int>>();
    return a;
}

Autoencoder Autoencoder::create(const AutoencoderArch& arch, uint64_t seed) {
    Autoencoder ae;
    ae.arch = arch;
    ae.seed = seed;
    Rng rng(derive_seed(seed, "autoencoder-init"));
    int n = arch.n_down();
    const auto& w = arch.widths;
    add_conv(ae.params, "enc/stem", w[0], arch.in_channels, 3, rng);
    for (int k = 0; k < n; ++k) add_conv(ae.params, "enc/down" + std::to_string(k), w[k + 1], w[k], 3, rng);
    add_conv(ae.params, "enc/head", 2 * arch.latent_channels, w[n], 1, rng);
    // start with a tight posterior: logvar bias negative
    Tensor& hb = ae.params["enc/head/b"];
    for (int c = arch.latent_channels; c < 2 * arch.latent_channels; ++c) hb[c] = -4.0f;
    add_conv(ae.params, "dec/head", w[n], arch.latent_channels, 1, rng);
    for (int k = n - 1; k >= 0; --k) add_conv(ae.params, "dec/up" + std::to_string(k), w[k], w[k + 1], 3, rng);
    add_conv(ae.params, "dec/out", arch.in_channels, w[0], 3, rng);
    return ae;
}

void Autoencoder::save(const std::filesystem::path& dir, const json& extra_meta) const {
    json meta = extra_meta;
    meta["kind"] = "autoencoder";
    meta["trained"] = trained;
    meta["latent_scale"] = latent_scale;
    meta["seed"] = seed;
    save_checkpoint(dir, params, arch.to_json(), meta);
}

Autoencoder Autoencoder::load(const std::filesystem::path& dir) {
    json arch, meta;
    Autoencoder ae;
    load_checkpoint(dir, ae.params, arch, meta);
    ae.arch = AutoencoderArch::from_json(arch);
    ae.trained = meta.value("trained", false);
    ae.latent_scale = meta.value("latent_scale", 1.0f);
    ae.seed = meta.value("seed", 0ULL);
    return ae;
}

static void check_divisible(const Tensor& img, int d) {
    if (img.dim(1) % d || img.dim(2) % d)
        throw ShapeError("encode: image dims " + img.shape_str() + " not divisible by d=" + std::to_string(d));
}

// trunk up to the deepest tap; returns per-stage activations (after each down)
static std::vector<Var> encoder_trunk(const Autoencoder& ae, const NetCtx& ctx, Var img) {
    int n = ae.arch.n_down();
    Var h = o::silu(conv(ctx, img, "enc/stem", 1, 1));
    std::vector<Var> taps;
    for (int k = 0; k < n; ++k) {
        h = o::silu(conv(ctx, h, "enc/down" + std::to_string(k), 2, 1));
        taps.push_back(h);
    }
    return taps;
}

std::pair<Var, Var> encode_stats(const Autoencoder& ae, const NetCtx& ctx, Var img) {
    check_divisible(img.val(), ae.arch.downsample);
    std::vector<Var> taps = encoder_trunk(ae, ctx, img);
    Var h = conv(ctx, taps.back(), "enc/head", 1, 0);
    int c = ae.arch.latent_channels;
    return {o::slice_ch(h, 0, c), o::slice_ch(h, c, 2 * c)};
}

Var encode_mean(const Autoencoder& ae, const NetCtx& ctx, Var img) {
    return encode_stats(ae, ctx, img).first;
}

Var decode(const Autoencoder& ae, const NetCtx& ctx, Var z) {
    if (z.val().dim(0) != ae.arch.latent_channels) throw ShapeError("decode: latent channels mismatch");
    int n = ae.arch.n_down();
    Var h = o::silu(conv(ctx, z, "dec/head", 1, 0));
    for (int k = n - 1; k >= 0; --k)
        h = o::silu(conv(ctx, o::upsample_nearest2(h), "dec/up" + std::to_string(k), 1, 1));
    return o::sigmoid(conv(ctx, h, "dec/out", 1, 1));
}

Tensor encode(const Autoencoder& ae, const Tensor& img) {
    Graph g;
    NetCtx ctx{g, ae.params, false};
    return encode_mean(ae, ctx, g.leaf(img)).val();
}

Tensor decode(const Autoencoder& ae, const Tensor& z) {
    Graph g;
    NetCtx ctx{g, ae.params, false};
    return decode(ae, ctx, g.leaf(z)).val();
}

std::vector<Var> perceptual_features(const Autoencoder& ae, Graph& g, Var img) {
    if (!ae.trained) throw ArgError("perceptual_features: autoencoder not trained");
    NetCtx ctx{g, ae.params, false};
    std::vector<Var> taps = encoder_trunk(ae, ctx, img);
    std::vector<Var> out;
    for (const Var& v : taps) out.push_back(v);
    while (out.size() < 3) out.push_back(o::avgpool2(out.back()));
    out.resize(3);
    return out;
}

std::vector<Tensor> perceptual_features(const Autoencoder& ae, const Tensor& img) {
    Graph g;
    std::vector<Var> f = perceptual_features(ae, g, g.leaf(img));
    std::vector<Tensor> out;
    for (const Var& v : f) out.push_back(v.val());
    return out;
}

Tensor downsize_mask(const Tensor& m, int d) {
    if (m.ndim() != 3 || m.dim(0) != 1) throw ShapeError("downsize_mask: {1,H,W} expected");
    if (d < 1) throw ArgError("downsize_mask: d < 1");
    int H = m.dim(1), W = m.dim(2);
    if (H % d || W % d) throw ShapeError("downsize_mask: dims not divisible by d");
    Tensor out({1, H / d, W / d});
    for (int y = 0; y < H / d; ++y)
        for (int x = 0; x < W / d; ++x) {
            double s = 0;
            for (int dy = 0; dy < d; ++dy)
                for (int dx = 0; dx < d; ++dx) s += m.at(0, y * d + dy, x * d + dx);
            out.at(0, y, x) = (s / (d * d) >= 0.5) ? 1.0f : 0.0f;
        }
    return out;
}

void TrainCurve::save_csv(const std::filesystem::path& path, const std::string& header) const {
    std::ofstream f(path);
    if (!f) throw IoError("TrainCurve: cannot open " + path.string());
    f << header << '\n';
    for (size_t i = 0; i < steps.size(); ++i) f << steps[i] << ',' << loss[i] << '\n';
}

TrainCurve train_autoencoder(Autoencoder& ae, const std::vector<const Tensor*>& images,
                             const AeTrainConfig& cfg) {
    if (images.empty()) throw ArgError("train_autoencoder: no images");
    Adam adam;
    TrainCurve curve;
    int c = ae.arch.latent_channels;
    for (int step = 0; step < cfg.steps; ++step) {
        uint64_t step_seed = derive_seed(cfg.seed, "ae-step", static_cast<uint64_t>(step));
        Rng pick(step_seed);
        std::vector<int> idx(static_cast<size_t>(cfg.batch));
        for (int i = 0; i < cfg.batch; ++i) idx[static_cast<size_t>(i)] = pick.uniform_int(0, static_cast<int>(images.size()) - 1);

        auto one = [&](int i) -> std::pair<double, GradMap> {
            Graph g;
            NetCtx ctx{g, ae.params, true};
            Var img = g.leaf(*images[static_cast<size_t>(idx[static_cast<size_t>(i)])]);
            auto [mean, logvar] = encode_stats(ae, ctx, img);
            Var z = mean;
            if (cfg.sample_posterior) {
                Rng nrng(derive_seed(step_seed, "ae-eps", static_cast<uint64_t>(i)));
                Tensor eps = nrng.normal_tensor(mean.shape());
                Var sigma = o::exp_(o::mul_scalar(logvar, 0.5f));
                z = o::add(mean, o::mul(sigma, g.leaf(eps)));
            }
            Var recon = decode(ae, ctx, z);
            Var loss = o::l1(recon, img);
            if (cfg.kl_weight > 0.0f) {
                // KL = 0.5 * mean(mu^2 + exp(lv) - 1 - lv)
                Var kl = o::mean_all(
                    o::sub(o::add(o::square(mean), o::exp_(logvar)), o::add_scalar(logvar, 1.0f)));
                loss = o::add(loss, o::mul_scalar(kl, 0.5f * cfg.kl_weight));
            }
            g.backward(loss);
            return {loss.val()[0], g.param_grads()};
        };
        auto [loss, grads] = run_batch(cfg.batch, cfg.threads, one);
        if (!std::isfinite(loss))
            throw NumericalError("train_autoencoder: NaN loss at step " + std::to_string(step));
        adam.step(ae.params, grads, cfg.lr);
        curve.steps.push_back(step);
        curve.loss.push_back(loss);
    }
    // latent scale: std of encoded means over (a subset of) the training images
    double s2 = 0;
    int64_t n = 0;
    size_t stride = std::max<size_t>(1, images.size() / 64);
    for (size_t i = 0; i < images.size(); i += stride) {
        Tensor z = encode(ae, *images[i]);
        for (int64_t j = 0; j < z.numel(); ++j) s2 += static_cast<double>(z[j]) * z[j];
        n += z.numel();
    }
    ae.latent_scale = static_cast<float>(std::sqrt(std::max(1e-12, s2 / static_cast<double>(n))));
    (void)c;
    ae.trained = true;
    return curve;
}

}  // namespace vton::latent
