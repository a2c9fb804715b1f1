#include "vton/diffusion/model.hpp"

#include <cmath>

namespace vton::diffusion {

namespace o = vton::ops;

json DiffusionArch::to_json() const {
    return json{{"latent_channels", latent_channels}, {"base", base},       {"time_dim", time_dim},
                {"attn_dim", attn_dim},               {"token_dim", token_dim}, {"token_feat", token_feat},
                {"n_tokens", n_tokens},               {"groups", groups}};
}

DiffusionArch DiffusionArch::from_json(const json& j) {
    DiffusionArch a;
    a.latent_channels = j.at("latent_channels").get<int>();
    a.base = j.at("base").get<int>();
    a.time_dim = j.at("time_dim").get<int>();
    a.attn_dim = j.at("attn_dim").get<int>();
    a.token_dim = j.at("token_dim").get<int>();
    a.token_feat = j.at("token_feat").get<int>();
    a.n_tokens = j.at("n_tokens").get<int>();
    a.groups = j.at("groups").get<int>();
    return a;
}

static int norm_groups(int channels, int pref) {
    int g = std::min(pref, channels);
    while (g > 1 && channels % g) --g;
    return g;
}

static void add_resblock(ParamStore& p, const std::string& name, int C, int time_dim, Rng& rng) {
    add_group_norm(p, name + "/gn1", C);
    add_conv(p, name + "/c1", C, C, 3, rng);
    add_linear(p, name + "/t", time_dim, C, rng);
    add_group_norm(p, name + "/gn2", C);
    add_conv(p, name + "/c2", C, C, 3, rng, /*zero_init=*/true);
}

static void add_attn(ParamStore& p, const std::string& name, int C, int token_dim, int A, Rng& rng) {
    add_group_norm(p, name + "/gn", C);
    add_linear(p, name + "/q", C, A, rng);
    add_linear(p, name + "/k", token_dim, A, rng);
    add_linear(p, name + "/v", token_dim, A, rng);
    add_linear(p, name + "/o", A, C, rng, /*zero_init=*/true);
}

DiffusionModel DiffusionModel::create(const DiffusionArch& arch, uint64_t seed) {
    DiffusionModel m;
    m.arch = arch;
    m.seed = seed;
    Rng rng(derive_seed(seed, "diffusion-init"));
    auto w = arch.stage_widths();
    int c0 = w[0], c1 = w[1], c2 = w[2];
    ParamStore& p = m.params;
    add_linear(p, "unet/time/l1", arch.time_dim, arch.time_dim, rng);
    add_linear(p, "unet/time/l2", arch.time_dim, arch.time_dim, rng);
    add_conv(p, "unet/stem", c0, arch.in_channels(), 3, rng);
    add_resblock(p, "unet/down0/res", c0, arch.time_dim, rng);
    add_attn(p, "unet/down0/attn", c0, arch.token_dim, arch.attn_dim, rng);
    add_conv(p, "unet/down1", c1, c0, 3, rng);
    add_resblock(p, "unet/down1/res", c1, arch.time_dim, rng);
    add_attn(p, "unet/down1/attn", c1, arch.token_dim, arch.attn_dim, rng);
    add_conv(p, "unet/down2", c2, c1, 3, rng);
    add_resblock(p, "unet/mid/res1", c2, arch.time_dim, rng);
    add_attn(p, "unet/mid/attn", c2, arch.token_dim, arch.attn_dim, rng);
    add_resblock(p, "unet/mid/res2", c2, arch.time_dim, rng);
    add_conv(p, "unet/up1/reduce", c1, c2, 3, rng);
    add_conv(p, "unet/up1/merge", c1, 2 * c1, 3, rng);
    add_resblock(p, "unet/up1/res", c1, arch.time_dim, rng);
    add_attn(p, "unet/up1/attn", c1, arch.token_dim, arch.attn_dim, rng);
    add_conv(p, "unet/up2/reduce", c0, c1, 3, rng);
    add_conv(p, "unet/up2/merge", c0, 2 * c0, 3, rng);
    add_resblock(p, "unet/up2/res", c0, arch.time_dim, rng);
    add_attn(p, "unet/up2/attn", c0, arch.token_dim, arch.attn_dim, rng);
    add_group_norm(p, "unet/out/gn", c0);
    add_conv(p, "unet/out/conv", arch.latent_channels, c0, 3, rng, /*zero_init=*/true);
    add_linear(p, "proj", arch.token_feat, arch.token_dim, rng);
    Tensor& null_t = p.add("proj/null", {arch.n_tokens, arch.token_dim});
    init_normal(null_t, rng, 0.02f);
    return m;
}

void DiffusionModel::save(const std::filesystem::path& dir, const json& extra_meta) const {
    json meta = extra_meta;
    meta["kind"] = "diffusion";
    meta["seed"] = seed;
    meta["trained"] = trained;
    save_checkpoint(dir, params, arch.to_json(), meta);
}

DiffusionModel DiffusionModel::load(const std::filesystem::path& dir) {
    DiffusionModel m;
    json arch, meta;
    load_checkpoint(dir, m.params, arch, meta);
    m.arch = DiffusionArch::from_json(arch);
    m.seed = meta.value("seed", 0ULL);
    m.trained = meta.value("trained", false);
    return m;
}

Tensor token_backbone(const latent::Autoencoder& ae, const Tensor& garment) {
    std::vector<Tensor> feats = latent::perceptual_features(ae, garment);
    const Tensor& f = feats.back();  // stride-8 tap
    int C = f.dim(0), L = f.dim(1) * f.dim(2);
    Tensor tokens({L, C});
    for (int c = 0; c < C; ++c)
        for (int t = 0; t < L; ++t) tokens.at(t, c) = f[static_cast<int64_t>(c) * L + t];
    return tokens;
}

Var project_tokens(const DiffusionModel& m, Graph& g, const Tensor& backbone_tokens, bool trainable) {
    if (backbone_tokens.dim(0) != m.arch.n_tokens || backbone_tokens.dim(1) != m.arch.token_feat)
        throw ShapeError("project_tokens: backbone token shape mismatch");
    NetCtx ctx{g, m.params, trainable};
    return linear(ctx, g.leaf(backbone_tokens), "proj");
}

Var null_tokens(const DiffusionModel& m, Graph& g, bool trainable) {
    NetCtx ctx{g, m.params, trainable};
    return ctx.t("proj/null");
}

Tensor global_encode(const DiffusionModel& m, const latent::Autoencoder& ae, const Tensor& garment,
                     bool drop) {
    if (drop) return m.params.at("proj/null");
    Graph g;
    return project_tokens(m, g, token_backbone(ae, garment), false).val();
}

Tensor build_denoising_input(const Tensor& z_t, const Tensor& local_cond, const Tensor& m_r) {
    check_same_shape(z_t, local_cond, "build_denoising_input");
    if (m_r.ndim() != 3 || m_r.dim(0) != 1 || m_r.dim(1) != z_t.dim(1) || m_r.dim(2) != z_t.dim(2))
        throw ShapeError("build_denoising_input: m_r shape");
    int c = z_t.dim(0), H = z_t.dim(1), W = z_t.dim(2);
    Tensor psi({2 * c + 1, H, W});
    std::copy(z_t.data(), z_t.data() + z_t.numel(), psi.data());
    std::copy(local_cond.data(), local_cond.data() + local_cond.numel(), psi.data() + z_t.numel());
    std::copy(m_r.data(), m_r.data() + m_r.numel(), psi.data() + 2 * z_t.numel());
    return psi;
}

static Tensor time_embedding(int t, int dim) {
    Tensor e({1, dim});
    int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        double freq = std::exp(-std::log(10000.0) * i / std::max(1, half - 1));
        e.at(0, i) = static_cast<float>(std::sin(t * freq));
        e.at(0, half + i) = static_cast<float>(std::cos(t * freq));
    }
    return e;
}

static Var resblock(const NetCtx& ctx, const std::string& name, Var x, Var temb, int C, int groups) {
    Var h = group_norm(ctx, x, name + "/gn1", norm_groups(C, groups));
    h = o::silu(h);
    h = conv(ctx, h, name + "/c1", 1, 1);
    Var tp = linear(ctx, temb, name + "/t");  // {1,C}
    h = o::bias_channels(h, o::reshape(tp, {C}));
    h = group_norm(ctx, h, name + "/gn2", norm_groups(C, groups));
    h = o::silu(h);
    h = conv(ctx, h, name + "/c2", 1, 1);
    return o::add(x, h);
}

static Var cross_attn(const NetCtx& ctx, const std::string& name, Var x, Var tokens, int C, int A,
                      int groups) {
    int H = x.val().dim(1), W = x.val().dim(2);
    Var h = group_norm(ctx, x, name + "/gn", norm_groups(C, groups));
    Var q = linear(ctx, o::chw_to_tokens(h), name + "/q");
    Var k = linear(ctx, tokens, name + "/k");
    Var v = linear(ctx, tokens, name + "/v");
    Var scores = o::mul_scalar(o::matmul_tb(q, k), 1.0f / std::sqrt(static_cast<float>(A)));
    Var attn = o::softmax_rows(scores);
    Var out = linear(ctx, o::matmul(attn, v), name + "/o");
    return o::add(x, o::tokens_to_chw(out, C, H, W));
}

std::pair<Var, Var> freeu_reweight(Var backbone, Var skip, int stage, const FreeUFactors* freeu) {
    if (!freeu || stage > 2) return {backbone, skip};
    if (stage < 1) throw ArgError("freeu_reweight: stage must be >= 1");
    freeu->validate();
    float b = stage == 1 ? freeu->b1 : freeu->b2;
    float s = stage == 1 ? freeu->s1 : freeu->s2;
    int C = backbone.val().dim(0);
    int half = (C + 1) / 2;
    Var head = o::mul_scalar(o::slice_ch(backbone, 0, half), b);
    Var bb = half < C ? o::concat_ch({head, o::slice_ch(backbone, half, C)}) : head;
    // low band: per-axis frequency within 1/4 of Nyquist
    Var sk = o::lowfreq_mix(skip, s, 0.25f);
    return {bb, sk};
}

Var unet_forward(const DiffusionModel& m, Graph& g, Var psi, Var tokens, int t, bool trainable,
                 const FreeUFactors* freeu) {
    const DiffusionArch& a = m.arch;
    if (psi.val().dim(0) != a.in_channels())
        throw ShapeError("unet_forward: expected " + std::to_string(a.in_channels()) + " input channels");
    if (psi.val().dim(1) % 4 || psi.val().dim(2) % 4)
        throw ShapeError("unet_forward: latent dims must be divisible by 4");
    if (tokens.val().ndim() != 2 || tokens.val().dim(0) != a.n_tokens ||
        tokens.val().dim(1) != a.token_dim)
        throw ShapeError("unet_forward: token shape");
    NetCtx ctx{g, m.params, trainable};
    auto w = a.stage_widths();
    int c0 = w[0], c1 = w[1], c2 = w[2];

    Var temb = g.leaf(time_embedding(t, a.time_dim));
    temb = o::silu(linear(ctx, temb, "unet/time/l1"));
    temb = linear(ctx, temb, "unet/time/l2");

    Var h = conv(ctx, psi, "unet/stem", 1, 1);
    Var a0 = cross_attn(ctx, "unet/down0/attn", resblock(ctx, "unet/down0/res", h, temb, c0, a.groups),
                        tokens, c0, a.attn_dim, a.groups);
    Var h1 = conv(ctx, a0, "unet/down1", 2, 1);
    Var a1 = cross_attn(ctx, "unet/down1/attn", resblock(ctx, "unet/down1/res", h1, temb, c1, a.groups),
                        tokens, c1, a.attn_dim, a.groups);
    Var h2 = conv(ctx, a1, "unet/down2", 2, 1);
    Var mid = resblock(ctx, "unet/mid/res1", h2, temb, c2, a.groups);
    mid = cross_attn(ctx, "unet/mid/attn", mid, tokens, c2, a.attn_dim, a.groups);
    mid = resblock(ctx, "unet/mid/res2", mid, temb, c2, a.groups);

    Var b1v = conv(ctx, o::upsample_nearest2(mid), "unet/up1/reduce", 1, 1);
    auto [bb1, sk1] = freeu_reweight(b1v, a1, 1, freeu);
    Var u1 = conv(ctx, o::concat_ch({bb1, sk1}), "unet/up1/merge", 1, 1);
    u1 = resblock(ctx, "unet/up1/res", u1, temb, c1, a.groups);
    u1 = cross_attn(ctx, "unet/up1/attn", u1, tokens, c1, a.attn_dim, a.groups);

    Var b2v = conv(ctx, o::upsample_nearest2(u1), "unet/up2/reduce", 1, 1);
    auto [bb2, sk2] = freeu_reweight(b2v, a0, 2, freeu);
    Var u2 = conv(ctx, o::concat_ch({bb2, sk2}), "unet/up2/merge", 1, 1);
    u2 = resblock(ctx, "unet/up2/res", u2, temb, c0, a.groups);
    u2 = cross_attn(ctx, "unet/up2/attn", u2, tokens, c0, a.attn_dim, a.groups);

    Var out = group_norm(ctx, u2, "unet/out/gn", norm_groups(c0, a.groups));
    return conv(ctx, o::silu(out), "unet/out/conv", 1, 1);
}

Tensor unet_predict(const DiffusionModel& m, const Tensor& psi, const Tensor& tokens, int t,
                    const FreeUFactors* freeu) {
    Graph g;
    return unet_forward(m, g, g.leaf(psi), g.leaf(tokens), t, false, freeu).val();
}

}  // namespace vton::diffusion
