#include "vton/flow/networks.hpp"

#include "vton/core/image.hpp"
#include "vton/latent/autoencoder.hpp"

namespace vton::flow {

namespace o = vton::ops;

json FpnArch::to_json() const {
    return json{{"in_channels", in_channels}, {"widths", widths}, {"out_channels", out_channels}};
}

FpnArch FpnArch::from_json(const json& j) {
    FpnArch a;
    a.in_channels = j.at("in_channels").get<int>();
    a.widths = j.at("widths").get<std::vector<int>>();
    a.out_channels = j.at("out_channels").get<int>();
    return a;
}

json CascadeArch::to_json() const {
    return json{{"feat_channels", feat_channels}, {"cond_channels", cond_channels}, {"hidden", hidden}};
}

CascadeArch CascadeArch::from_json(const json& j) {
    CascadeArch a;
    a.feat_channels = j.at("feat_channels").get<int>();
    a.cond_channels = j.at("cond_channels").get<int>();
    a.hidden = j.at("hidden").get<int>();
    return a;
}

void add_fpn(ParamStore& p, const std::string& prefix, const FpnArch& arch, Rng& rng) {
    if (static_cast<int>(arch.widths.size()) != kPyramidLevels)
        throw ArgError("add_fpn: widths must have 5 entries");
    add_conv(p, prefix + "/stem", arch.widths[0], arch.in_channels, 3, rng);
    for (int k = 1; k < kPyramidLevels; ++k)
        add_conv(p, prefix + "/down" + std::to_string(k), arch.widths[static_cast<size_t>(k)],
                 arch.widths[static_cast<size_t>(k) - 1], 3, rng);
    for (int k = 0; k < kPyramidLevels; ++k) {
        add_conv(p, prefix + "/lat" + std::to_string(k), arch.out_channels,
                 arch.widths[static_cast<size_t>(k)], 1, rng);
        add_conv(p, prefix + "/smooth" + std::to_string(k), arch.out_channels, arch.out_channels, 3, rng);
    }
}

void add_cascade(ParamStore& p, const std::string& prefix, const CascadeArch& arch, Rng& rng) {
    int in = arch.feat_channels + arch.cond_channels;
    for (int k = 0; k < kPyramidLevels; ++k) {
        std::string b = prefix + "/block" + std::to_string(k);
        add_conv(p, b + "/c1", arch.hidden, in, 3, rng);
        add_conv(p, b + "/c2", arch.hidden, arch.hidden, 3, rng);
        add_conv(p, b + "/flow", 2, arch.hidden, 3, rng, /*zero_init=*/true);
    }
}

std::vector<Var> fpn_encode(const NetCtx& ctx, const std::string& prefix, const FpnArch& arch, Var input) {
    if (input.val().dim(0) != arch.in_channels)
        throw ShapeError("fpn_encode: input channels " + std::to_string(input.val().dim(0)) + " != " +
                         std::to_string(arch.in_channels));
    std::vector<Var> bottom;
    Var h = o::leaky_relu(conv(ctx, input, prefix + "/stem", 1, 1), 0.1f);
    bottom.push_back(h);
    for (int k = 1; k < kPyramidLevels; ++k) {
        h = o::leaky_relu(conv(ctx, h, prefix + "/down" + std::to_string(k), 2, 1), 0.1f);
        bottom.push_back(h);
    }
    std::vector<Var> out(kPyramidLevels);
    Var top = conv(ctx, bottom[kPyramidLevels - 1], prefix + "/lat4", 1, 0);
    out[kPyramidLevels - 1] = o::leaky_relu(conv(ctx, top, prefix + "/smooth4", 1, 1), 0.1f);
    Var carry = top;
    for (int k = kPyramidLevels - 2; k >= 0; --k) {
        Var lat = conv(ctx, bottom[static_cast<size_t>(k)], prefix + "/lat" + std::to_string(k), 1, 0);
        carry = o::add(lat, o::upsample_nearest2(carry));
        out[static_cast<size_t>(k)] =
            o::leaky_relu(conv(ctx, carry, prefix + "/smooth" + std::to_string(k), 1, 1), 0.1f);
    }
    return out;
}

Var cascade_estimate(const NetCtx& ctx, const std::string& prefix, const CascadeArch& arch,
                     const std::vector<Var>& features, const std::vector<Var>& conditions) {
    if (features.size() != kPyramidLevels) throw ShapeError("cascade_estimate: need 5 feature levels");
    if (conditions.size() != kPyramidLevels) throw ArgError("cascade_estimate: missing level conditions");
    Graph& g = ctx.g;
    Var flow;
    for (int k = kPyramidLevels - 1; k >= 0; --k) {
        const Var& feat = features[static_cast<size_t>(k)];
        if (k == kPyramidLevels - 1) {
            flow = g.leaf(zero_flow(feat.val().dim(1), feat.val().dim(2)));
        } else {
            flow = o::upsample_bilinear2(flow, /*scale_values=*/true);
        }
        Var warped = o::grid_sample(feat, flow);
        Var in = o::concat_ch({warped, conditions[static_cast<size_t>(k)]});
        std::string b = prefix + "/block" + std::to_string(k);
        Var h = o::leaky_relu(conv(ctx, in, b + "/c1", 1, 1), 0.1f);
        h = o::leaky_relu(conv(ctx, h, b + "/c2", 1, 1), 0.1f);
        Var resid = conv(ctx, h, b + "/flow", 1, 1);
        flow = compose_flows(flow, resid);
    }
    return flow;
}

std::string flow_role_name(FlowRole r) { return r == FlowRole::Warp ? "warp" : "flatten"; }

FlowNetwork FlowNetwork::create_warp(int person_channels, int clothes_channels, uint64_t seed) {
    FlowNetwork n;
    n.role = FlowRole::Warp;
    n.seed = seed;
    n.main_fpn.in_channels = clothes_channels;
    FpnArch pf;
    pf.in_channels = person_channels;
    n.person_fpn = pf;
    n.cascade.feat_channels = n.main_fpn.out_channels;
    n.cascade.cond_channels = pf.out_channels;
    Rng rng(derive_seed(seed, "warp-init"));
    add_fpn(n.params, "clothes", n.main_fpn, rng);
    add_fpn(n.params, "person", *n.person_fpn, rng);
    add_cascade(n.params, "cascade", n.cascade, rng);
    return n;
}

FlowNetwork FlowNetwork::create_flatten(uint64_t seed) {
    FlowNetwork n;
    n.role = FlowRole::Flatten;
    n.seed = seed;
    n.main_fpn.in_channels = 3;
    n.cascade.feat_channels = n.main_fpn.out_channels;
    n.cascade.cond_channels = 1;
    Rng rng(derive_seed(seed, "flatten-init"));
    add_fpn(n.params, "main", n.main_fpn, rng);
    add_cascade(n.params, "cascade", n.cascade, rng);
    return n;
}

void FlowNetwork::save(const std::filesystem::path& dir, const json& extra_meta) const {
    json arch;
    arch["role"] = flow_role_name(role);
    arch["main_fpn"] = main_fpn.to_json();
    if (person_fpn) arch["person_fpn"] = person_fpn->to_json();
    arch["cascade"] = cascade.to_json();
    json meta = extra_meta;
    meta["kind"] = "flow-network";
    meta["role"] = flow_role_name(role);
    meta["seed"] = seed;
    meta["trained"] = trained;
    save_checkpoint(dir, params, arch, meta);
}

FlowNetwork FlowNetwork::load(const std::filesystem::path& dir) {
    FlowNetwork n;
    json arch, meta;
    load_checkpoint(dir, n.params, arch, meta);
    n.role = arch.at("role").get<std::string>() == "warp" ? FlowRole::Warp : FlowRole::Flatten;
    n.main_fpn = FpnArch::from_json(arch.at("main_fpn"));
    if (arch.contains("person_fpn")) n.person_fpn = FpnArch::from_json(arch.at("person_fpn"));
    n.cascade = CascadeArch::from_json(arch.at("cascade"));
    n.seed = meta.value("seed", 0ULL);
    n.trained = meta.value("trained", false);
    return n;
}

std::vector<Tensor> downsize_mask_levels(const Tensor& m, int levels) {
    std::vector<Tensor> out;
    for (int k = 0; k < levels; ++k) out.push_back(latent::downsize_mask(m, 1 << k));
    return out;
}

WarpForward warp_network_forward(const FlowNetwork& net, Graph& g, const Tensor& person_stack,
                                 const Tensor& clothes, const Tensor& clothes_mask, bool trainable) {
    if (net.role != FlowRole::Warp) throw ArgError("warp_network_forward: wrong network role");
    if (person_stack.dim(1) != clothes.dim(1) || person_stack.dim(2) != clothes.dim(2))
        throw ShapeError("warp_network_forward: stack resolution mismatch");
    NetCtx ctx{g, net.params, trainable};
    Tensor cstack({clothes.dim(0) + 1, clothes.dim(1), clothes.dim(2)});
    std::copy(clothes.data(), clothes.data() + clothes.numel(), cstack.data());
    std::copy(clothes_mask.data(), clothes_mask.data() + clothes_mask.numel(),
              cstack.data() + clothes.numel());
    std::vector<Var> cf = fpn_encode(ctx, "clothes", net.main_fpn, g.leaf(cstack));
    std::vector<Var> pf = fpn_encode(ctx, "person", *net.person_fpn, g.leaf(person_stack));
    WarpForward out;
    out.flow = cascade_estimate(ctx, "cascade", net.cascade, cf, pf);
    out.warped = apply_flow(g.leaf(clothes), out.flow);
    Tensor mw = apply_flow(clothes_mask, out.flow.val());
    out.warped_mask = threshold(mw, 0.5f);
    return out;
}

Tensor take_off(const Tensor& tryon, const Tensor& m_C) {
    if (m_C.dim(1) != tryon.dim(1) || m_C.dim(2) != tryon.dim(2)) throw ShapeError("take_off: shape");
    Tensor out = tryon;
    int64_t hw = static_cast<int64_t>(tryon.dim(1)) * tryon.dim(2);
    for (int c = 0; c < tryon.dim(0); ++c)
        for (int64_t i = 0; i < hw; ++i) out[c * hw + i] *= m_C[i];
    return out;
}

Var take_off(Var tryon, const Tensor& m_C) {
    const Tensor& t = tryon.val();
    if (m_C.dim(1) != t.dim(1) || m_C.dim(2) != t.dim(2)) throw ShapeError("take_off: shape");
    Tensor m3({t.dim(0), t.dim(1), t.dim(2)});
    int64_t hw = static_cast<int64_t>(t.dim(1)) * t.dim(2);
    for (int c = 0; c < t.dim(0); ++c)
        std::copy(m_C.data(), m_C.data() + hw, m3.data() + c * hw);
    return o::mul(tryon, tryon.g->leaf(m3));
}

FlattenForward flatten_network_forward(const FlowNetwork& net, Graph& g, Var clothes_parsed,
                                       const std::vector<Tensor>& mask_levels, bool trainable) {
    if (net.role != FlowRole::Flatten) throw ArgError("flatten_network_forward: wrong network role");
    if (mask_levels.size() != kPyramidLevels)
        throw ArgError("flatten_network_forward: need 5 mask levels");
    NetCtx ctx{g, net.params, trainable};
    std::vector<Var> feats = fpn_encode(ctx, "main", net.main_fpn, clothes_parsed);
    std::vector<Var> conds;
    for (const Tensor& m : mask_levels) conds.push_back(g.leaf(m));
    FlattenForward out;
    out.flow = cascade_estimate(ctx, "cascade", net.cascade, feats, conds);
    out.flattened = apply_flow(clothes_parsed, out.flow);
    return out;
}

}  // namespace vton::flow
