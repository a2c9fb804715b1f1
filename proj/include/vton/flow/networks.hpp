#pragma once

#include <filesystem>
#include <optional>

#include "vton/core/nn.hpp"
#include "vton/flow/field.hpp"

namespace vton::flow {

using nlohmann::json;

inline constexpr int kPyramidLevels = 5;

struct FpnArch {
    int in_channels = 3;
    std::vector<int> widths = {16, 24, 32, 48, 64};  // bottom-up stage widths
    int out_channels = 16;                           // pyramid channels

    json to_json() const;
    static FpnArch from_json(const json& j);
};

struct CascadeArch {
    int feat_channels = 16;
    int cond_channels = 1;
    int hidden = 24;

    json to_json() const;
    static CascadeArch from_json(const json& j);
};

void add_fpn(ParamStore& p, const std::string& prefix, const FpnArch& arch, Rng& rng);
void add_cascade(ParamStore& p, const std::string& prefix, const CascadeArch& arch, Rng& rng);

// exactly kPyramidLevels levels, level i at canvas / 2^i
std::vector<Var> fpn_encode(const NetCtx& ctx, const std::string& prefix, const FpnArch& arch, Var input);

// Coarse-to-fine estimation: level-i flow is upsampled x2 (displacements
// doubled) and composed with the residual predicted at level i-1. Residual
// heads are zero-initialized so an untrained cascade returns the zero flow.
Var cascade_estimate(const NetCtx& ctx, const std::string& prefix, const CascadeArch& arch,
                     const std::vector<Var>& features, const std::vector<Var>& conditions);

enum class FlowRole { Warp, Flatten };
std::string flow_role_name(FlowRole r);

struct FlowNetwork {
    FlowRole role = FlowRole::Flatten;
    FpnArch main_fpn;                    // clothes stack (warp) / clothes-parsed image (flatten)
    std::optional<FpnArch> person_fpn;   // warp only
    CascadeArch cascade;
    ParamStore params;
    uint64_t seed = 0;
    bool trained = false;

    static FlowNetwork create_warp(int person_channels, int clothes_channels, uint64_t seed);
    static FlowNetwork create_flatten(uint64_t seed);
    void save(const std::filesystem::path& dir, const json& extra_meta = json::object()) const;
    static FlowNetwork load(const std::filesystem::path& dir);
};

// masks downsized to each pyramid level (level i: factor 2^i)
std::vector<Tensor> downsize_mask_levels(const Tensor& m, int levels = kPyramidLevels);

struct WarpForward {
    Var flow;    // {2,H,W}
    Var warped;  // C warped by flow
    Tensor warped_mask;  // m_cp warped and thresholded at 0.5
};
WarpForward warp_network_forward(const FlowNetwork& net, Graph& g, const Tensor& person_stack,
                                 const Tensor& clothes, const Tensor& clothes_mask, bool trainable);

// take-off step: elementwise masking with the clothes-parse mask
Tensor take_off(const Tensor& tryon, const Tensor& m_C);
Var take_off(Var tryon, const Tensor& m_C);

struct FlattenForward {
    Var flow;
    Var flattened;  // T^C warped by the flattening flow
};
FlattenForward flatten_network_forward(const FlowNetwork& net, Graph& g, Var clothes_parsed,
                                       const std::vector<Tensor>& mask_levels, bool trainable);

}  // namespace vton::flow
