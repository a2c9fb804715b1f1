#pragma once

#include <functional>

#include "vton/core/ops.hpp"

namespace vton::flow {

// Frozen feature extractor used by the perceptual term; returns feature grids
// at several scales for one image Var.
using PerceptualFn = std::function<std::vector<Var>(Var)>;

// mean |first-order finite differences| of the flow, both axes pooled
Var flow_tv(Var flowfield);
// mean squared second-order finite differences, both axes pooled
Var flow_second(Var flowfield);

struct FlowLossParts {
    Var l1, per, sec, tv;
};

// L1 and perceptual on (pred, target) images; smoothness terms on the flow.
FlowLossParts flow_loss_components(Var pred, Var target, Var flowfield, const PerceptualFn& perceptual);

struct FlowLossWeights {
    float per, sec, tv;
};

inline constexpr FlowLossWeights kFlattenWeights{0.1f, 10.0f, 0.01f};
inline constexpr FlowLossWeights kWarpWeights{0.2f, 0.01f, 6.0f};

Var aggregate_flow_loss(const FlowLossParts& parts, const FlowLossWeights& w);

// scalar forms of the same aggregations
double aggregate_flat_loss(double l1, double per, double sec, double tv,
                           const FlowLossWeights& w = kFlattenWeights);
double aggregate_warp_loss(double l1, double per, double sec, double tv,
                           const FlowLossWeights& w = kWarpWeights);

}  // namespace vton::flow
