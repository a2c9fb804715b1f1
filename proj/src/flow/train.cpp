#include "vton/flow/train.hpp"

#include <cmath>

#include "vton/core/optim.hpp"

namespace vton::flow {

namespace o = vton::ops;

WarpItem make_warp_item(const synth::SamplePair& s) {
    WarpItem it;
    int H = s.P.dim(1), W = s.P.dim(2);
    int pc = s.pose_map.dim(0);
    it.person_stack = Tensor({1 + pc, H, W});
    std::copy(s.m.data(), s.m.data() + s.m.numel(), it.person_stack.data());
    std::copy(s.pose_map.data(), s.pose_map.data() + s.pose_map.numel(),
              it.person_stack.data() + s.m.numel());
    it.clothes = s.C;
    it.clothes_mask = s.m_cp;
    it.target = s.C_w_gt;
    return it;
}

FlattenItem make_flatten_item(const synth::SamplePair& s) {
    FlattenItem it;
    it.clothes_parsed = take_off(s.T, s.m_C);
    it.mask_levels = downsize_mask_levels(s.m_cp);
    it.target = s.C;
    it.target_mask = s.m_cp;
    return it;
}

latent::TrainCurve train_flow_network(FlowNetwork& net, const std::vector<synth::SamplePair>& samples,
                                      const latent::Autoencoder& ae, const FlowTrainConfig& cfg) {
    if (samples.empty()) throw ArgError("train_flow_network: empty dataset");
    FlowLossWeights weights =
        cfg.weights.value_or(net.role == FlowRole::Warp ? kWarpWeights : kFlattenWeights);

    std::vector<WarpItem> warp_items;
    std::vector<FlattenItem> flat_items;
    for (const auto& s : samples) {
        if (net.role == FlowRole::Warp)
            warp_items.push_back(make_warp_item(s));
        else
            flat_items.push_back(make_flatten_item(s));
    }

    Adam adam;
    latent::TrainCurve curve;
    int n = static_cast<int>(samples.size());
    int steps_per_epoch = std::max(1, n / cfg.batch);
    int64_t total_steps = static_cast<int64_t>(cfg.epochs) * steps_per_epoch;
    int64_t decay_start = static_cast<int64_t>(cfg.decay_start_frac * static_cast<double>(total_steps));
    int64_t step = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // seeded shuffle
        std::vector<int> order(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
        Rng shuffle_rng(derive_seed(cfg.seed, "flow-epoch", static_cast<uint64_t>(epoch)));
        for (int i = n - 1; i > 0; --i)
            std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(shuffle_rng.uniform_int(0, i))]);

        for (int bs = 0; bs < steps_per_epoch; ++bs) {
            int b0 = bs * cfg.batch;
            int bsize = std::min(cfg.batch, n - b0);
            auto one = [&](int bi) -> std::pair<double, GradMap> {
                int idx = order[static_cast<size_t>(b0 + bi)];
                Graph g;
                Var pred, flowv, target;
                if (net.role == FlowRole::Warp) {
                    const WarpItem& it = warp_items[static_cast<size_t>(idx)];
                    WarpForward f = warp_network_forward(net, g, it.person_stack, it.clothes,
                                                         it.clothes_mask, /*trainable=*/true);
                    pred = f.warped;
                    flowv = f.flow;
                    target = g.leaf(it.target);
                } else {
                    const FlattenItem& it = flat_items[static_cast<size_t>(idx)];
                    FlattenForward f =
                        flatten_network_forward(net, g, g.leaf(it.clothes_parsed), it.mask_levels, true);
                    pred = f.flattened;
                    flowv = f.flow;
                    target = g.leaf(it.target);
                }
                auto per_fn = [&](Var img) { return latent::perceptual_features(ae, g, img); };
                FlowLossParts parts = flow_loss_components(pred, target, flowv, per_fn);
                Var loss = aggregate_flow_loss(parts, weights);
                g.backward(loss);
                return {loss.val()[0], g.param_grads()};
            };
            auto [loss, grads] = run_batch(bsize, cfg.threads, one);
            if (!std::isfinite(loss))
                throw NumericalError("train_flow_network: NaN loss at step " + std::to_string(step));
            float lr = lr_schedule(step, cfg.lr, cfg.lr, 0, decay_start, total_steps);
            adam.step(net.params, grads, lr);
            curve.steps.push_back(static_cast<double>(step));
            curve.loss.push_back(loss);
            ++step;
        }
    }
    net.trained = true;
    return curve;
}

}  // namespace vton::flow
