#pragma once

#include <functional>
#include <unordered_map>

#include "vton/core/checkpoint.hpp"
#include "vton/core/graph.hpp"

namespace vton {

using GradMap = std::unordered_map<const Tensor*, Tensor>;

class Adam {
public:
    explicit Adam(float beta1 = 0.9f, float beta2 = 0.999f, float eps = 1e-8f)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(ParamStore& params, const GradMap& grads, float lr);
    int64_t steps_taken() const { return t_; }

private:
    struct State {
        Tensor m, v;
    };
    std::unordered_map<const Tensor*, State> state_;
    float beta1_, beta2_, eps_;
    int64_t t_ = 0;
};

// Runs fn(i) for i in [0,n) across threads; merges per-sample gradient maps in
// index order so results do not depend on the thread count. Returns the mean
// loss and gradients scaled by 1/n.
std::pair<double, GradMap> run_batch(int n, int threads,
                                     const std::function<std::pair<double, GradMap>(int)>& fn);

// piecewise-linear learning rate: warmup from lr0 to lr over warmup_steps,
// then optional linear decay to 0 between decay_start and total_steps.
float lr_schedule(int64_t step, float lr, float lr0, int64_t warmup_steps, int64_t decay_start,
                  int64_t total_steps);

}  // namespace vton
