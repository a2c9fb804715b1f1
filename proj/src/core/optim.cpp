#include "vton/core/optim.hpp"

#include <cmath>
#include <thread>

namespace vton {

void Adam::step(ParamStore& params, const GradMap& grads, float lr) {
    ++t_;
    double b1t = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double b2t = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (const std::string& name : params.names()) {
        Tensor& p = params[name];
        auto git = grads.find(&p);
        if (git == grads.end()) continue;
        const Tensor& g = git->second;
        State& st = state_[&p];
        if (st.m.empty()) {
            st.m = Tensor(p.shape());
            st.v = Tensor(p.shape());
        }
        for (int64_t i = 0; i < p.numel(); ++i) {
            float gi = g[i];
            st.m[i] = beta1_ * st.m[i] + (1.0f - beta1_) * gi;
            st.v[i] = beta2_ * st.v[i] + (1.0f - beta2_) * gi * gi;
            float mhat = static_cast<float>(st.m[i] / b1t);
            float vhat = static_cast<float>(st.v[i] / b2t);
            p[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

std::pair<double, GradMap> run_batch(int n, int threads,
                                     const std::function<std::pair<double, GradMap>(int)>& fn) {
    std::vector<std::pair<double, GradMap>> results(static_cast<size_t>(n));
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) results[static_cast<size_t>(i)] = fn(i);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(threads));
        for (int k = 0; k < threads; ++k) {
            pool.emplace_back([&, k]() {
                for (int i = k; i < n; i += threads) results[static_cast<size_t>(i)] = fn(i);
            });
        }
        for (auto& th : pool) th.join();
    }
    double loss = 0;
    GradMap merged;
    for (int i = 0; i < n; ++i) {
        loss += results[static_cast<size_t>(i)].first;
        for (auto& [ptr, g] : results[static_cast<size_t>(i)].second) {
            auto it = merged.find(ptr);
            if (it == merged.end()) {
                merged.emplace(ptr, std::move(g));
            } else {
                Tensor& acc = it->second;
                for (int64_t j = 0; j < acc.numel(); ++j) acc[j] += g[j];
            }
        }
    }
    float inv = 1.0f / static_cast<float>(n);
    for (auto& [ptr, g] : merged)
        for (int64_t j = 0; j < g.numel(); ++j) g[j] *= inv;
    return {loss / n, std::move(merged)};
}

float lr_schedule(int64_t step, float lr, float lr0, int64_t warmup_steps, int64_t decay_start,
                  int64_t total_steps) {
    if (warmup_steps > 0 && step < warmup_steps)
        return lr0 + (lr - lr0) * static_cast<float>(step) / static_cast<float>(warmup_steps);
    if (decay_start >= 0 && total_steps > decay_start && step >= decay_start) {
        float f = 1.0f - static_cast<float>(step - decay_start) / static_cast<float>(total_steps - decay_start);
        return lr * std::max(0.0f, f);
    }
    return lr;
}

}  // namespace vton
