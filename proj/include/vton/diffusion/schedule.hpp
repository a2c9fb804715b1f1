#pragma once

#include <string>
#include <vector>

#include "vton/core/tensor.hpp"

namespace vton::diffusion {

enum class ScheduleKind { Linear, Cosine, Constant };
std::string schedule_kind_name(ScheduleKind k);
ScheduleKind schedule_kind_from_name(const std::string& s);

struct NoiseSchedule {
    ScheduleKind kind = ScheduleKind::Linear;
    int T = 0;
    std::vector<double> beta;       // beta[t-1], t = 1..T
    std::vector<double> alpha_bar;  // alpha_bar[t], t = 0..T, alpha_bar[0] = 1

    double ab(int t) const {
        if (t < 0 || t > T) throw ArgError("NoiseSchedule: t out of range");
        return alpha_bar[static_cast<size_t>(t)];
    }
    void validate() const;
};

NoiseSchedule make_schedule(ScheduleKind kind, int T);
// test hook: constant beta
NoiseSchedule make_constant_schedule(double beta, int T);

// z_t = sqrt(ab_t) z0 + sqrt(1-ab_t) eps, 1 <= t <= T
Tensor forward_diffuse(const Tensor& z0, int t, const Tensor& eps, const NoiseSchedule& sched);

}  // namespace vton::diffusion
