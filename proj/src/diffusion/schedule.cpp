#include "vton/diffusion/schedule.hpp"

#include <cmath>

namespace vton::diffusion {

std::string schedule_kind_name(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::Linear: return "linear";
        case ScheduleKind::Cosine: return "cosine";
        case ScheduleKind::Constant: return "constant";
    }
    throw ArgError("schedule_kind_name");
}

ScheduleKind schedule_kind_from_name(const std::string& s) {
    if (s == "linear") return ScheduleKind::Linear;
    if (s == "cosine") return ScheduleKind::Cosine;
    if (s == "constant") return ScheduleKind::Constant;
    throw ArgError("unknown schedule kind: " + s);
}

void NoiseSchedule::validate() const {
    if (T < 1) throw ArgError("NoiseSchedule: T < 1");
    if (static_cast<int>(beta.size()) != T || static_cast<int>(alpha_bar.size()) != T + 1)
        throw ShapeError("NoiseSchedule: inconsistent lengths");
    if (alpha_bar[0] != 1.0) throw NumericalError("NoiseSchedule: alpha_bar[0] != 1");
    for (int t = 1; t <= T; ++t) {
        double b = beta[static_cast<size_t>(t) - 1];
        if (!(b > 0.0 && b < 1.0)) throw NumericalError("NoiseSchedule: beta outside (0,1)");
        if (!(alpha_bar[static_cast<size_t>(t)] < alpha_bar[static_cast<size_t>(t) - 1]))
            throw NumericalError("NoiseSchedule: alpha_bar not strictly decreasing");
    }
}

static NoiseSchedule from_betas(ScheduleKind kind, std::vector<double> beta) {
    NoiseSchedule s;
    s.kind = kind;
    s.T = static_cast<int>(beta.size());
    s.beta = std::move(beta);
    s.alpha_bar.assign(static_cast<size_t>(s.T) + 1, 1.0);
    for (int t = 1; t <= s.T; ++t)
        s.alpha_bar[static_cast<size_t>(t)] =
            s.alpha_bar[static_cast<size_t>(t) - 1] * (1.0 - s.beta[static_cast<size_t>(t) - 1]);
    s.validate();
    return s;
}

NoiseSchedule make_schedule(ScheduleKind kind, int T) {
    if (T < 1) throw ArgError("make_schedule: T < 1");
    std::vector<double> beta(static_cast<size_t>(T));
    if (kind == ScheduleKind::Linear) {
        const double b0 = 1e-4, b1 = 0.02;
        for (int t = 0; t < T; ++t)
            beta[static_cast<size_t>(t)] = T == 1 ? b0 : b0 + (b1 - b0) * t / (T - 1);
    } else if (kind == ScheduleKind::Cosine) {
        const double s = 0.008;
        auto f = [&](double t) {
            double v = std::cos((t / T + s) / (1.0 + s) * M_PI / 2.0);
            return v * v;
        };
        double f0 = f(0.0);
        double prev = 1.0;
        for (int t = 1; t <= T; ++t) {
            double ab = f(static_cast<double>(t)) / f0;
            double b = 1.0 - ab / prev;
            beta[static_cast<size_t>(t) - 1] = std::min(b, 0.999);
            prev *= 1.0 - beta[static_cast<size_t>(t) - 1];
        }
    } else {
        throw ArgError("make_schedule: use make_constant_schedule for the constant hook");
    }
    return from_betas(kind, std::move(beta));
}

NoiseSchedule make_constant_schedule(double beta, int T) {
    if (T < 1) throw ArgError("make_constant_schedule: T < 1");
    return from_betas(ScheduleKind::Constant, std::vector<double>(static_cast<size_t>(T), beta));
}

Tensor forward_diffuse(const Tensor& z0, int t, const Tensor& eps, const NoiseSchedule& sched) {
    if (t < 1 || t > sched.T) throw ArgError("forward_diffuse: t out of range");
    check_same_shape(z0, eps, "forward_diffuse");
    double ab = sched.ab(t);
    float sa = static_cast<float>(std::sqrt(ab));
    float sb = static_cast<float>(std::sqrt(1.0 - ab));
    Tensor out = z0;
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = sa * z0[i] + sb * eps[i];
    return out;
}

}  // namespace vton::diffusion
