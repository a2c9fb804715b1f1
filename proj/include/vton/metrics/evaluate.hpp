#pragma once

#include "vton/metrics/metrics.hpp"
#include "vton/sampler/sampler.hpp"
#include "vton/synth/dataset.hpp"

namespace vton::metrics {

using nlohmann::json;

enum class EvalSetting { Paired, Unpaired };
std::string eval_setting_name(EvalSetting s);
EvalSetting eval_setting_from_name(const std::string& s);

struct EvalRow {
    std::string sample_id;
    std::optional<double> ssim_v;       // paired only
    std::optional<double> masked_l1_v;  // paired only
    double consistency = 0;
};

struct EvalReport {
    EvalSetting setting = EvalSetting::Paired;
    std::vector<EvalRow> rows;
    std::optional<double> mean_ssim;
    std::optional<double> mean_masked_l1;
    std::optional<double> frechet;  // unpaired only
    double mean_consistency = 0;
    std::string config_fingerprint;

    json to_json() const;
    void save(const std::filesystem::path& json_path, const std::filesystem::path& csv_path) const;
};

struct EvalContext {
    const flow::FlowNetwork& warp;
    const latent::Autoencoder& ae;
    const diffusion::DiffusionModel& model;
    const flow::FlowNetwork& flatten;
    const diffusion::NoiseSchedule& sched;
};

EvalReport evaluate(const synth::Dataset& ds, const EvalContext& ctx, EvalSetting setting,
                    const sampler::SamplerConfig& cfg, const std::string& config_fingerprint);

// clothes-posterior vs Gaussian initialization: masked L1 of the generated
// image against the warp-network clothes over the warped mask, per unpaired pair
struct InitComparison {
    std::vector<std::string> sample_ids;
    std::vector<double> posterior_l1, gaussian_l1;
    double posterior_win_fraction = 0;
};
InitComparison compare_init_modes(const synth::Dataset& ds, const EvalContext& ctx,
                                  const sampler::SamplerConfig& base_cfg);

}  // namespace vton::metrics
