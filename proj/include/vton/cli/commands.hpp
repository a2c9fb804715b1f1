#pragma once

#include <map>
#include <optional>

#include "vton/cli/config.hpp"
#include "vton/diffusion/train.hpp"
#include "vton/metrics/evaluate.hpp"

namespace vton::cli {

namespace fs = std::filesystem;

// canonical artifact locations under the output root
struct Paths {
    fs::path root;
    fs::path dataset() const { return root / "dataset"; }
    fs::path ae_ckpt() const { return root / "ckpt" / "autoencoder"; }
    fs::path warp_ckpt() const { return root / "ckpt" / "warp"; }
    fs::path flatten_ckpt() const { return root / "ckpt" / "flatten"; }
    fs::path diffusion_ckpt() const { return root / "ckpt" / "diffusion"; }
    fs::path curves() const { return root / "curves"; }
    fs::path samples() const { return root / "samples"; }
    fs::path reports() const { return root / "reports"; }
    fs::path ablation() const { return root / "ablation"; }
};

// string flags from the command line (--data, --out, --person, ...)
using Flags = std::map<std::string, std::string>;

int cmd_gen_data(const RunConfig& cfg, const Flags& flags);
int cmd_train_autoencoder(const RunConfig& cfg, const Flags& flags);
int cmd_train_warp(const RunConfig& cfg, const Flags& flags);
int cmd_train_flatten(const RunConfig& cfg, const Flags& flags);
int cmd_train_diffusion(const RunConfig& cfg, const Flags& flags);
int cmd_sample(const RunConfig& cfg, const Flags& flags);
int cmd_eval(const RunConfig& cfg, const Flags& flags);
int cmd_ablate(const RunConfig& cfg, const Flags& flags);

// shared helpers (also used by the acceptance suite)
synth::DatasetConfig dataset_config(const RunConfig& cfg);
diffusion::DiffusionTrainConfig diffusion_train_config(const RunConfig& cfg);
sampler::SamplerConfig sampler_config(const RunConfig& cfg);
diffusion::NoiseSchedule schedule_from(const RunConfig& cfg);
std::vector<synth::SamplePair> load_split(const synth::Dataset& ds, bool train);

int exit_code_for(const std::exception& e);

}  // namespace vton::cli
