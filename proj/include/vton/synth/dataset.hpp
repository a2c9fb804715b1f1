#pragma once

#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "vton/synth/sample.hpp"

namespace vton::synth {

inline constexpr const char* kDatasetVersion = "1";

struct DatasetConfig {
    int count = 500;
    uint64_t seed = 1234;
    int canvas_h = 64;
    int canvas_w = 48;
    double train_fraction = 0.9;
    ComposeConfig compose;
    WarpGenConfig warp;
};

struct DatasetManifest {
    std::string version;
    uint64_t seed = 0;
    int count = 0;
    int canvas_h = 0, canvas_w = 0;
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    // unpaired setting: test person sample_id -> garment donor sample_id
    std::vector<std::pair<std::string, std::string>> unpaired;
    // per sample: field name -> relative path
    std::map<std::string, std::map<std::string, std::string>> records;

    nlohmann::json header_json() const;
};

// deterministically generates one sample of the dataset distribution
SamplePair make_sample(const DatasetConfig& cfg, int index);

DatasetManifest build_dataset(const DatasetConfig& cfg, const std::filesystem::path& out_dir);

class Dataset {
public:
    static Dataset open(const std::filesystem::path& dir);
    const DatasetManifest& manifest() const { return manifest_; }
    SamplePair load(const std::string& sample_id) const;
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    DatasetManifest manifest_;
};

}  // namespace vton::synth
