#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vton/core/rng.hpp"
#include "vton/core/tensor.hpp"

namespace vton {

// Named parameter set with stable iteration order.
class ParamStore {
public:
    Tensor& add(const std::string& name, std::vector<int> shape);
    Tensor& operator[](const std::string& name);
    const Tensor& at(const std::string& name) const;
    bool has(const std::string& name) const { return t_.count(name) != 0; }
    const std::vector<std::string>& names() const { return order_; }
    size_t size() const { return order_.size(); }
    int64_t total_params() const;

    // fnv1a over names and raw bytes in registration order
    uint64_t hash() const;

    std::map<std::string, Tensor>& tensors() { return t_; }
    const std::map<std::string, Tensor>& tensors() const { return t_; }

private:
    std::vector<std::string> order_;
    std::map<std::string, Tensor> t_;
};

// init helpers
void init_kaiming(Tensor& w, Rng& rng, int fan_in);
void init_normal(Tensor& w, Rng& rng, float std);

// Checkpoint container: <dir>/arch.json, <dir>/meta.json,
// <dir>/tensors/<name>.f32 (name: '/' -> '_').
void save_checkpoint(const std::filesystem::path& dir, const ParamStore& params, const nlohmann::json& arch,
                     const nlohmann::json& meta);
void load_checkpoint(const std::filesystem::path& dir, ParamStore& params, nlohmann::json& arch,
                     nlohmann::json& meta);
nlohmann::json read_checkpoint_meta(const std::filesystem::path& dir);
bool checkpoint_exists(const std::filesystem::path& dir);

}  // namespace vton
