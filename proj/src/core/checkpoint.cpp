#include "vton/core/checkpoint.hpp"

#include <cmath>
#include <fstream>

#include "vton/core/tensorio.hpp"

namespace vton {

using nlohmann::json;
namespace fs = std::filesystem;

Tensor& ParamStore::add(const std::string& name, std::vector<int> shape) {
    if (t_.count(name)) throw ArgError("ParamStore: duplicate name " + name);
    order_.push_back(name);
    return t_.emplace(name, Tensor(std::move(shape))).first->second;
}

Tensor& ParamStore::operator[](const std::string& name) {
    auto it = t_.find(name);
    if (it == t_.end()) throw ArgError("ParamStore: unknown name " + name);
    return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
    auto it = t_.find(name);
    if (it == t_.end()) throw ArgError("ParamStore: unknown name " + name);
    return it->second;
}

int64_t ParamStore::total_params() const {
    int64_t n = 0;
    for (const auto& [k, v] : t_) n += v.numel();
    return n;
}

uint64_t ParamStore::hash() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const std::string& name : order_) {
        h = fnv1a64_str(name, h);
        const Tensor& t = t_.at(name);
        h = fnv1a64(t.data(), static_cast<size_t>(t.numel()) * 4, h);
    }
    return h;
}

void init_kaiming(Tensor& w, Rng& rng, int fan_in) {
    float std = std::sqrt(2.0f / static_cast<float>(fan_in));
    for (int64_t i = 0; i < w.numel(); ++i) w[i] = std * rng.normal();
}

void init_normal(Tensor& w, Rng& rng, float std) {
    for (int64_t i = 0; i < w.numel(); ++i) w[i] = std * rng.normal();
}

static std::string mangle(const std::string& name) {
    std::string s = name;
    for (char& c : s)
        if (c == '/') c = '_';
    return s;
}

void save_checkpoint(const fs::path& dir, const ParamStore& params, const json& arch, const json& meta) {
    std::error_code ec;
    fs::create_directories(dir / "tensors", ec);
    if (ec) throw IoError("save_checkpoint: cannot create " + dir.string());
    {
        std::ofstream f(dir / "arch.json");
        f << arch.dump(2) << '\n';
    }
    json m = meta;
    json index = json::array();
    for (const std::string& name : params.names()) index.push_back(name);
    m["tensors"] = index;
    {
        std::ofstream f(dir / "meta.json");
        f << m.dump(2) << '\n';
    }
    for (const std::string& name : params.names())
        write_tensor(dir / "tensors" / (mangle(name) + ".f32"), params.at(name), name);
}

void load_checkpoint(const fs::path& dir, ParamStore& params, json& arch, json& meta) {
    if (!checkpoint_exists(dir)) throw DependencyError("checkpoint not found: " + dir.string());
    {
        std::ifstream f(dir / "arch.json");
        f >> arch;
    }
    {
        std::ifstream f(dir / "meta.json");
        f >> meta;
    }
    for (const auto& nj : meta.at("tensors")) {
        std::string name = nj.get<std::string>();
        Tensor t = read_tensor(dir / "tensors" / (mangle(name) + ".f32"));
        if (params.has(name)) {
            Tensor& dst = params[name];
            check_same_shape(dst, t, "load_checkpoint");
            dst = std::move(t);
        } else {
            params.add(name, t.shape()) = std::move(t);
        }
    }
}

json read_checkpoint_meta(const fs::path& dir) {
    if (!checkpoint_exists(dir)) throw DependencyError("checkpoint not found: " + dir.string());
    json meta;
    std::ifstream f(dir / "meta.json");
    f >> meta;
    return meta;
}

bool checkpoint_exists(const fs::path& dir) {
    return fs::exists(dir / "meta.json") && fs::exists(dir / "arch.json");
}

}  // namespace vton
