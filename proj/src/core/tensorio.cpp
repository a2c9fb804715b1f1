#include "vton/core/tensorio.hpp"

#include <bit>
#include <fstream>

#include <nlohmann/json.hpp>

static_assert(std::endian::native == std::endian::little, "little-endian host required");

namespace vton {

using nlohmann::json;

void write_tensor(const std::filesystem::path& path, const Tensor& t, const std::string& field) {
    json hdr;
    hdr["dtype"] = "float32";
    hdr["shape"] = t.shape();
    hdr["field"] = field;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("write_tensor: cannot open " + path.string());
    f << hdr.dump() << '\n';
    f.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.numel() * 4));
    if (!f) throw IoError("write_tensor: write failed " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path, std::string* field_out) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("read_tensor: cannot open " + path.string());
    std::string line;
    if (!std::getline(f, line)) throw IoError("read_tensor: missing header " + path.string());
    json hdr = json::parse(line);
    if (hdr.at("dtype").get<std::string>() != "float32")
        throw IoError("read_tensor: unsupported dtype in " + path.string());
    std::vector<int> shape = hdr.at("shape").get<std::vector<int>>();
    Tensor t(shape);
    f.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.numel() * 4));
    if (f.gcount() != static_cast<std::streamsize>(t.numel() * 4))
        throw IoError("read_tensor: truncated data " + path.string());
    if (field_out && hdr.contains("field")) *field_out = hdr["field"].get<std::string>();
    return t;
}

}  // namespace vton
