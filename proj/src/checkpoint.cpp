#include "ikami/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "ikami/errors.hpp"

namespace ikami {

namespace {
constexpr char kMagic[4] = {'I', 'K', 'C', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ParseError("truncated checkpoint");
    return v;
}
}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& store, const nlohmann::json& sidecar) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint: " + path);
    out.write(kMagic, 4);
    write_pod(out, kVersion);
    write_pod(out, static_cast<std::uint64_t>(store.params().size()));
    for (const auto& [name, tensor] : store.params()) {
        write_pod(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod(out, static_cast<std::uint32_t>(tensor.shape().size()));
        for (auto d : tensor.shape()) write_pod(out, static_cast<std::int64_t>(d));
        out.write(reinterpret_cast<const char*>(tensor.data()),
                  static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(tensor.numel())));
    }
    if (!out) throw Error("checkpoint write failed: " + path);

    std::ofstream side(path + ".json");
    if (!side) throw Error("cannot write checkpoint sidecar: " + path + ".json");
    side << sidecar.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw ParseError("not an ikami checkpoint: " + path);
    if (read_pod<std::uint32_t>(in) != kVersion) throw ParseError("unsupported checkpoint version");

    Checkpoint ckpt;
    const auto count = read_pod<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto name_len = read_pod<std::uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const auto ndim = read_pod<std::uint32_t>(in);
        std::vector<std::int64_t> shape(ndim);
        std::int64_t numel = 1;
        for (auto& d : shape) {
            d = read_pod<std::int64_t>(in);
            numel *= d;
        }
        std::vector<double> data(static_cast<std::size_t>(numel));
        in.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(sizeof(double) * data.size()));
        if (!in) throw ParseError("truncated checkpoint tensor: " + name);
        ckpt.store.add(name, Tensor(std::move(shape), std::move(data)));
    }

    std::ifstream side(path + ".json");
    if (side) {
        try {
            side >> ckpt.sidecar;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("malformed checkpoint sidecar: " + std::string(e.what()));
        }
    }
    return ckpt;
}

}  // namespace ikami
