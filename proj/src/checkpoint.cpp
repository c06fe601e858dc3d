#include "tvnet/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <set>

namespace tvnet::nn {

namespace {

constexpr char kMagic[4] = {'T', 'V', 'N', 'C'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(os, bits);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    require(bool(is), "checkpoint: truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    require(bool(is), "checkpoint: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double read_f64(std::istream& is) {
    std::uint64_t bits = read_u64(is);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParameterSet& params) {
    std::ofstream os(path, std::ios::binary);
    require(bool(os), "checkpoint: cannot open " + path + " for writing");
    os.write(kMagic, 4);
    write_u32(os, kVersion);
    for (const auto& name : params.names()) {
        const Tensor& t = params.at(name);
        write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u64(os, t.shape().size());
        for (int d : t.shape()) write_u64(os, static_cast<std::uint64_t>(d));
        for (real v : t.values()) write_f64(os, static_cast<double>(v));
    }
    require(bool(os), "checkpoint: write failed for " + path);
}

void load_checkpoint(const std::string& path, ParameterSet& params) {
    std::ifstream is(path, std::ios::binary);
    require(bool(is), "checkpoint: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    require(bool(is) && std::memcmp(magic, kMagic, 4) == 0,
            "checkpoint: " + path + " is not a TVNC file");
    std::uint32_t version = read_u32(is);
    require(version == kVersion, "checkpoint: unsupported version " + std::to_string(version));

    std::set<std::string> seen;
    while (true) {
        is.peek();
        if (is.eof()) break;
        std::uint32_t name_len = read_u32(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        require(bool(is), "checkpoint: truncated name");
        std::uint64_t rank = read_u64(is);
        require(rank <= 8, "checkpoint: implausible rank");
        std::vector<int> shape;
        std::size_t count = 1;
        for (std::uint64_t i = 0; i < rank; ++i) {
            std::uint64_t d = read_u64(is);
            shape.push_back(static_cast<int>(d));
            count *= static_cast<std::size_t>(d);
        }
        Tensor& t = params.at(name);
        require(t.shape() == shape,
                "checkpoint: shape mismatch for " + name +
                    " (model configuration differs from the checkpoint)");
        auto& vals = t.values();
        for (std::size_t i = 0; i < count; ++i) {
            double v = read_f64(is);
            require(std::isfinite(v), "checkpoint: non-finite value in " + name);
            vals[i] = static_cast<real>(v);
        }
        seen.insert(name);
    }
    require(seen.size() == params.size(),
            "checkpoint: " + path + " is missing parameters (" + std::to_string(seen.size()) +
                " of " + std::to_string(params.size()) + ")");
}

}  // namespace tvnet::nn
