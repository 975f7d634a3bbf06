#include "fennm/diffnet.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace fennm {
namespace {

constexpr char kMagic[8] = {'F', 'E', 'N', 'N', 'M', 'N', 'E', 'T'};

template <typename T>
void put_le(std::ostream& out, T value)
{
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(std::begin(bytes), std::end(bytes));
    }
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in)
{
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
        throw std::runtime_error("read_checkpoint: truncated stream");
    }
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(std::begin(bytes), std::end(bytes));
    }
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

} // namespace

Activation parse_activation(const std::string& name)
{
    if (name == "tanh") {
        return Activation::Tanh;
    }
    if (name == "sin") {
        return Activation::Sin;
    }
    throw std::invalid_argument("unknown activation '" + name + "'");
}

std::string to_string(Activation a)
{
    return a == Activation::Tanh ? "tanh" : "sin";
}

void write_checkpoint(std::ostream& out, const Net& net)
{
    const NetConfig& cfg = net.config();
    out.write(kMagic, sizeof(kMagic));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.layers));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.width));
    put_le<std::uint32_t>(out, cfg.activation == Activation::Tanh ? 0U : 1U);
    put_le<std::uint32_t>(out, 0U);
    put_le<std::uint64_t>(out, cfg.seed);
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(net.dof()));
    for (Eigen::Index i = 0; i < net.dof(); ++i) {
        put_le<double>(out, net.parameters()[i]);
    }
}

Net read_checkpoint(std::istream& in)
{
    char magic[sizeof(kMagic)];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("read_checkpoint: bad magic");
    }
    NetConfig cfg;
    cfg.layers = static_cast<int>(get_le<std::uint32_t>(in));
    cfg.width = static_cast<int>(get_le<std::uint32_t>(in));
    const auto act = get_le<std::uint32_t>(in);
    if (act > 1) {
        throw std::runtime_error("read_checkpoint: unknown activation code");
    }
    cfg.activation = act == 0 ? Activation::Tanh : Activation::Sin;
    (void)get_le<std::uint32_t>(in);
    cfg.seed = get_le<std::uint64_t>(in);
    const auto dof = get_le<std::uint64_t>(in);
    Net net(cfg);
    if (dof != static_cast<std::uint64_t>(net.dof())) {
        throw std::runtime_error("read_checkpoint: parameter count does not match header");
    }
    Net::Vector p(net.dof());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        p[i] = get_le<double>(in);
    }
    net.set_parameters(p);
    return net;
}

void save_checkpoint(const std::string& path, const Net& net)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("save_checkpoint: cannot open " + path);
    }
    write_checkpoint(out, net);
}

Net load_checkpoint(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("load_checkpoint: cannot open " + path);
    }
    return read_checkpoint(in);
}

} // namespace fennm
