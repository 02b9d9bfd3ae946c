#include "d2sac/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace d2sac::nn {

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char buf[4];
    is.read(reinterpret_cast<char*>(buf), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

void put_f64(std::ostream& os, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 8);
}

double get_f64(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

std::uint32_t act_tag(Activation a) {
    switch (a) {
        case Activation::None: return 0;
        case Activation::Mish: return 1;
        case Activation::Tanh: return 2;
    }
    return 0;
}

Activation tag_act(std::uint32_t t) {
    switch (t) {
        case 0: return Activation::None;
        case 1: return Activation::Mish;
        case 2: return Activation::Tanh;
    }
    throw std::runtime_error("checkpoint: unknown activation tag");
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::vector<const DenseLayer*>& layers) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open for writing: " + path.string());
    os.write("AGOD", 4);
    put_u32(os, kCheckpointVersion);
    put_u32(os, static_cast<std::uint32_t>(layers.size()));
    for (const DenseLayer* l : layers) {
        put_u32(os, static_cast<std::uint32_t>(l->in_dim()));
        put_u32(os, static_cast<std::uint32_t>(l->out_dim()));
        put_u32(os, act_tag(l->activation));
        for (int o = 0; o < l->out_dim(); ++o)
            for (int k = 0; k < l->in_dim(); ++k) put_f64(os, l->weights.at(o, k));
        for (int o = 0; o < l->out_dim(); ++o) put_f64(os, l->biases.at(0, o));
    }
    if (!os) throw std::runtime_error("checkpoint: write failed: " + path.string());
}

std::vector<DenseLayer> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open: " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "AGOD", 4) != 0) throw std::runtime_error("checkpoint: bad magic: " + path.string());
    const std::uint32_t version = get_u32(is);
    if (version != kCheckpointVersion) throw std::runtime_error("checkpoint: unsupported version");
    const std::uint32_t count = get_u32(is);
    std::vector<DenseLayer> layers;
    layers.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t in = get_u32(is);
        const std::uint32_t out = get_u32(is);
        const Activation act = tag_act(get_u32(is));
        DenseLayer l;
        l.weights = Tensor(static_cast<int>(out), static_cast<int>(in));
        l.biases = Tensor(1, static_cast<int>(out));
        l.activation = act;
        for (std::uint32_t o = 0; o < out; ++o)
            for (std::uint32_t k = 0; k < in; ++k) l.weights.at(o, k) = get_f64(is);
        for (std::uint32_t o = 0; o < out; ++o) l.biases.at(0, o) = get_f64(is);
        l.weights.requires_grad = true;
        l.biases.requires_grad = true;
        layers.push_back(std::move(l));
        if (!is) throw std::runtime_error("checkpoint: truncated file: " + path.string());
    }
    return layers;
}

}  // namespace d2sac::nn
