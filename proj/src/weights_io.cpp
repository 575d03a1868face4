#include "lwcnn/weights_io.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

namespace lwcnn {

namespace {

void put_u64(std::vector<char> &out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

std::uint64_t get_u64(const unsigned char *p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    }
    return v;
}

[[noreturn]] void fail(const std::filesystem::path &path, const std::string &what) {
    throw std::runtime_error("weights file " + path.string() + ": " + what);
}

}  // namespace

void save_weights(const Network<float> &network, const std::filesystem::path &path) {
    const std::string config = nlohmann::json(network.config()).dump();
    std::vector<char> buf(kWeightsMagic.begin(), kWeightsMagic.end());
    put_u64(buf, config.size());
    buf.insert(buf.end(), config.begin(), config.end());
    for (const auto *p : network.parameters()) {
        for (float v : p->values()) {
            const auto bits = std::bit_cast<std::uint32_t>(v);
            for (int i = 0; i < 4; ++i) {
                buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
            }
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(path, "cannot open for writing");
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) {
        fail(path, "write failed");
    }
}

Network<float> load_weights(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(path, "cannot open for reading");
    }
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    const std::size_t header = kWeightsMagic.size() + 8;
    if (bytes.size() < kWeightsMagic.size() ||
        !std::equal(kWeightsMagic.begin(), kWeightsMagic.end(), bytes.begin())) {
        fail(path, "bad magic (expected \"LWCNN1\")");
    }
    if (bytes.size() < header) {
        fail(path, "truncated header: expected at least " + std::to_string(header) + " bytes, got " +
                       std::to_string(bytes.size()));
    }
    const std::uint64_t config_len = get_u64(bytes.data() + kWeightsMagic.size());
    if (bytes.size() - header < config_len) {
        fail(path, "truncated config: expected " + std::to_string(header + config_len) + " bytes, got " +
                       std::to_string(bytes.size()));
    }
    NetworkConfig config;
    try {
        const std::string text(bytes.begin() + header, bytes.begin() + header + config_len);
        config = nlohmann::json::parse(text).get<NetworkConfig>();
        config.validate();
    } catch (const std::exception &e) {
        fail(path, std::string("invalid config: ") + e.what());
    }

    const std::size_t expected = header + config_len + 4 * param_count(config);
    if (bytes.size() < expected) {
        fail(path, "truncated payload: expected " + std::to_string(expected) + " bytes, got " +
                       std::to_string(bytes.size()));
    }
    if (bytes.size() > expected) {
        fail(path, "payload length mismatch: config implies " + std::to_string(expected) + " bytes, file has " +
                       std::to_string(bytes.size()));
    }

    Network<float> network(config, 0);
    const unsigned char *p = bytes.data() + header + config_len;
    for (auto *tensor : network.parameters()) {
        for (float &v : tensor->values()) {
            const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
                                       static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
            v = std::bit_cast<float>(bits);
            p += 4;
        }
    }
    return network;
}

}  // namespace lwcnn
