#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepbsde/solver.hpp"

namespace deepbsde {

inline constexpr std::uint32_t checkpoint_format_version = 1;

/// Checkpoint layout (little-endian): magic "DBCK", version, y0, number of
/// networks (U family first), then per network the layer shapes followed by
/// all weight and bias values. Load round-trips bit-exactly.
inline std::vector<std::uint8_t> serialize_stack(const NetworkStack& stack) {
    std::vector<std::uint8_t> buf;
    detail::put_bytes(buf, "DBCK", 4);
    detail::put<std::uint32_t>(buf, checkpoint_format_version);
    detail::put<double>(buf, stack.y0.data[0]);
    detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(stack.u_nets.size()));
    const auto write_net = [&buf](const MlpParams& net) {
        detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(net.weights.size()));
        for (std::size_t l = 0; l < net.weights.size(); ++l) {
            detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(net.weights[l].rows));
            detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(net.weights[l].cols));
            for (double v : net.weights[l].data) detail::put<double>(buf, v);
            for (double v : net.biases[l].data) detail::put<double>(buf, v);
        }
    };
    for (const auto& net : stack.u_nets) write_net(net);
    for (const auto& net : stack.v_nets) write_net(net);
    return buf;
}

inline NetworkStack deserialize_stack(const std::vector<std::uint8_t>& buf) {
    if (buf.size() < 8 || std::memcmp(buf.data(), "DBCK", 4) != 0)
        throw std::runtime_error("checkpoint: bad magic");
    std::size_t pos = 4;
    const auto version = detail::take<std::uint32_t>(buf, pos);
    if (version != checkpoint_format_version)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    NetworkStack stack;
    stack.y0 = Tensor::scalar(detail::take<double>(buf, pos));
    const auto n_steps = detail::take<std::uint32_t>(buf, pos);
    const auto read_net = [&buf, &pos]() {
        MlpParams net;
        const auto layers = detail::take<std::uint32_t>(buf, pos);
        for (std::uint32_t l = 0; l < layers; ++l) {
            const int rows = static_cast<int>(detail::take<std::uint32_t>(buf, pos));
            const int cols = static_cast<int>(detail::take<std::uint32_t>(buf, pos));
            Tensor w(rows, cols);
            for (auto& v : w.data) v = detail::take<double>(buf, pos);
            Tensor b(1, cols);
            for (auto& v : b.data) v = detail::take<double>(buf, pos);
            net.weights.push_back(std::move(w));
            net.biases.push_back(std::move(b));
        }
        return net;
    };
    for (std::uint32_t n = 0; n < n_steps; ++n) stack.u_nets.push_back(read_net());
    for (std::uint32_t n = 0; n < n_steps; ++n) stack.v_nets.push_back(read_net());
    return stack;
}

inline void save_stack(const NetworkStack& stack, const std::string& path) {
    const auto buf = serialize_stack(stack);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

inline NetworkStack load_stack(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
    return deserialize_stack(buf);
}

} // namespace deepbsde
