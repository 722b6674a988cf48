#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

#include "farsim/errors.hpp"

namespace farsim {

// Message framing for graph shipping: a record header (u, count) followed by
// up to 30 32-bit neighbor ids per 128-byte line. Two line bytes are reserved
// for the pipe's flag and length.
struct PackSchema {
    unsigned id_bits = 32;
    std::size_t line_payload = 126;

    std::size_t header_bytes() const { return 6; }  // u32 id + u16 count
    std::size_t ids_per_line() const { return (line_payload - header_bytes()) / 4; }
};

inline std::vector<std::vector<std::uint8_t>> pack_messages(
    std::uint32_t u, std::span<const std::uint32_t> neighbors, const PackSchema& schema) {
    if (schema.id_bits < 32) {
        std::uint64_t limit = 1ull << schema.id_bits;
        if (u >= limit) throw EncodeError("record id exceeds schema width");
        for (std::uint32_t v : neighbors)
            if (v >= limit) throw EncodeError("neighbor id exceeds schema width");
    }
    std::vector<std::vector<std::uint8_t>> lines;
    std::size_t cap = schema.ids_per_line();
    for (std::size_t off = 0; off < neighbors.size(); off += cap) {
        std::size_t n = std::min(cap, neighbors.size() - off);
        std::vector<std::uint8_t> line(schema.header_bytes() + n * 4);
        std::memcpy(line.data(), &u, 4);
        std::uint16_t count = static_cast<std::uint16_t>(n);
        std::memcpy(line.data() + 4, &count, 2);
        std::memcpy(line.data() + 6, neighbors.data() + off, n * 4);
        lines.push_back(std::move(line));
    }
    return lines;
}

struct UnpackedRecord {
    std::uint32_t u = 0;
    std::vector<std::uint32_t> neighbors;
};

inline UnpackedRecord unpack_message(std::span<const std::uint8_t> payload,
                                     const PackSchema& schema) {
    UnpackedRecord r;
    if (payload.size() < schema.header_bytes()) throw EncodeError("short message");
    std::memcpy(&r.u, payload.data(), 4);
    std::uint16_t count;
    std::memcpy(&count, payload.data() + 4, 2);
    if (payload.size() < schema.header_bytes() + count * 4ull)
        throw EncodeError("message truncated");
    r.neighbors.resize(count);
    std::memcpy(r.neighbors.data(), payload.data() + 6, count * 4ull);
    return r;
}

}  // namespace farsim
