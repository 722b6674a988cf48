#pragma once

#include <cstdint>
#include <string_view>

#include "farsim/util.hpp"

namespace farsim {

// Counter-based generator: the n-th output is a pure function of
// (seed, stream_id, n), so replay and parallel stream splitting need no
// shared state. The mixer is the splitmix64 finalizer applied twice.
class RngStream {
public:
    RngStream() = default;
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id) {}

    // Stable derivation of a stream id from (workload, role) labels.
    static RngStream derive(std::uint64_t seed, std::string_view workload,
                            std::string_view role) {
        std::uint64_t sid = fnv1a(role, fnv1a(workload));
        return RngStream(seed, sid);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64() { return at(counter_++); }

    // Output for an explicit counter value, without advancing.
    std::uint64_t at(std::uint64_t n) const {
        std::uint64_t key = mix(seed_ + 0x9e3779b97f4a7c15ull * (stream_id_ + 1));
        return mix(key ^ mix(n + 0x632be59bd9b4e019ull));
    }

    // Uniform in [0, bound) via widening multiply; bound > 0.
    std::uint64_t next_below(std::uint64_t bound) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
    }

    double next_double() {  // [0, 1)
        return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_ = 0;
    std::uint64_t stream_id_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace farsim
