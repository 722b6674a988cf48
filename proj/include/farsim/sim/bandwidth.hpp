#pragma once

#include <cstdint>
#include <string>

#include "farsim/errors.hpp"
#include "farsim/sim/time.hpp"

namespace farsim {

// FIFO-served rate limiter for a single resource (a DDR channel, the
// CPU-device link, an MMIO port). Completion times are computed relative to
// the start of the current busy epoch so rounding error does not accumulate
// across back-to-back requests: a 1000-request burst sustains the configured
// rate to within 1 ns overall.
class BandwidthServer {
public:
    BandwidthServer() = default;
    BandwidthServer(std::string name, double rate_bytes_per_sec)
        : name_(std::move(name)), rate_(rate_bytes_per_sec) {}

    const std::string& name() const { return name_; }
    double rate() const { return rate_; }
    SimTime next_free() const { return next_free_; }
    std::uint64_t bytes_served() const { return bytes_served_; }

    // Service time of `bytes` starting from an idle server.
    SimTime idle_service_ns(std::uint64_t bytes) const { return offset_ns(bytes); }

    SimTime request(SimTime arrival, std::uint64_t bytes) {
        if (rate_ <= 0) throw SimError("bandwidth server " + name_ + ": rate must be > 0");
        if (arrival >= next_free_) {
            epoch_start_ = arrival;
            epoch_bytes_ = 0;
        }
        epoch_bytes_ += bytes;
        bytes_served_ += bytes;
        SimTime done = epoch_start_ + offset_ns(epoch_bytes_);
        if (done < next_free_) done = next_free_;  // zero-byte requests
        next_free_ = done;
        return done;
    }

private:
    SimTime offset_ns(std::uint64_t bytes) const {
        if (bytes == 0) return 0;
        unsigned __int128 num = static_cast<unsigned __int128>(bytes) * 1000000000ull;
        std::uint64_t den = static_cast<std::uint64_t>(rate_);
        return static_cast<SimTime>((num + den - 1) / den);
    }

    std::string name_;
    double rate_ = 1.0;
    SimTime next_free_ = 0;
    SimTime epoch_start_ = 0;
    std::uint64_t epoch_bytes_ = 0;
    std::uint64_t bytes_served_ = 0;
};

}  // namespace farsim
