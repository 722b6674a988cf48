#pragma once

#include <cstdint>

#include "farsim/config.hpp"
#include "farsim/errors.hpp"

namespace farsim {

// Latency, bandwidth, frequency and cache geometry. Defaults match the
// calibration targets; everything is overridable through config keys.
struct MemParams {
    std::uint64_t line_bytes = 128;
    std::uint64_t internal_latency_ns = 238;   // MCC -> far DRAM, idle
    std::uint64_t external_latency_ns = 715;   // CPU -> far DRAM, idle
    double internal_bw = 17.5e9;               // bytes/s, all channels
    double external_bw = 9.1e9;                // bytes/s, CPU link
    std::uint64_t local_latency_ns = 100;      // local DRAM fill after LLC miss
    std::uint64_t llc_hit_ns = 30;
    std::uint64_t ddr_channels = 2;
    std::uint64_t llc_bytes = 16ull << 20;
    std::uint64_t llc_ways = 16;
    std::uint64_t far_bytes = 64ull << 20;
    std::uint64_t local_bytes = 64ull << 20;
    // Scratchpad window path: one-way latency plus link serialization.
    std::uint64_t spad_oneway_ns = 500;
    // Hardware notifier delivery delay (raise -> visible to the core).
    std::uint64_t notify_delay_ns = 100;

    double cpu_freq_hz = 2e9;
    std::uint64_t cpu_mlp = 8;
    std::uint64_t cpu_flush_ns = 30;      // flush instruction issue cost
    std::uint64_t cpu_inval_ns = 10;

    double mcc_freq_hz = 300e6;

    static MemParams from_config(const Config& c) {
        MemParams p;
        p.line_bytes = c.get_u64("mem.line_bytes", p.line_bytes);
        p.internal_latency_ns = c.get_u64("mem.internal_latency_ns", p.internal_latency_ns);
        p.external_latency_ns = c.get_u64("mem.external_latency_ns", p.external_latency_ns);
        p.internal_bw = c.get_double("mem.internal_bw", p.internal_bw);
        p.external_bw = c.get_double("mem.external_bw", p.external_bw);
        p.local_latency_ns = c.get_u64("mem.local_latency_ns", p.local_latency_ns);
        p.llc_hit_ns = c.get_u64("cpu.llc_hit_ns", p.llc_hit_ns);
        p.ddr_channels = c.get_u64("mem.ddr_channels", p.ddr_channels);
        p.llc_bytes = c.get_u64("mem.llc_bytes", p.llc_bytes);
        p.llc_ways = c.get_u64("mem.llc_ways", p.llc_ways);
        p.far_bytes = c.get_u64("mem.far_bytes", p.far_bytes);
        p.local_bytes = c.get_u64("mem.local_bytes", p.local_bytes);
        p.spad_oneway_ns = c.get_u64("mem.spad_oneway_ns", p.spad_oneway_ns);
        p.notify_delay_ns = c.get_u64("mcc.notify_delay_ns", p.notify_delay_ns);
        p.cpu_freq_hz = c.get_double("cpu.freq_hz", p.cpu_freq_hz);
        p.cpu_mlp = c.get_u64("cpu.mlp", p.cpu_mlp);
        p.cpu_flush_ns = c.get_u64("cpu.flush_ns", p.cpu_flush_ns);
        p.cpu_inval_ns = c.get_u64("cpu.inval_ns", p.cpu_inval_ns);
        p.mcc_freq_hz = c.get_double("mcc.freq_hz", p.mcc_freq_hz);
        p.validate();
        return p;
    }

    void validate() const {
        if (external_latency_ns <= internal_latency_ns)
            throw ConfigError("external latency must exceed internal latency");
        if (external_bw > internal_bw)
            throw ConfigError("external bandwidth must not exceed internal bandwidth");
        if ((line_bytes & (line_bytes - 1)) != 0 || line_bytes == 0)
            throw ConfigError("line_bytes must be a power of two");
        if (llc_ways == 0 || llc_bytes % (line_bytes * llc_ways) != 0)
            throw ConfigError("llc geometry must divide into sets");
    }
};

// Host physical address map. Far memory and scratchpad windows live at
// fixed bases; the cached alias of the scratchpad window is used by the
// cache-line pipes.
namespace addrmap {
inline constexpr std::uint64_t kLocalBase = 0;
inline constexpr std::uint64_t kFarBase = 1ull << 40;
inline constexpr std::uint64_t kSpadBase = 1ull << 44;          // uncached window
inline constexpr std::uint64_t kSpadCachedBase = 1ull << 45;    // cached alias
inline constexpr std::uint64_t kSpadWindowStride = 1ull << 20;  // per MCC
}  // namespace addrmap

}  // namespace farsim
