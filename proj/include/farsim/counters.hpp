#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace farsim {

// Byte/message/cycle accounting on every datapath. Monotone during a run;
// snapshots are value copies.
struct PerfCounters {
    std::uint64_t link_bytes = 0;       // CPU <-> device traffic
    std::uint64_t ddr_bytes = 0;        // far DRAM traffic (both origins)
    std::uint64_t ddr_line_ops = 0;     // far line reads + writes
    std::uint64_t fifo_words = 0;       // inter-MCC words sent
    std::uint64_t pipe_lines = 0;       // cache-line pipe deliveries
    std::uint64_t mmio_ops = 0;
    std::uint64_t prefetch_issued = 0;
    std::uint64_t prefetch_dropped = 0;
    std::uint64_t stale_reads = 0;      // LLC hits on lines overwritten in far memory
    std::uint64_t llc_hits = 0;
    std::uint64_t llc_misses = 0;
    std::uint64_t llc_writebacks = 0;
    std::uint64_t spawns = 0;

    std::vector<std::uint64_t> core_stall_ns;   // per CPU core
    std::vector<double> mcc_busy_cycles;        // per MCC
    std::vector<std::uint64_t> mcc_idle_ns;     // per MCC

    // Optional address-range attribution (e.g. "contrib" array traffic).
    struct RangeCounter {
        std::string name;
        std::uint64_t lo = 0, hi = 0;  // [lo, hi)
        std::uint64_t link_bytes = 0;
        std::uint64_t ddr_bytes = 0;
    };
    std::vector<RangeCounter> ranges;

    void add_range(const std::string& name, std::uint64_t lo, std::uint64_t hi) {
        ranges.push_back(RangeCounter{name, lo, hi, 0, 0});
    }
    const RangeCounter* find_range(const std::string& name) const {
        for (const auto& r : ranges)
            if (r.name == name) return &r;
        return nullptr;
    }
    void credit_range_ddr(std::uint64_t addr, std::uint64_t bytes) {
        for (auto& r : ranges)
            if (addr >= r.lo && addr < r.hi) r.ddr_bytes += bytes;
    }
    void credit_range_link(std::uint64_t addr, std::uint64_t bytes) {
        for (auto& r : ranges)
            if (addr >= r.lo && addr < r.hi) r.link_bytes += bytes;
    }
};

}  // namespace farsim
