#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "farsim/counters.hpp"
#include "farsim/mem/far_memory.hpp"
#include "farsim/mem/llc.hpp"
#include "farsim/mem/params.hpp"
#include "farsim/sim/bandwidth.hpp"
#include "farsim/sim/event_queue.hpp"

namespace farsim {

enum class Origin { Cpu, Mcc, CopyEngine };
enum class MemKind { Read, Write };

enum class Region { Local, Far, SpadUncached, SpadCached, Invalid };

struct DecodedAddr {
    Region region = Region::Invalid;
    int mcc = -1;
    int spad_line = -1;
};

// Scratchpad-side hooks for the CPU window paths; implemented by the MCC set.
class SpadPort {
public:
    virtual ~SpadPort() = default;
    // Fill request for one scratchpad line. serve() fires when the device can
    // supply the data: immediately when unlocked, after release when locked.
    virtual void cpu_fetch(int mcc, int line, SimTime arrival,
                           std::function<void(SimTime, const std::uint8_t*)> serve) = 0;
    // Full-line writeback delivery.
    virtual void cpu_writeback(int mcc, int line, SimTime arrival,
                               const std::uint8_t* data) = 0;
    virtual std::span<const std::uint8_t> peek(int mcc, int line) const = 0;
};

// Far DRAM, the non-coherent CPU-side LLC, and the CPU<->device link.
// All latency constants are decomposed so the idle-path totals equal the
// configured anchors exactly.
class MemSystem {
public:
    MemSystem(Engine& eng, const MemParams& p, PerfCounters& ctr);

    const MemParams& params() const { return p_; }
    FarMemory& far() { return far_; }
    const FarMemory& far() const { return far_; }
    Llc& llc() { return llc_; }
    BandwidthServer& link() { return link_; }
    BandwidthServer& channel(std::uint64_t i) { return channels_[i % channels_.size()]; }
    void set_spad_port(SpadPort* port) { spad_ = port; }

    DecodedAddr decode(std::uint64_t addr) const;
    std::uint64_t line_of(std::uint64_t addr) const { return addr & ~(p_.line_bytes - 1); }

    // Timed far-DRAM line operation. Write data (when given) commits at the
    // completion instant; reads observe whatever is committed when the caller
    // resumes. Returns the completion time.
    SimTime far_line_op(Origin origin, MemKind kind, std::uint64_t line_addr, SimTime t,
                        const std::uint8_t* write_src = nullptr);

    // ---- CPU cached-access layer -------------------------------------------
    // Hit paths return the data-ready time; misses are driven through fills.
    std::optional<SimTime> try_load_hit(std::uint64_t line_addr, SimTime t);
    bool try_store_hit(std::uint64_t line_addr, std::uint64_t offset,
                       std::span<const std::uint8_t> bytes);

    bool fill_in_flight(std::uint64_t line_addr) const { return fills_.count(line_addr) != 0; }
    bool cached(std::uint64_t line_addr) { return llc_.find(line_addr) != nullptr; }

    // Starts a fill for an absent line; requires no fill in flight. The
    // LLC entry is allocated (with victim writeback) at completion, then all
    // waiters run. Far/local completions are known at issue; scratchpad fills
    // may be deferred under a line lock.
    void start_fill(std::uint64_t line_addr, SimTime t);
    void add_fill_waiter(std::uint64_t line_addr, std::function<void(SimTime)> cb);
    void buffer_store(std::uint64_t line_addr, std::uint64_t offset,
                      std::span<const std::uint8_t> bytes);

    // Flush keeps the copy and issues an asynchronous writeback when dirty;
    // invalidate drops the copy without writeback.
    void flush(std::uint64_t line_addr, SimTime t);
    void invalidate(std::uint64_t line_addr);

    enum class Staleness { Fresh, Stale, NotCached };
    Staleness staleness_probe(std::uint64_t addr);

    // Committed-value access used when a guest's load resumes, and as the
    // untimed backdoor for workload setup/verification.
    void read_committed(std::uint64_t addr, std::span<std::uint8_t> out);
    std::span<std::uint8_t> local_raw(std::uint64_t addr, std::uint64_t len);

    std::uint64_t local_base() const { return addrmap::kLocalBase; }
    std::uint64_t far_base() const { return far_.base(); }

    // Fixed-latency components derived from the anchors (exposed for tests).
    SimTime ddr_fixed_ns() const { return ddr_fixed_; }
    SimTime link_fixed_ns() const { return link_fixed_; }

private:
    struct Fill {
        bool done_known = false;
        SimTime done = 0;
        std::vector<std::uint8_t> spad_data;  // spad fills carry served bytes
        bool spad_valid = false;
        std::vector<std::pair<std::uint64_t, std::vector<std::uint8_t>>> pending_stores;
        std::vector<std::function<void(SimTime)>> waiters;
    };

    void complete_fill(std::uint64_t line_addr, SimTime done, const std::uint8_t* src,
                       std::uint64_t version);
    void writeback(std::uint64_t line_addr, const std::uint8_t* data, SimTime t);

    Engine& eng_;
    MemParams p_;
    PerfCounters& ctr_;
    FarMemory far_;
    std::vector<std::uint8_t> local_;
    Llc llc_;
    BandwidthServer link_;
    std::vector<BandwidthServer> channels_;
    SimTime ddr_fixed_ = 0;
    SimTime link_fixed_ = 0;
    SpadPort* spad_ = nullptr;
    std::map<std::uint64_t, Fill> fills_;
    std::vector<std::uint8_t> scratch_line_;
};

}  // namespace farsim
