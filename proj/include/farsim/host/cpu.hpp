#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "farsim/mem/mem_system.hpp"
#include "farsim/sim/time.hpp"

namespace farsim {

class Simulator;
class Guest;

// CPU-side MMIO path constants; the round trip is calibrated against the
// register ping-pong anchor.
struct MmioParams {
    SimTime write_ns = 360;    // core-blocked cost of a posted write
    SimTime read_ns = 640;     // core-blocked cost of an uncached read
    SimTime oneway_ns = 200;   // issue -> device arrival
    SimTime service_ns = 281;  // device serialization per op

    static MmioParams from_config(const Config& c) {
        MmioParams m;
        m.write_ns = c.get_u64("mmio.write_ns", m.write_ns);
        m.read_ns = c.get_u64("mmio.read_ns", m.read_ns);
        m.oneway_ns = c.get_u64("mmio.oneway_ns", m.oneway_ns);
        m.service_ns = c.get_u64("mmio.service_ns", m.service_ns);
        return m;
    }
};

// An in-order CPU core: demand loads block; stores, prefetches and
// write-allocate fills ride a window of cpu_mlp outstanding misses.
class CpuCore {
public:
    CpuCore(Simulator& sim, int id);

    int id() const { return id_; }
    double freq_hz() const;

    // All entry points are called at the action's effect time `t` and invoke
    // `done(data_ready_time)` (possibly immediately, possibly later).
    void load(std::uint64_t addr, std::uint64_t size, SimTime t,
              std::function<void(SimTime)> done);
    void store(std::uint64_t addr, std::span<const std::uint8_t> bytes, SimTime t,
               std::function<void(SimTime)> done);
    void prefetch(std::uint64_t addr, SimTime t);
    void flush(std::uint64_t addr, SimTime t);
    void invalidate(std::uint64_t addr, SimTime t);

    void mmio_write(int mcc, int reg, std::uint64_t v, SimTime t,
                    std::function<void(SimTime)> done);
    void mmio_read(int mcc, int reg, SimTime t,
                   std::function<void(SimTime, std::uint64_t value, bool dirty)> done);
    void mmio_mark_clean(int mcc, int reg, SimTime t, std::function<void(SimTime)> done);

    std::uint64_t stall_ns() const { return stall_ns_; }
    void add_stall(std::uint64_t ns);

private:
    // Earliest-free MLP slot; returns slot index.
    int acquire_slot(SimTime t, SimTime* start);
    bool has_free_slot(SimTime t) const;
    SimTime mem_link_response(SimTime served);

    Simulator& sim_;
    int id_;
    std::vector<SimTime> slot_free_;
    std::uint64_t stall_ns_ = 0;
};

}  // namespace farsim
