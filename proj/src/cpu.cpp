#include "farsim/host/cpu.hpp"

#include <algorithm>
#include <cstring>

#include "farsim/guest/guest.hpp"
#include "farsim/simulator.hpp"

namespace farsim {

CpuCore::CpuCore(Simulator& sim, int id) : sim_(sim), id_(id) {
    slot_free_.assign(sim.params().cpu_mlp, 0);
}

double CpuCore::freq_hz() const { return sim_.params().cpu_freq_hz; }

void CpuCore::add_stall(std::uint64_t ns) {
    stall_ns_ += ns;
    auto& v = sim_.counters().core_stall_ns;
    if (v.size() <= static_cast<std::size_t>(id_)) v.resize(static_cast<std::size_t>(id_) + 1, 0);
    v[static_cast<std::size_t>(id_)] += ns;
}

int CpuCore::acquire_slot(SimTime t, SimTime* start) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(slot_free_.size()); ++i)
        if (slot_free_[static_cast<std::size_t>(i)] < slot_free_[static_cast<std::size_t>(best)])
            best = i;
    *start = std::max(t, slot_free_[static_cast<std::size_t>(best)]);
    return best;
}

bool CpuCore::has_free_slot(SimTime t) const {
    for (SimTime f : slot_free_)
        if (f <= t) return true;
    return false;
}

void CpuCore::load(std::uint64_t addr, std::uint64_t size, SimTime t,
                   std::function<void(SimTime)> done) {
    MemSystem& mem = sim_.mem();
    DecodedAddr d = mem.decode(addr);
    if (d.region == Region::Invalid)
        throw AddressFault("host load of unmapped address " + std::to_string(addr));

    if (d.region == Region::SpadUncached) {
        // Full round trip to the device; subject to line-lock deferral.
        SimTime arrival = t + sim_.params().spad_oneway_ns;
        sim_.cpu_fetch(d.mcc, d.spad_line, arrival,
                       [this, t, done](SimTime served, const std::uint8_t*) {
                           SimTime back = mem_link_response(served);
                           add_stall(back - t);
                           done(back);
                       });
        return;
    }

    std::uint64_t laddr = mem.line_of(addr);
    if (auto hit = mem.try_load_hit(laddr, t)) {
        done(*hit);
        return;
    }
    if (mem.fill_in_flight(laddr)) {
        mem.add_fill_waiter(laddr, [this, t, done](SimTime fin) {
            add_stall(fin - t);
            done(fin);
        });
        return;
    }
    SimTime start;
    int slot = acquire_slot(t, &start);
    slot_free_[static_cast<std::size_t>(slot)] = kNoLimit;  // held until completion
    mem.start_fill(laddr, start);
    mem.add_fill_waiter(laddr, [this, slot, t, done](SimTime fin) {
        slot_free_[static_cast<std::size_t>(slot)] = fin;
        add_stall(fin - t);
        done(fin);
    });
    (void)size;
}

SimTime CpuCore::mem_link_response(SimTime served) {
    // Uncached read data return path.
    BandwidthServer& link = sim_.mem().link();
    SimTime back = link.request(served, sim_.params().line_bytes);
    sim_.counters().link_bytes += sim_.params().line_bytes;
    return back + sim_.params().spad_oneway_ns;
}

void CpuCore::store(std::uint64_t addr, std::span<const std::uint8_t> bytes, SimTime t,
                    std::function<void(SimTime)> done) {
    MemSystem& mem = sim_.mem();
    DecodedAddr d = mem.decode(addr);
    if (d.region == Region::Invalid)
        throw AddressFault("host store of unmapped address " + std::to_string(addr));

    if (d.region == Region::SpadUncached) {
        // Posted line-granular write: deliver the enclosing line image.
        std::vector<std::uint8_t> line(sim_.params().line_bytes);
        auto cur = sim_.peek(d.mcc, d.spad_line);
        std::memcpy(line.data(), cur.data(), line.size());
        std::uint64_t off = addr & (sim_.params().line_bytes - 1);
        std::memcpy(line.data() + off, bytes.data(), bytes.size());
        SimTime depart = sim_.mem().link().request(t, sim_.params().line_bytes);
        sim_.counters().link_bytes += sim_.params().line_bytes;
        SimTime arrival = depart + sim_.params().spad_oneway_ns;
        int mcc = d.mcc, li = d.spad_line;
        sim_.engine().schedule_at(arrival, [this, mcc, li, arrival, line = std::move(line)] {
            sim_.cpu_writeback(mcc, li, arrival, line.data());
        });
        done(t + sim_.params().spad_oneway_ns);
        return;
    }

    std::uint64_t laddr = mem.line_of(addr);
    std::uint64_t off = addr - laddr;
    if (mem.try_store_hit(laddr, off, bytes)) {
        done(t);
        return;
    }
    if (mem.fill_in_flight(laddr)) {
        mem.buffer_store(laddr, off, bytes);
        done(t);
        return;
    }
    // Write-allocate: the fill rides an MLP slot; the core does not block.
    SimTime start;
    int slot = acquire_slot(t, &start);
    slot_free_[static_cast<std::size_t>(slot)] = kNoLimit;
    mem.start_fill(laddr, start);
    mem.buffer_store(laddr, off, bytes);
    mem.add_fill_waiter(laddr, [this, slot](SimTime fin) {
        slot_free_[static_cast<std::size_t>(slot)] = fin;
    });
    done(t);
}

void CpuCore::prefetch(std::uint64_t addr, SimTime t) {
    MemSystem& mem = sim_.mem();
    std::uint64_t laddr = mem.line_of(addr);
    DecodedAddr d = mem.decode(laddr);
    if (d.region == Region::Invalid || d.region == Region::SpadUncached) return;
    if (mem.cached(laddr) || mem.fill_in_flight(laddr)) return;
    if (!has_free_slot(t)) {
        sim_.counters().prefetch_dropped++;
        return;
    }
    SimTime start;
    int slot = acquire_slot(t, &start);
    slot_free_[static_cast<std::size_t>(slot)] = kNoLimit;
    sim_.counters().prefetch_issued++;
    mem.start_fill(laddr, start);
    mem.add_fill_waiter(laddr, [this, slot](SimTime fin) {
        slot_free_[static_cast<std::size_t>(slot)] = fin;
    });
}

void CpuCore::flush(std::uint64_t addr, SimTime t) {
    sim_.mem().flush(sim_.mem().line_of(addr), t);
}

void CpuCore::invalidate(std::uint64_t addr, SimTime t) {
    (void)t;
    sim_.mem().invalidate(sim_.mem().line_of(addr));
}

void CpuCore::mmio_write(int mcc, int reg, std::uint64_t v, SimTime t,
                         std::function<void(SimTime)> done) {
    const MmioParams& m = sim_.mmio_params();
    Mcc& dev = sim_.mcc(mcc);
    SimTime t_dev = dev.mmio_server().request(t + m.oneway_ns, 1);
    sim_.counters().mmio_ops++;
    sim_.counters().link_bytes += 8;
    sim_.engine().schedule_at(t_dev, [&dev, reg, v] { dev.io_write(reg, v, true); });
    done(t + m.write_ns);
}

void CpuCore::mmio_read(int mcc, int reg, SimTime t,
                        std::function<void(SimTime, std::uint64_t, bool)> done) {
    const MmioParams& m = sim_.mmio_params();
    Mcc& dev = sim_.mcc(mcc);
    SimTime t_dev = dev.mmio_server().request(t + m.oneway_ns, 1);
    sim_.counters().mmio_ops++;
    sim_.counters().link_bytes += 8;
    SimTime fin = std::max(t + m.read_ns, t_dev + (m.read_ns - m.oneway_ns) / 2);
    sim_.engine().schedule_at(t_dev, [&dev, reg, fin, done = std::move(done)] {
        if (reg < 0) {  // status view: the dirty bitmap of all registers
            done(fin, dev.io_dirty_mask(), false);
        } else {
            done(fin, dev.io_read(reg), dev.io_dirty(reg));
        }
    });
}

void CpuCore::mmio_mark_clean(int mcc, int reg, SimTime t,
                              std::function<void(SimTime)> done) {
    const MmioParams& m = sim_.mmio_params();
    Mcc& dev = sim_.mcc(mcc);
    SimTime t_dev = dev.mmio_server().request(t + m.oneway_ns, 1);
    sim_.counters().mmio_ops++;
    sim_.counters().link_bytes += 8;
    sim_.engine().schedule_at(t_dev, [&dev, reg] { dev.io_set_dirty(reg, false); });
    done(t + m.write_ns);
}

}  // namespace farsim
