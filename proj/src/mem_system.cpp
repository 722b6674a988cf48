#include "farsim/mem/mem_system.hpp"

#include <cstring>

namespace farsim {

MemSystem::MemSystem(Engine& eng, const MemParams& p, PerfCounters& ctr)
    : eng_(eng), p_(p), ctr_(ctr),
      far_(addrmap::kFarBase, p.far_bytes, p.line_bytes),
      local_(p.local_bytes, 0),
      llc_(p.llc_bytes, p.llc_ways, p.line_bytes),
      link_("link", p.external_bw),
      scratch_line_(p.line_bytes, 0) {
    double per_channel = p.internal_bw / static_cast<double>(p.ddr_channels);
    for (std::uint64_t i = 0; i < p.ddr_channels; ++i)
        channels_.emplace_back("ddr" + std::to_string(i), per_channel);

    SimTime ddr_svc = channels_[0].idle_service_ns(p.line_bytes);
    if (p.internal_latency_ns <= ddr_svc)
        throw ConfigError("internal latency smaller than one line service time");
    ddr_fixed_ = p.internal_latency_ns - ddr_svc;

    SimTime link_svc = link_.idle_service_ns(p.line_bytes);
    SimTime link_total = p.external_latency_ns - p.internal_latency_ns;
    if (link_total <= link_svc)
        throw ConfigError("external-internal latency gap smaller than link service time");
    link_fixed_ = link_total - link_svc;
}

DecodedAddr MemSystem::decode(std::uint64_t addr) const {
    DecodedAddr d;
    if (addr < addrmap::kLocalBase + local_.size()) {
        d.region = Region::Local;
    } else if (far_.contains(addr)) {
        d.region = Region::Far;
    } else if (addr >= addrmap::kSpadBase && addr < addrmap::kSpadCachedBase) {
        d.region = Region::SpadUncached;
        std::uint64_t off = addr - addrmap::kSpadBase;
        d.mcc = static_cast<int>(off / addrmap::kSpadWindowStride);
        d.spad_line = static_cast<int>((off % addrmap::kSpadWindowStride) / p_.line_bytes);
    } else if (addr >= addrmap::kSpadCachedBase &&
               addr < addrmap::kSpadCachedBase + (addrmap::kSpadCachedBase >> 1)) {
        d.region = Region::SpadCached;
        std::uint64_t off = addr - addrmap::kSpadCachedBase;
        d.mcc = static_cast<int>(off / addrmap::kSpadWindowStride);
        d.spad_line = static_cast<int>((off % addrmap::kSpadWindowStride) / p_.line_bytes);
    }
    return d;
}

SimTime MemSystem::far_line_op(Origin origin, MemKind kind, std::uint64_t line_addr,
                               SimTime t, const std::uint8_t* write_src) {
    if (line_addr % p_.line_bytes != 0)
        throw AddressFault("far line op not line-aligned");
    if (!far_.contains(line_addr, p_.line_bytes))
        throw AddressFault("far line op outside far memory");

    SimTime arrive = t;
    if (origin == Origin::Cpu) {
        SimTime link_done = link_.request(t, p_.line_bytes);
        ctr_.link_bytes += p_.line_bytes;
        ctr_.credit_range_link(line_addr, p_.line_bytes);
        arrive = link_done + link_fixed_;
    }
    std::uint64_t chan = (line_addr / p_.line_bytes) % channels_.size();
    SimTime bw_done = channels_[chan].request(arrive, p_.line_bytes);
    SimTime done = bw_done + ddr_fixed_;
    ctr_.ddr_bytes += p_.line_bytes;
    ctr_.ddr_line_ops += 1;
    ctr_.credit_range_ddr(line_addr, p_.line_bytes);

    if (kind == MemKind::Write) {
        std::vector<std::uint8_t> data(write_src, write_src + p_.line_bytes);
        eng_.schedule_at(done, [this, line_addr, data = std::move(data)]() {
            far_.commit_line(line_addr, data.data());
        });
    }
    return done;
}

std::optional<SimTime> MemSystem::try_load_hit(std::uint64_t line_addr, SimTime t) {
    Llc::Entry* e = llc_.find(line_addr);
    if (!e) return std::nullopt;
    llc_.touch(*e);
    ctr_.llc_hits++;
    if (decode(line_addr).region == Region::Far &&
        e->version_at_fill < far_.version(line_addr))
        ctr_.stale_reads++;
    return t + p_.llc_hit_ns;
}

bool MemSystem::try_store_hit(std::uint64_t line_addr, std::uint64_t offset,
                              std::span<const std::uint8_t> bytes) {
    Llc::Entry* e = llc_.find(line_addr);
    if (!e) return false;
    llc_.touch(*e);
    std::memcpy(e->data.data() + offset, bytes.data(), bytes.size());
    e->dirty = true;
    return true;
}

void MemSystem::add_fill_waiter(std::uint64_t line_addr, std::function<void(SimTime)> cb) {
    fills_.at(line_addr).waiters.push_back(std::move(cb));
}

void MemSystem::buffer_store(std::uint64_t line_addr, std::uint64_t offset,
                             std::span<const std::uint8_t> bytes) {
    auto& f = fills_.at(line_addr);
    f.pending_stores.emplace_back(offset,
                                  std::vector<std::uint8_t>(bytes.begin(), bytes.end()));
}

void MemSystem::start_fill(std::uint64_t line_addr, SimTime t) {
    if (fills_.count(line_addr))
        throw SimError("fill already in flight");
    DecodedAddr d = decode(line_addr);
    Fill& f = fills_[line_addr];
    switch (d.region) {
        case Region::Far: {
            SimTime done = far_line_op(Origin::Cpu, MemKind::Read, line_addr, t);
            f.done_known = true;
            f.done = done;
            eng_.schedule_at(done, [this, line_addr, done]() {
                complete_fill(line_addr, done, far_.line_data(line_addr).data(),
                              far_.version(line_addr));
            });
            break;
        }
        case Region::Local: {
            SimTime done = t + p_.llc_hit_ns + p_.local_latency_ns;
            f.done_known = true;
            f.done = done;
            eng_.schedule_at(done, [this, line_addr, done]() {
                complete_fill(line_addr, done, local_raw(line_addr, p_.line_bytes).data(), 0);
            });
            break;
        }
        case Region::SpadCached: {
            if (!spad_) throw SimError("no scratchpad port wired");
            SimTime arrival = t + p_.spad_oneway_ns;
            spad_->cpu_fetch(d.mcc, d.spad_line, arrival,
                             [this, line_addr](SimTime served, const std::uint8_t* data) {
                                 auto& fl = fills_.at(line_addr);
                                 fl.spad_data.assign(data, data + p_.line_bytes);
                                 fl.spad_valid = true;
                                 SimTime back = link_.request(served, p_.line_bytes);
                                 ctr_.link_bytes += p_.line_bytes;
                                 SimTime done = back + p_.spad_oneway_ns;
                                 eng_.schedule_at(done, [this, line_addr, done]() {
                                     complete_fill(line_addr, done,
                                                   fills_.at(line_addr).spad_data.data(), 0);
                                 });
                             });
            break;
        }
        default:
            throw AddressFault("fill of unmapped address");
    }
}

void MemSystem::complete_fill(std::uint64_t line_addr, SimTime done,
                              const std::uint8_t* src, std::uint64_t version) {
    ctr_.llc_misses++;
    Llc::Entry& v = llc_.victim(line_addr);
    if (v.valid && v.dirty) writeback(v.line_addr, v.data.data(), done);
    llc_.fill(v, line_addr, src, version);

    Fill f = std::move(fills_.at(line_addr));
    fills_.erase(line_addr);
    for (auto& [off, bytes] : f.pending_stores) {
        std::memcpy(v.data.data() + off, bytes.data(), bytes.size());
        v.dirty = true;
    }
    for (auto& w : f.waiters) w(done);
}

void MemSystem::writeback(std::uint64_t line_addr, const std::uint8_t* data, SimTime t) {
    ctr_.llc_writebacks++;
    DecodedAddr d = decode(line_addr);
    switch (d.region) {
        case Region::Far:
            far_line_op(Origin::Cpu, MemKind::Write, line_addr, t, data);
            break;
        case Region::Local: {
            std::vector<std::uint8_t> copy(data, data + p_.line_bytes);
            std::uint64_t addr = line_addr;
            SimTime done = t + p_.local_latency_ns;
            eng_.schedule_at(done, [this, addr, copy = std::move(copy)]() {
                std::memcpy(local_raw(addr, p_.line_bytes).data(), copy.data(),
                            p_.line_bytes);
            });
            break;
        }
        case Region::SpadCached: {
            if (!spad_) throw SimError("no scratchpad port wired");
            SimTime depart = link_.request(t, p_.line_bytes);
            ctr_.link_bytes += p_.line_bytes;
            SimTime arrival = depart + p_.spad_oneway_ns;
            std::vector<std::uint8_t> copy(data, data + p_.line_bytes);
            int mcc = d.mcc, line = d.spad_line;
            eng_.schedule_at(arrival, [this, mcc, line, arrival, copy = std::move(copy)]() {
                spad_->cpu_writeback(mcc, line, arrival, copy.data());
            });
            break;
        }
        default:
            throw AddressFault("writeback of unmapped address");
    }
}

void MemSystem::flush(std::uint64_t line_addr, SimTime t) {
    if (fill_in_flight(line_addr)) {
        // Takes effect once the outstanding fill (with its buffered stores)
        // lands, matching store-then-flush program order.
        add_fill_waiter(line_addr, [this, line_addr](SimTime done) {
            flush(line_addr, done);
        });
        return;
    }
    Llc::Entry* e = llc_.find(line_addr);
    if (!e || !e->dirty) return;
    writeback(line_addr, e->data.data(), t);
    e->dirty = false;
}

void MemSystem::invalidate(std::uint64_t line_addr) {
    if (fill_in_flight(line_addr)) {
        // Ordered behind the fill and any flush already queued on it; the
        // entry is dropped without writeback once it lands (lost update
        // unless a flush preceded the invalidate).
        add_fill_waiter(line_addr, [this, line_addr](SimTime) {
            llc_.invalidate(line_addr);
        });
        return;
    }
    llc_.invalidate(line_addr);
}

MemSystem::Staleness MemSystem::staleness_probe(std::uint64_t addr) {
    std::uint64_t laddr = line_of(addr);
    Llc::Entry* e = llc_.find(laddr);
    if (!e) return Staleness::NotCached;
    if (decode(laddr).region != Region::Far) return Staleness::Fresh;
    return e->version_at_fill < far_.version(laddr) ? Staleness::Stale : Staleness::Fresh;
}

void MemSystem::read_committed(std::uint64_t addr, std::span<std::uint8_t> out) {
    std::uint64_t laddr = line_of(addr);
    if (Llc::Entry* e = llc_.find(laddr)) {
        std::memcpy(out.data(), e->data.data() + (addr - laddr), out.size());
        return;
    }
    DecodedAddr d = decode(addr);
    switch (d.region) {
        case Region::Far:
            std::memcpy(out.data(), far_.raw(addr, out.size()).data(), out.size());
            break;
        case Region::Local:
            std::memcpy(out.data(), local_raw(addr, out.size()).data(), out.size());
            break;
        case Region::SpadCached:
        case Region::SpadUncached: {
            auto line = spad_->peek(d.mcc, d.spad_line);
            std::uint64_t off = addr & (p_.line_bytes - 1);
            std::memcpy(out.data(), line.data() + off, out.size());
            break;
        }
        default:
            throw AddressFault("read of unmapped address " + std::to_string(addr));
    }
}

std::span<std::uint8_t> MemSystem::local_raw(std::uint64_t addr, std::uint64_t len) {
    if (addr + len > local_.size()) throw AddressFault("local memory access out of range");
    return {local_.data() + addr, len};
}

}  // namespace farsim
