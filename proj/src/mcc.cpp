#include "farsim/mcc/mcc.hpp"

#include <algorithm>
#include <cstring>

#include "farsim/guest/guest.hpp"
#include "farsim/mcc/mcc_ctx.hpp"
#include "farsim/simulator.hpp"

namespace farsim {

Mcc::Mcc(Simulator& sim, int id, const Config& cfg)
    : sim_(sim), id_(id), costs_(MccCosts::from_config(cfg)),
      pending_depth_(cfg.get_u64("mcc.pending_depth", 8)),
      notifier_depth_(cfg.get_u64("mcc.notifier_depth", 64)),
      mmio_server_("mmio" + std::to_string(id),
                   1e9 / static_cast<double>(MmioParams::from_config(cfg).service_ns)),
      spawn_base_ns_(cfg.get_u64("spawn.base_ns", 200000)),
      spawn_copy_ns_per_byte_(cfg.get_double("spawn.copy_ns_per_byte", 12.0)),
      spawn_verify_ns_per_byte_(cfg.get_double("spawn.verify_ns_per_byte", 37.0)),
      spawn_max_bytes_(cfg.get_u64("spawn.max_bytes", 32 * 1024)) {
    std::uint64_t n = cfg.get_u64("mcc.spad_lines", 512);
    std::uint64_t line_bytes = cfg.get_u64("mem.line_bytes", 128);
    lines_.resize(n);
    for (auto& l : lines_) l.data.assign(line_bytes, 0);
    regs_.assign(cfg.get_u64("mcc.ioregs", 32), 0);
    reg_dirty_.assign(regs_.size(), false);
}

Mcc::Line& Mcc::line(int i) {
    if (i < 0 || i >= spad_lines())
        throw AddressFault("scratchpad line " + std::to_string(i) + " out of range");
    return lines_[static_cast<std::size_t>(i)];
}

bool Mcc::busy() const { return cp_ != nullptr && !cp_->finished(); }

void Mcc::lock_line(int i, LockMode mode) {
    Line& l = line(i);
    if (l.lock != LockMode::Unlocked)
        throw LockStateError("mcc " + std::to_string(id_) + " line " + std::to_string(i) +
                             " already locked");
    l.lock = mode;
}

void Mcc::unlock_line(int i, SimTime now) {
    Line& l = line(i);
    if (l.lock == LockMode::Unlocked)
        throw LockStateError("mcc " + std::to_string(id_) + " line " + std::to_string(i) +
                             " not locked");
    l.lock = LockMode::Unlocked;
    // Deferred CPU requests are served with the line's current contents.
    while (!l.pending.empty()) {
        auto [arrival, serve] = std::move(l.pending.front());
        l.pending.pop_front();
        serve(now, l.data.data());
    }
}

void Mcc::cpu_fetch(int li, SimTime arrival,
                    std::function<void(SimTime, const std::uint8_t*)> serve) {
    Line& l = line(li);
    if (l.lock == LockMode::Unlocked) {
        serve(arrival, l.data.data());
        return;
    }
    if (l.pending.size() >= pending_depth_)
        throw SimulationError("pending queue overflow on mcc " + std::to_string(id_) +
                              " line " + std::to_string(li));
    l.pending.emplace_back(arrival, std::move(serve));
    notify(NotifierEvent{li, NotifierEvent::Req::CpuRead}, arrival);
}

void Mcc::cpu_writeback(int li, SimTime arrival, const std::uint8_t* data) {
    Line& l = line(li);
    std::memcpy(l.data.data(), data, l.data.size());
    if (l.lock != LockMode::Unlocked)
        notify(NotifierEvent{li, NotifierEvent::Req::CpuWrite}, arrival);
}

void Mcc::notify(NotifierEvent ev, SimTime raise_time) {
    if (notifier_.size() >= notifier_depth_)
        throw SimulationError("notifier overflow on mcc " + std::to_string(id_) +
                              " (depth " + std::to_string(notifier_depth_) + ", line " +
                              std::to_string(ev.line) + ")");
    SimTime visible = raise_time + sim_.params().notify_delay_ns;
    notifier_.emplace_back(visible, ev);
    maybe_wake_notify_waiter();
}

void Mcc::set_notify_waiter(Guest* g) {
    notify_waiter_ = g;
    maybe_wake_notify_waiter();
}

void Mcc::maybe_wake_notify_waiter() {
    if (!notify_waiter_ || notify_wake_scheduled_ || notifier_.empty()) return;
    notify_wake_scheduled_ = true;
    SimTime visible = notifier_.front().first;
    SimTime at = std::max(visible, sim_.engine().now());
    sim_.engine().schedule_at(at, [this, at] {
        notify_wake_scheduled_ = false;
        Guest* g = notify_waiter_;
        if (!g) return;
        auto ev = notifier_pop(at);
        if (!ev) {
            maybe_wake_notify_waiter();  // front still invisible; rearm
            return;
        }
        notify_waiter_ = nullptr;
        g->result_u64 = (static_cast<std::uint64_t>(ev->line) << 8) |
                        static_cast<std::uint64_t>(ev->req);
        g->result_flag = true;
        g->wake(at);
    });
}

std::optional<NotifierEvent> Mcc::notifier_pop(SimTime now) {
    if (notifier_.empty() || notifier_.front().first > now) return std::nullopt;
    NotifierEvent ev = notifier_.front().second;
    notifier_.pop_front();
    return ev;
}

bool Mcc::notifier_has_visible(SimTime now) const {
    return !notifier_.empty() && notifier_.front().first <= now;
}

void Mcc::start_copy(const CopyCommand& cmd, SimTime issue_time) {
    if (cmd.line_count < 1) throw ProtocolError("copy line_count must be >= 1");
    if (cmd.spad_index < 0 || cmd.spad_index + cmd.line_count > spad_lines())
        throw AddressFault("copy scratchpad range out of bounds");
    std::uint64_t lb = sim_.params().line_bytes;
    if (cmd.far_line_addr % lb != 0) throw AddressFault("copy far address not line-aligned");
    if (!sim_.mem().far().contains(cmd.far_line_addr,
                                   static_cast<std::uint64_t>(cmd.line_count) * lb))
        throw AddressFault("copy far range out of bounds");
    for (int k = 0; k < cmd.line_count; ++k)
        if (copy_inflight_.count(cmd.spad_index + k))
            throw OverlapError("copy conflicts with in-flight copy on line " +
                               std::to_string(cmd.spad_index + k));

    for (int k = 0; k < cmd.line_count; ++k) {
        int li = cmd.spad_index + k;
        copy_inflight_.insert(li);
        std::uint64_t faddr = cmd.far_line_addr + static_cast<std::uint64_t>(k) * lb;
        if (cmd.dir == CopyCommand::Dir::FarToSpad) {
            SimTime done = sim_.mem().far_line_op(Origin::CopyEngine, MemKind::Read,
                                                  faddr, issue_time);
            CopyCommand c = cmd;
            sim_.engine().schedule_at(done, [this, c, k, li, faddr, done] {
                auto src = sim_.mem().far().line_data(faddr);
                std::memcpy(line(li).data.data(), src.data(), src.size());
                stamp_and_finish(c, k, done);
            });
        } else {
            // Source bytes leave the scratchpad at issue time.
            SimTime done = sim_.mem().far_line_op(Origin::CopyEngine, MemKind::Write,
                                                  faddr, issue_time, line(li).data.data());
            CopyCommand c = cmd;
            sim_.engine().schedule_at(done, [this, c, k, li, done] {
                stamp_and_finish(c, k, done);
            });
        }
    }
}

void Mcc::stamp_and_finish(const CopyCommand& cmd, int k, SimTime done) {
    int li = cmd.spad_index + k;
    bool is_read = cmd.dir == CopyCommand::Dir::FarToSpad;
    std::uint64_t stamp = sim_.global_counter(done);
    if (is_read)
        line(li).read_ts = stamp;
    else
        line(li).write_ts = stamp;
    copy_inflight_.erase(li);
    notify(NotifierEvent{li, is_read ? NotifierEvent::Req::CopyReadDone
                                     : NotifierEvent::Req::CopyWriteDone},
           done);
    wake_ts_waiters(li, is_read, done);
}

bool Mcc::copy_done(int li, bool read_ts, std::uint64_t since) const {
    const Line& l = lines_[static_cast<std::size_t>(li)];
    return (read_ts ? l.read_ts : l.write_ts) > since;
}

void Mcc::add_ts_waiter(int li, bool read_ts, std::uint64_t since, Guest* g) {
    ts_waiters_.push_back(TsWaiter{li, read_ts, since, g});
}

void Mcc::wake_ts_waiters(int li, bool read_ts, SimTime now) {
    for (std::size_t i = 0; i < ts_waiters_.size();) {
        TsWaiter& w = ts_waiters_[i];
        if (w.line == li && w.read_ts == read_ts && copy_done(li, read_ts, w.since)) {
            Guest* g = w.guest;
            ts_waiters_.erase(ts_waiters_.begin() + static_cast<std::ptrdiff_t>(i));
            sim_.engine().schedule_at(now, [g, now] { g->wake(now); });
        } else {
            ++i;
        }
    }
}

std::uint64_t Mcc::io_read(int reg) const {
    return regs_.at(static_cast<std::size_t>(reg));
}

void Mcc::io_write(int reg, std::uint64_t v, bool set_dirty) {
    regs_.at(static_cast<std::size_t>(reg)) = v;
    if (set_dirty) reg_dirty_.at(static_cast<std::size_t>(reg)) = true;
}

bool Mcc::io_dirty(int reg) const { return reg_dirty_.at(static_cast<std::size_t>(reg)); }

void Mcc::io_set_dirty(int reg, bool d) { reg_dirty_.at(static_cast<std::size_t>(reg)) = d; }

std::uint32_t Mcc::io_dirty_mask() const {
    std::uint32_t m = 0;
    for (std::size_t i = 0; i < reg_dirty_.size() && i < 32; ++i)
        if (reg_dirty_[i]) m |= 1u << i;
    return m;
}

SimTime Mcc::spawn_receive(std::uint64_t cb_bytes, bool verify, SimTime arrival) const {
    if (cb_bytes > spawn_max_bytes_)
        throw SpawnError("control block of " + std::to_string(cb_bytes) +
                         " bytes exceeds budget of " + std::to_string(spawn_max_bytes_));
    double ns = static_cast<double>(spawn_base_ns_) +
                static_cast<double>(cb_bytes) * spawn_copy_ns_per_byte_;
    if (verify) ns += static_cast<double>(cb_bytes) * spawn_verify_ns_per_byte_;
    return arrival + static_cast<SimTime>(ns);
}

// ---- FIFO awaitables (need Simulator definition) ----------------------------

void MccCtx::FifoSendAw::await_suspend(std::coroutine_handle<> h) {
    c.guest().set_resume_handle(h);
    c.guest().charge(c.mcc().costs().fifo);
    SimTime e = c.guest().local_now();
    c.sim().engine().schedule_at(e, [this, e] {
        InterMccFifo& f = c.sim().fifo(c.mcc_id(), peer);
        if (!f.full()) {
            f.words_.push_back(word);
            c.sim().counters().fifo_words++;
            if (f.blocked_receiver_) {
                Guest* r = f.blocked_receiver_;
                f.blocked_receiver_ = nullptr;
                std::uint64_t w = f.words_.front();
                f.words_.pop_front();
                c.sim().engine().schedule_at(e, [r, w, e] {
                    r->result_u64 = w;
                    r->result_flag = true;
                    r->wake(e);
                });
            }
            c.guest().wake(e);
        } else {
            c.guest().block("fifo_send to mcc " + std::to_string(peer), e);
            f.blocked_senders_.push_back(&c.guest());
            f.blocked_words_.push_back(word);
        }
    });
}

void MccCtx::FifoRecvAw::await_suspend(std::coroutine_handle<> h) {
    c.guest().set_resume_handle(h);
    c.guest().charge(c.mcc().costs().fifo);
    SimTime e = c.guest().local_now();
    c.sim().engine().schedule_at(e, [this, e] {
        InterMccFifo& f = c.sim().fifo(peer, c.mcc_id());
        if (!f.empty()) {
            c.guest().result_u64 = f.words_.front();
            f.words_.pop_front();
            has = true;
            // Admit one blocked sender into the freed slot.
            if (!f.blocked_senders_.empty()) {
                Guest* s = f.blocked_senders_.front();
                f.blocked_senders_.pop_front();
                std::uint64_t w = f.blocked_words_.front();
                f.blocked_words_.pop_front();
                f.words_.push_back(w);
                c.sim().counters().fifo_words++;
                c.sim().engine().schedule_at(e, [s, e] { s->wake(e); });
            }
            c.guest().wake(e);
        } else if (blocking) {
            if (f.blocked_receiver_)
                throw SimulationError("two receivers blocked on one fifo");
            // Deliver directly when a word arrives; has must read true then.
            has = true;
            c.guest().block("fifo_recv from mcc " + std::to_string(peer), e);
            f.blocked_receiver_ = &c.guest();
        } else {
            has = false;
            c.guest().wake(e);
        }
    });
}

}  // namespace farsim
