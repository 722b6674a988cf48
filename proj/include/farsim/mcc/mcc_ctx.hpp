#pragma once

#include <coroutine>
#include <cstring>
#include <optional>

#include "farsim/guest/guest.hpp"
#include "farsim/mcc/mcc.hpp"
#include "farsim/simulator.hpp"

namespace farsim {

// Channel-program view of one MCC. Suspending operations take effect at the
// guest's local time through the event queue, which is what keeps shared
// state interactions deterministically ordered. Non-suspending helpers only
// touch state the CP owns (locked lines, lines with no copy in flight).
class MccCtx {
public:
    MccCtx(Simulator& sim, Guest& g, Mcc& mcc) : sim_(sim), g_(g), mcc_(mcc) {}

    Simulator& sim() { return sim_; }
    Guest& guest() { return g_; }
    Mcc& mcc() { return mcc_; }
    int mcc_id() const { return mcc_.id(); }

    void compute(double cycles) { g_.charge(cycles); }
    void exit(int code) { g_.set_exit_code(code); }

    // Scratchpad access the CP is entitled to without global ordering:
    // the line is locked by this CP or has no concurrent mutator.
    std::uint64_t spad_peek_u64(int line, int offset) {
        g_.charge(mcc_.costs().spad_access);
        std::uint64_t v;
        std::memcpy(&v, mcc_.line(line).data.data() + offset, 8);
        return v;
    }
    void spad_poke_u64(int line, int offset, std::uint64_t v) {
        g_.charge(mcc_.costs().spad_access);
        std::memcpy(mcc_.line(line).data.data() + offset, &v, 8);
    }
    void spad_poke_u8(int line, int offset, std::uint8_t v) {
        g_.charge(mcc_.costs().spad_access);
        mcc_.line(line).data[static_cast<std::size_t>(offset)] = v;
    }
    std::uint8_t spad_peek_u8(int line, int offset) {
        g_.charge(mcc_.costs().spad_access);
        return mcc_.line(line).data[static_cast<std::size_t>(offset)];
    }

    // ---- suspending operations ---------------------------------------------

    struct YieldAw {
        MccCtx& c;
        bool await_ready() const noexcept { return false; }
        void await_suspend(std::coroutine_handle<> h) {
            c.g_.set_resume_handle(h);
            SimTime e = c.g_.local_now();
            c.sim_.engine().schedule_at(e, [&g = c.g_, e] { g.wake(e); });
        }
        void await_resume() const noexcept {}
    };
    YieldAw yield() { return {*this}; }

    struct CopyStartAw {
        MccCtx& c;
        CopyCommand cmd;
        bool await_ready() const noexcept { return false; }
        void await_suspend(std::coroutine_handle<> h) {
            c.g_.set_resume_handle(h);
            c.g_.charge(c.mcc_.costs().copy_issue);
            SimTime e = c.g_.local_now();
            c.sim_.engine().schedule_at(e, [this, e] {
                try {
                    c.mcc_.start_copy(cmd, e);
                } catch (...) {
                    c.g_.pending_error = std::current_exception();
                }
                c.g_.wake(e);
            });
        }
        void await_resume() const { c.g_.check_pending(); }
    };
    CopyStartAw copy_start(CopyCommand cmd) { return {*this, cmd}; }

    // Non-blocking completion poll, ordered through the event queue.
    struct CopyDoneAw {
        MccCtx& c;
        int line;
        bool read_ts;
        std::uint64_t since;
        bool await_ready() const noexcept { return false; }
        void await_suspend(std::coroutine_handle<> h) {
            c.g_.set_resume_handle(h);
            c.g_.charge(c.mcc_.costs().spad_access);
            SimTime e = c.g_.local_now();
            c.sim_.engine().schedule_at(e, [this, e] {
                c.g_.result_flag = c.mcc_.copy_done(line, read_ts, since);
                c.g_.wake(e);
            });
        }
        bool await_resume() const noexcept { return c.g_.result_flag; }
    };
    CopyDoneAw copy_done(int line, bool read_ts, std::uint64_t since) {
        return {*this, line, read_ts, since};
    }

    // Blocks until the selected timestamp exceeds `since`.
    struct AwaitTsAw {
        MccCtx& c;
        int line;
        bool read_ts;
        std::uint64_t since;
        bool await_ready() const noexcept { return false; }
        void await_suspend(std::coroutine_handle<> h) {
            c.g_.set_resume_handle(h);
            c.g_.charge(c.mcc_.costs().spad_access);
            SimTime e = c.g_.local_now();
            c.sim_.engine().schedule_at(e, [this, e] {
                if (c.mcc_.copy_done(line, read_ts, since)) {
                    c.g_.wake(e);
                } else {
                    c.g_.block("await_ts line " + std::to_string(line), e);
                    c.mcc_.add_ts_waiter(line, read_ts, since, &c.g_);
                }
            });
        }
        void await_resume() const noexcept {}
    };
    AwaitTsAw await_ts(int line, bool read_ts, std::uint64_t since) {
        return {*this, line, read_ts, since};
    }

    struct LockAw {
        MccCtx& c;
        int line;
        LockMode mode;  // Unlocked means unlock
        bool await_ready() const noexcept { return false; }
        void await_suspend(std::coroutine_handle<> h) {
            c.g_.set_resume_handle(h);
            c.g_.charge(mode == LockMode::Unlocked ? c.mcc_.costs().unlock
                                                   : c.mcc_.costs().lock);
            SimTime e = c.g_.local_now();
            c.sim_.engine().schedule_at(e, [this, e] {
                try {
                    if (mode == LockMode::Unlocked)
                        c.mcc_.unlock_line(line, e);
                    else
                        c.mcc_.lock_line(line, mode);
                } catch (...) {
                    c.g_.pending_error = std::current_exception();
                }
                c.g_.wake(e);
            });
        }
        void await_resume() const { c.g_.check_pending(); }
    };
    LockAw lock(int line, LockMode mode) { return {*this, line, mode}; }
    LockAw unlock(int line) { return {*this, line, LockMode::Unlocked}; }

    struct NotifyAw {
        MccCtx& c;
        bool blocking;
        bool await_ready() const noexcept { return false; }
        void await_suspend(std::coroutine_handle<> h) {
            c.g_.set_resume_handle(h);
            c.g_.charge(c.mcc_.costs().notifier_pop);
            SimTime e = c.g_.local_now();
            c.sim_.engine().schedule_at(e, [this, e] {
                auto ev = c.mcc_.notifier_pop(e);
                if (ev) {
                    c.g_.result_u64 = encode(*ev);
                    c.g_.result_flag = true;
                    c.g_.wake(e);
                } else if (blocking) {
                    c.g_.block("await_notify", e);
                    c.mcc_.set_notify_waiter(&c.g_);
                } else {
                    c.g_.result_flag = false;
                    c.g_.wake(e);
                }
            });
        }
        std::optional<NotifierEvent> await_resume() const noexcept {
            if (!c.g_.result_flag) return std::nullopt;
            return decode(c.g_.result_u64);
        }
        static std::uint64_t encode(NotifierEvent ev) {
            return (static_cast<std::uint64_t>(ev.line) << 8) |
                   static_cast<std::uint64_t>(ev.req);
        }
        static NotifierEvent decode(std::uint64_t v) {
            return NotifierEvent{static_cast<int>(v >> 8),
                                 static_cast<NotifierEvent::Req>(v & 0xff)};
        }
    };
    // Wakes on the next visible notifier event; zero busy cycles while parked.
    NotifyAw await_notify() { return {*this, true}; }
    NotifyAw notify_poll() { return {*this, false}; }

    struct FifoSendAw {
        MccCtx& c;
        int peer;
        std::uint64_t word;
        bool await_ready() const noexcept { return false; }
        void await_suspend(std::coroutine_handle<> h);
        void await_resume() const noexcept {}
    };
    FifoSendAw fifo_send(int peer, std::uint64_t word) { return {*this, peer, word}; }

    struct FifoRecvAw {
        MccCtx& c;
        int peer;
        bool blocking;
        bool has = false;
        bool await_ready() const noexcept { return false; }
        void await_suspend(std::coroutine_handle<> h);
        std::optional<std::uint64_t> await_resume() const noexcept {
            return has ? std::optional<std::uint64_t>(c.g_.result_u64) : std::nullopt;
        }
    };
    FifoRecvAw fifo_recv(int peer) { return {*this, peer, true}; }
    FifoRecvAw fifo_recv_poll(int peer) { return {*this, peer, false}; }

    struct IoAw {
        MccCtx& c;
        int reg;
        std::uint64_t value;
        int op;  // 0=read, 1=write, 2=dirty_mask, 3=mark_clean
        bool await_ready() const noexcept { return false; }
        void await_suspend(std::coroutine_handle<> h) {
            c.g_.set_resume_handle(h);
            c.g_.charge(c.mcc_.costs().ioreg);
            SimTime e = c.g_.local_now();
            c.sim_.engine().schedule_at(e, [this, e] {
                switch (op) {
                    case 0: c.g_.result_u64 = c.mcc_.io_read(reg); break;
                    case 1: c.mcc_.io_write(reg, value, true); break;
                    case 2: c.g_.result_u64 = c.mcc_.io_dirty_mask(); break;
                    case 3: c.mcc_.io_set_dirty(reg, false); break;
                }
                c.g_.wake(e);
            });
        }
        std::uint64_t await_resume() const noexcept { return c.g_.result_u64; }
    };
    IoAw io_read(int reg) { return {*this, reg, 0, 0}; }
    IoAw io_write(int reg, std::uint64_t v) { return {*this, reg, v, 1}; }
    IoAw io_dirty_mask() { return {*this, 0, 0, 2}; }
    IoAw io_mark_clean(int reg) { return {*this, reg, 0, 3}; }

private:
    Simulator& sim_;
    Guest& g_;
    Mcc& mcc_;
};

}  // namespace farsim
