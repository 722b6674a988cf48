#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "farsim/config.hpp"
#include "farsim/counters.hpp"
#include "farsim/errors.hpp"
#include "farsim/mem/mem_system.hpp"
#include "farsim/sim/bandwidth.hpp"
#include "farsim/sim/event_queue.hpp"

namespace farsim {

class Guest;
class Simulator;

enum class LockMode { Unlocked, ReadLocked, WriteLocked };

struct NotifierEvent {
    enum class Req { CpuRead, CpuWrite, CopyReadDone, CopyWriteDone };
    int line = -1;
    Req req = Req::CpuRead;
};

struct CopyCommand {
    enum class Dir { FarToSpad, SpadToFar };
    Dir dir = Dir::FarToSpad;
    std::uint64_t far_line_addr = 0;
    int spad_index = 0;
    int line_count = 1;
};

// Per-action cycle costs on the MCC core. The 9-cycle I/O register access is
// fixed by the hardware; the rest are exposed through config.
struct MccCosts {
    double spad_access = 1;
    double lock = 2;
    double unlock = 2;
    double notifier_pop = 2;
    double fifo = 4;
    double ioreg = 9;
    double copy_issue = 6;

    static MccCosts from_config(const Config& c) {
        MccCosts k;
        k.spad_access = c.get_double("mcc.costs.spad_access", k.spad_access);
        k.lock = c.get_double("mcc.costs.lock", k.lock);
        k.unlock = c.get_double("mcc.costs.unlock", k.unlock);
        k.notifier_pop = c.get_double("mcc.costs.notifier_pop", k.notifier_pop);
        k.fifo = c.get_double("mcc.costs.fifo", k.fifo);
        k.ioreg = c.get_double("mcc.costs.ioreg", k.ioreg);
        k.copy_issue = c.get_double("mcc.costs.copy_issue", k.copy_issue);
        return k;
    }
};

// One word-granular FIFO per ordered MCC pair.
class InterMccFifo {
public:
    explicit InterMccFifo(std::size_t capacity) : capacity_(capacity) {}
    std::size_t size() const { return words_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool full() const { return words_.size() >= capacity_; }
    bool empty() const { return words_.empty(); }

    std::deque<std::uint64_t> words_;
    std::deque<Guest*> blocked_senders_;
    std::deque<std::uint64_t> blocked_words_;
    Guest* blocked_receiver_ = nullptr;

private:
    std::size_t capacity_;
};

// One Memory Channel Controller: scratchpad with line locks and pending
// CPU requests, hardware notifier queue, copy engine state, I/O registers.
class Mcc {
public:
    struct Line {
        std::vector<std::uint8_t> data;
        std::uint64_t read_ts = 0;
        std::uint64_t write_ts = 0;
        LockMode lock = LockMode::Unlocked;
        std::deque<std::pair<SimTime, std::function<void(SimTime, const std::uint8_t*)>>>
            pending;
    };

    Mcc(Simulator& sim, int id, const Config& cfg);

    int id() const { return id_; }
    int spad_lines() const { return static_cast<int>(lines_.size()); }
    Line& line(int i);
    const MccCosts& costs() const { return costs_; }

    Guest* cp() const { return cp_; }
    void bind_cp(Guest* g) { cp_ = g; }
    bool busy() const;

    // ---- scratchpad locking (CP side; caller charges cycles) --------------
    void lock_line(int i, LockMode mode);
    void unlock_line(int i, SimTime now);

    // ---- CPU window entry points (device side) -----------------------------
    void cpu_fetch(int line, SimTime arrival,
                   std::function<void(SimTime, const std::uint8_t*)> serve);
    void cpu_writeback(int line, SimTime arrival, const std::uint8_t* data);

    // ---- notifier ----------------------------------------------------------
    void notify(NotifierEvent ev, SimTime raise_time);
    std::optional<NotifierEvent> notifier_pop(SimTime now);
    bool notifier_has_visible(SimTime now) const;
    void set_notify_waiter(Guest* g);

    // ---- copy engine -------------------------------------------------------
    // Validates and starts a copy; per-line completions stamp timestamps,
    // raise CopyDone events and wake timestamp waiters. Call at issue time.
    void start_copy(const CopyCommand& cmd, SimTime issue_time);
    bool copy_done(int line, bool read_ts, std::uint64_t since) const;
    void add_ts_waiter(int line, bool read_ts, std::uint64_t since, Guest* g);

    // ---- I/O registers -----------------------------------------------------
    std::uint64_t io_read(int reg) const;
    void io_write(int reg, std::uint64_t v, bool set_dirty);
    bool io_dirty(int reg) const;
    void io_set_dirty(int reg, bool d);
    std::uint32_t io_dirty_mask() const;
    BandwidthServer& mmio_server() { return mmio_server_; }

    // ---- spawn model -------------------------------------------------------
    // Returns the ready time for a control block of cb_bytes arriving at
    // `arrival`; throws SpawnError over the size budget.
    SimTime spawn_receive(std::uint64_t cb_bytes, bool verify, SimTime arrival) const;

private:
    struct TsWaiter {
        int line;
        bool read_ts;
        std::uint64_t since;
        Guest* guest;
    };

    Simulator& sim_;
    int id_;
    MccCosts costs_;
    std::vector<Line> lines_;
    std::size_t pending_depth_;

    std::deque<std::pair<SimTime, NotifierEvent>> notifier_;  // (visible_at, ev)
    std::size_t notifier_depth_;
    Guest* notify_waiter_ = nullptr;
    bool notify_wake_scheduled_ = false;
    void maybe_wake_notify_waiter();

    std::set<int> copy_inflight_;
    std::vector<TsWaiter> ts_waiters_;

    std::vector<std::uint64_t> regs_;
    std::vector<bool> reg_dirty_;
    BandwidthServer mmio_server_;

    std::uint64_t spawn_base_ns_;
    double spawn_copy_ns_per_byte_;
    double spawn_verify_ns_per_byte_;
    std::uint64_t spawn_max_bytes_;

    Guest* cp_ = nullptr;

    void stamp_and_finish(const CopyCommand& cmd, int k, SimTime done);
    void wake_ts_waiters(int line, bool read_ts, SimTime now);
};

}  // namespace farsim
