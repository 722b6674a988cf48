#pragma once

#include <coroutine>
#include <cstring>
#include <memory>
#include <span>
#include <vector>

#include "farsim/guest/guest.hpp"
#include "farsim/host/cpu.hpp"
#include "farsim/simulator.hpp"

namespace farsim {

struct SpawnHandle {
    enum class State { Copying, Verifying, Ready, Failed };
    int mcc = -1;
    std::uint64_t cb_bytes = 0;
    State state = State::Copying;
    SimTime ready_at = 0;
    CpGuest* cp = nullptr;
    Guest* waiter = nullptr;
};

struct MmioValue {
    std::uint64_t value = 0;
    bool dirty = false;
};

// Host-program view of one CPU core.
class HostCtx {
public:
    HostCtx(Simulator& sim, Guest& g, CpuCore& core) : sim_(sim), g_(g), core_(core) {}

    Simulator& sim() { return sim_; }
    Guest& guest() { return g_; }
    CpuCore& core() { return core_; }
    int core_id() const { return core_.id(); }

    void compute(double cycles) { g_.charge(cycles); }
    void compute_ns(SimTime ns) { g_.charge(cycles_from_ns(ns, g_.freq_hz())); }
    void exit(int code) { g_.set_exit_code(code); }

    // Committed-state read; valid right after a load of the covering line.
    void read_bytes(std::uint64_t addr, std::span<std::uint8_t> out) {
        sim_.mem().read_committed(addr, out);
    }

    struct SleepAw {
        HostCtx& c;
        SimTime ns;
        bool await_ready() const noexcept { return false; }
        void await_suspend(std::coroutine_handle<> h) {
            c.g_.set_resume_handle(h);
            SimTime e = c.g_.local_now() + ns;
            c.sim_.engine().schedule_at(e, [&g = c.g_, e] { g.wake(e); });
        }
        void await_resume() const noexcept {}
    };
    SleepAw sleep_ns(SimTime ns) { return {*this, ns}; }
    SleepAw yield() { return {*this, 0}; }

    struct LoadAw {
        HostCtx& c;
        std::uint64_t addr;
        std::uint64_t size;
        std::uint64_t out = 0;
        bool await_ready() const noexcept { return false; }
        void await_suspend(std::coroutine_handle<> h);
        std::uint64_t await_resume() const noexcept { return out; }
    };
    // Blocking load of up to 8 bytes (in-order core semantics).
    LoadAw load(std::uint64_t addr, std::uint64_t size = 8) { return {*this, addr, size}; }

    struct StoreAw {
        HostCtx& c;
        std::uint64_t addr;
        std::uint64_t value;
        std::uint64_t size;
        bool await_ready() const noexcept { return false; }
        void await_suspend(std::coroutine_handle<> h);
        void await_resume() const noexcept {}
    };
    StoreAw store(std::uint64_t addr, std::uint64_t value, std::uint64_t size = 8) {
        return {*this, addr, value, size};
    }

    struct CacheOpAw {
        HostCtx& c;
        std::uint64_t addr;
        int op;  // 0=flush, 1=invalidate, 2=prefetch
        bool await_ready() const noexcept { return false; }
        void await_suspend(std::coroutine_handle<> h);
        void await_resume() const noexcept {}
    };
    CacheOpAw flush(std::uint64_t addr) { return {*this, addr, 0}; }
    CacheOpAw invalidate(std::uint64_t addr) { return {*this, addr, 1}; }
    CacheOpAw prefetch(std::uint64_t addr) { return {*this, addr, 2}; }

    struct FenceReadbackAw {
        HostCtx& c;
        std::uint64_t addr;
        std::uint64_t out = 0;
        bool await_ready() const noexcept { return false; }
        void await_suspend(std::coroutine_handle<> h);
        std::uint64_t await_resume() const noexcept { return out; }
    };
    // Invalidate + dependent read: observes the committed far-memory line,
    // which is how flush completion becomes visible.
    FenceReadbackAw fence_readback(std::uint64_t addr) { return {*this, addr}; }

    struct MmioWriteAw {
        HostCtx& c;
        int mcc, reg;
        std::uint64_t value;
        bool mark_clean;
        bool await_ready() const noexcept { return false; }
        void await_suspend(std::coroutine_handle<> h);
        void await_resume() const noexcept {}
    };
    MmioWriteAw mmio_write(int mcc, int reg, std::uint64_t v) {
        return {*this, mcc, reg, v, false};
    }
    MmioWriteAw mmio_clean(int mcc, int reg) { return {*this, mcc, reg, 0, true}; }

    struct MmioReadAw {
        HostCtx& c;
        int mcc, reg;
        MmioValue out;
        bool await_ready() const noexcept { return false; }
        void await_suspend(std::coroutine_handle<> h);
        MmioValue await_resume() const noexcept { return out; }
    };
    MmioReadAw mmio_read(int mcc, int reg) { return {*this, mcc, reg, {}}; }
    // One MMIO op returning the dirty bitmap of all 32 registers.
    MmioReadAw mmio_read_mask(int mcc) { return {*this, mcc, -1, {}}; }

    struct SpawnAw {
        HostCtx& c;
        int mcc;
        std::string name;
        std::uint64_t cb_bytes;
        bool verify;
        CpProgram prog;
        SpawnHandle* out = nullptr;
        bool await_ready() const noexcept { return false; }
        void await_suspend(std::coroutine_handle<> h);
        SpawnHandle* await_resume() const noexcept { return out; }
    };
    // Copies the control block through the scratchpad window and resolves the
    // handle Ready on the MCC's acknowledgement.
    SpawnAw spawn(int mcc, std::string name, std::uint64_t cb_bytes, bool verify,
                  CpProgram prog) {
        return {*this, mcc, std::move(name), cb_bytes, verify, std::move(prog)};
    }

    struct AwaitSpawnAw {
        HostCtx& c;
        SpawnHandle* handle;
        bool await_ready() const noexcept { return false; }
        void await_suspend(std::coroutine_handle<> h);
        bool await_resume() const noexcept { return handle->state == SpawnHandle::State::Ready; }
    };
    AwaitSpawnAw await_spawn(SpawnHandle* handle) { return {*this, handle}; }

    std::vector<std::unique_ptr<SpawnHandle>> spawn_handles;

private:
    Simulator& sim_;
    Guest& g_;
    CpuCore& core_;
};

}  // namespace farsim
