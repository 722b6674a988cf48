#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "farsim/config.hpp"
#include "farsim/counters.hpp"
#include "farsim/guest/guest.hpp"
#include "farsim/host/cpu.hpp"
#include "farsim/mcc/mcc.hpp"
#include "farsim/mem/mem_system.hpp"
#include "farsim/rng.hpp"
#include "farsim/sim/event_queue.hpp"

namespace farsim {

class MccCtx;
class HostCtx;

using CpProgram = std::function<GuestTask(MccCtx&)>;
using HostProgram = std::function<GuestTask(HostCtx&)>;

class CpGuest;
class HostGuest;

// One simulation instance: event engine, memory system, MCCs, CPU cores,
// inter-MCC FIFOs and the guest registry. Single-threaded; independent
// instances may run in parallel harness cells.
class Simulator : public SpadPort {
public:
    explicit Simulator(Config cfg);
    ~Simulator();

    Engine& engine() { return eng_; }
    const Config& config() const { return cfg_; }
    MemSystem& mem() { return *mem_; }
    PerfCounters& counters() { return ctr_; }
    const MemParams& params() const { return mem_->params(); }

    int n_mcc() const { return static_cast<int>(mccs_.size()); }
    int n_cpu() const { return static_cast<int>(cpus_.size()); }
    Mcc& mcc(int i) { return *mccs_.at(static_cast<std::size_t>(i)); }
    CpuCore& cpu(int i) { return *cpus_.at(static_cast<std::size_t>(i)); }
    InterMccFifo& fifo(int from, int to);
    const MmioParams& mmio_params() const { return mmio_; }

    // Strictly increasing 64-bit counter tied to simulation time.
    std::uint64_t global_counter(SimTime t);

    std::uint64_t seed() const { return seed_; }
    RngStream rng(std::string_view workload, std::string_view role) const {
        return RngStream::derive(seed_, workload, role);
    }

    // ---- guests ----
    HostGuest& add_host(int core, const std::string& name, HostProgram prog,
                        SimTime start_at = 0);
    // Direct CP activation (tests and workload setup); spawn-timed activation
    // goes through HostCtx::spawn.
    CpGuest& activate_cp(int mcc, const std::string& name, CpProgram prog,
                         SimTime start_at = 0);

    void register_guest(Guest* g) { guests_.push_back(g); }
    const std::vector<Guest*>& guests() const { return guests_; }

    // Runs to quiescence (or the limit) and verifies no guest is left
    // blocked; names blocked guests in the DeadlockError.
    RunStats run(SimTime limit = kNoLimit);

    // SpadPort (CPU window paths land on the owning MCC)
    void cpu_fetch(int mcc, int line, SimTime arrival,
                   std::function<void(SimTime, const std::uint8_t*)> serve) override;
    void cpu_writeback(int mcc, int line, SimTime arrival,
                       const std::uint8_t* data) override;
    std::span<const std::uint8_t> peek(int mcc, int line) const override;

    void record_host_failure(const std::string& what);

    // Busy/idle rollup into the counters snapshot.
    void snapshot_guest_stats();

private:
    Config cfg_;
    Engine eng_;
    PerfCounters ctr_;
    std::unique_ptr<MemSystem> mem_;
    std::vector<std::unique_ptr<Mcc>> mccs_;
    std::vector<std::unique_ptr<CpuCore>> cpus_;
    std::vector<std::unique_ptr<InterMccFifo>> fifos_;  // from * n + to
    MmioParams mmio_;
    std::uint64_t seed_ = 0;
    std::uint64_t gc_last_ = 0;
    std::vector<std::unique_ptr<Guest>> owned_guests_;
    std::vector<Guest*> guests_;
    std::string host_failure_;
    std::uint64_t max_events_ = 0;
};

// ---- concrete guest kinds --------------------------------------------------

class CpGuest : public Guest {
public:
    CpGuest(Simulator& sim, int mcc, std::string name);
    ~CpGuest() override;
    int mcc_id() const { return mcc_; }
    MccCtx& ctx() { return *ctx_; }
    void launch(CpProgram prog, SimTime at);

protected:
    void on_finished() override;

private:
    int mcc_;
    std::unique_ptr<MccCtx> ctx_;
    CpProgram prog_;  // owns the closure for the coroutine's lifetime
};

class HostGuest : public Guest {
public:
    HostGuest(Simulator& sim, int core, std::string name);
    ~HostGuest() override;
    int core_id() const { return core_; }
    HostCtx& ctx() { return *ctx_; }
    void launch(HostProgram prog, SimTime at);

protected:
    void on_finished() override;

private:
    int core_;
    std::unique_ptr<HostCtx> ctx_;
    HostProgram prog_;  // owns the closure for the coroutine's lifetime
};

}  // namespace farsim
