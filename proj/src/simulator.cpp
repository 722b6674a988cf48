#include "farsim/simulator.hpp"

#include <algorithm>

#include "farsim/host/host_ctx.hpp"
#include "farsim/mcc/mcc_ctx.hpp"

namespace farsim {

Simulator::Simulator(Config cfg) : cfg_(std::move(cfg)) {
    MemParams p = MemParams::from_config(cfg_);
    mem_ = std::make_unique<MemSystem>(eng_, p, ctr_);
    mem_->set_spad_port(this);

    int n_mcc = static_cast<int>(cfg_.get_u64("mcc.count", 4));
    for (int i = 0; i < n_mcc; ++i) mccs_.push_back(std::make_unique<Mcc>(*this, i, cfg_));

    int n_cpu = static_cast<int>(cfg_.get_u64("cpu.cores", 4));
    for (int i = 0; i < n_cpu; ++i) cpus_.push_back(std::make_unique<CpuCore>(*this, i));
    ctr_.core_stall_ns.assign(static_cast<std::size_t>(n_cpu), 0);

    std::size_t fifo_words = cfg_.get_u64("mcc.fifo_words", 1024);
    fifos_.resize(static_cast<std::size_t>(n_mcc) * static_cast<std::size_t>(n_mcc));
    for (auto& f : fifos_) f = std::make_unique<InterMccFifo>(fifo_words);

    mmio_ = MmioParams::from_config(cfg_);
    seed_ = cfg_.get_u64("seed", 1);
    max_events_ = cfg_.get_u64("sim.max_events", 2000000000ull);
}

Simulator::~Simulator() = default;

InterMccFifo& Simulator::fifo(int from, int to) {
    if (from == to) throw ProtocolError("fifo requires distinct MCCs");
    return *fifos_.at(static_cast<std::size_t>(from) * mccs_.size() +
                      static_cast<std::size_t>(to));
}

std::uint64_t Simulator::global_counter(SimTime t) {
    std::uint64_t v = t << 10;
    if (v <= gc_last_) v = gc_last_ + 1;
    gc_last_ = v;
    return v;
}

HostGuest& Simulator::add_host(int core, const std::string& name, HostProgram prog,
                               SimTime start_at) {
    auto g = std::make_unique<HostGuest>(*this, core, name);
    HostGuest& ref = *g;
    owned_guests_.push_back(std::move(g));
    ref.launch(std::move(prog), start_at);
    return ref;
}

CpGuest& Simulator::activate_cp(int mcc_id, const std::string& name, CpProgram prog,
                                SimTime start_at) {
    Mcc& m = mcc(mcc_id);
    if (m.busy())
        throw SpawnError("mcc " + std::to_string(mcc_id) + " already runs a channel program");
    auto g = std::make_unique<CpGuest>(*this, mcc_id, name);
    CpGuest& ref = *g;
    owned_guests_.push_back(std::move(g));
    m.bind_cp(&ref);
    ref.launch(std::move(prog), start_at);
    return ref;
}

RunStats Simulator::run(SimTime limit) {
    eng_.set_event_budget(max_events_);
    RunStats total = eng_.run_until(limit);
    if (!host_failure_.empty()) throw SimError("host guest failed: " + host_failure_);
    if (limit == kNoLimit) {
        std::string blocked;
        for (Guest* g : guests_) {
            if (g->state() == GuestState::Blocked) {
                if (!blocked.empty()) blocked += ", ";
                blocked += g->name() + " (" + g->block_reason() + ")";
            }
        }
        if (!blocked.empty()) throw DeadlockError("blocked guests: " + blocked);
    }
    snapshot_guest_stats();
    return total;
}

void Simulator::cpu_fetch(int mcc_id, int line, SimTime arrival,
                          std::function<void(SimTime, const std::uint8_t*)> serve) {
    Mcc& m = mcc(mcc_id);
    eng_.schedule_at(arrival, [&m, line, arrival, serve = std::move(serve)] {
        m.cpu_fetch(line, arrival, serve);
    });
}

void Simulator::cpu_writeback(int mcc_id, int line, SimTime arrival,
                              const std::uint8_t* data) {
    mcc(mcc_id).cpu_writeback(line, arrival, data);
}

std::span<const std::uint8_t> Simulator::peek(int mcc_id, int line) const {
    return {mccs_.at(static_cast<std::size_t>(mcc_id))->line(line).data.data(),
            mccs_.at(static_cast<std::size_t>(mcc_id))->line(line).data.size()};
}

void Simulator::record_host_failure(const std::string& what) {
    if (host_failure_.empty()) host_failure_ = what;
}

void Simulator::snapshot_guest_stats() {
    ctr_.mcc_busy_cycles.assign(mccs_.size(), 0.0);
    ctr_.mcc_idle_ns.assign(mccs_.size(), 0);
    for (Guest* g : guests_) {
        if (auto* cp = dynamic_cast<CpGuest*>(g)) {
            std::size_t i = static_cast<std::size_t>(cp->mcc_id());
            ctr_.mcc_busy_cycles[i] += g->busy_cycles();
            ctr_.mcc_idle_ns[i] += g->blocked_ns();
        }
    }
}

// ---- concrete guests ---------------------------------------------------------

CpGuest::CpGuest(Simulator& sim, int mcc, std::string name)
    : Guest(sim, std::move(name), sim.params().mcc_freq_hz), mcc_(mcc) {
    ctx_ = std::make_unique<MccCtx>(sim, *this, sim.mcc(mcc));
}

CpGuest::~CpGuest() = default;

void CpGuest::launch(CpProgram prog, SimTime at) {
    prog_ = std::move(prog);
    start(prog_(*ctx_), at);
}

void CpGuest::on_finished() {
    // Exit status is surfaced to the host through I/O register 31.
    Mcc& m = sim_.mcc(mcc_);
    std::uint64_t status = state() == GuestState::Failed
                               ? (0xdead0000ull | 1)
                               : static_cast<std::uint64_t>(exit_code());
    m.io_write(31, status, true);
    m.bind_cp(nullptr);
}

HostGuest::HostGuest(Simulator& sim, int core, std::string name)
    : Guest(sim, std::move(name), sim.params().cpu_freq_hz), core_(core) {
    ctx_ = std::make_unique<HostCtx>(sim, *this, sim.cpu(core));
}

HostGuest::~HostGuest() = default;

void HostGuest::launch(HostProgram prog, SimTime at) {
    prog_ = std::move(prog);
    start(prog_(*ctx_), at);
}

void HostGuest::on_finished() {
    if (state() == GuestState::Failed) sim_.record_host_failure(name() + ": " + failure());
}

}  // namespace farsim
