#include <cstring>

#include "farsim/host/host_ctx.hpp"
#include "farsim/mcc/mcc_ctx.hpp"

namespace farsim {

void HostCtx::LoadAw::await_suspend(std::coroutine_handle<> h) {
    Guest& g = c.guest();
    g.set_resume_handle(h);
    g.charge(1);  // issue
    SimTime e = g.local_now();
    c.sim().engine().schedule_at(e, [this, e, &g] {
        c.core().load(addr, size, e, [this, &g](SimTime ready) {
            std::uint64_t v = 0;
            c.sim().engine().schedule_at(ready, [this, &g, ready, v]() mutable {
                std::uint8_t buf[8] = {0};
                c.read_bytes(addr, {buf, size});
                std::memcpy(&v, buf, 8);
                out = v;
                g.wake(ready);
            });
        });
    });
}

void HostCtx::StoreAw::await_suspend(std::coroutine_handle<> h) {
    Guest& g = c.guest();
    g.set_resume_handle(h);
    g.charge(1);
    SimTime e = g.local_now();
    c.sim().engine().schedule_at(e, [this, e, &g] {
        std::uint8_t buf[8];
        std::memcpy(buf, &value, 8);
        std::vector<std::uint8_t> bytes(buf, buf + size);
        c.core().store(addr, bytes, e, [&g](SimTime done) { g.resume_at(done); });
    });
}

void HostCtx::CacheOpAw::await_suspend(std::coroutine_handle<> h) {
    Guest& g = c.guest();
    g.set_resume_handle(h);
    const MemParams& p = c.sim().params();
    switch (op) {
        case 0: c.compute_ns(p.cpu_flush_ns); break;
        case 1: c.compute_ns(p.cpu_inval_ns); break;
        case 2: g.charge(1); break;
    }
    SimTime e = g.local_now();
    c.sim().engine().schedule_at(e, [this, e, &g] {
        switch (op) {
            case 0: c.core().flush(addr, e); break;
            case 1: c.core().invalidate(addr, e); break;
            case 2: c.core().prefetch(addr, e); break;
        }
        g.wake(e);
    });
}

void HostCtx::FenceReadbackAw::await_suspend(std::coroutine_handle<> h) {
    Guest& g = c.guest();
    g.set_resume_handle(h);
    const MemParams& p = c.sim().params();
    c.compute_ns(p.cpu_inval_ns);
    SimTime e = g.local_now();
    c.sim().engine().schedule_at(e, [this, e, &g] {
        auto go = [this, &g](SimTime t) {
            c.core().invalidate(addr, t);
            c.core().load(addr, 8, t, [this, &g](SimTime ready) {
                c.sim().engine().schedule_at(ready, [this, &g, ready] {
                    std::uint8_t buf[8] = {0};
                    c.read_bytes(addr, {buf, 8});
                    std::memcpy(&out, buf, 8);
                    g.wake(ready);
                });
            });
        };
        std::uint64_t laddr = c.sim().mem().line_of(addr);
        if (c.sim().mem().fill_in_flight(laddr)) {
            // Let the outstanding fill (and any flush queued behind it) land
            // before invalidating, preserving store -> flush -> readback order.
            c.sim().mem().add_fill_waiter(laddr, go);
        } else {
            go(e);
        }
    });
}

void HostCtx::MmioWriteAw::await_suspend(std::coroutine_handle<> h) {
    Guest& g = c.guest();
    g.set_resume_handle(h);
    g.charge(2);
    SimTime e = g.local_now();
    c.sim().engine().schedule_at(e, [this, e, &g] {
        if (mark_clean)
            c.core().mmio_mark_clean(mcc, reg, e, [&g](SimTime done) { g.resume_at(done); });
        else
            c.core().mmio_write(mcc, reg, value, e,
                                [&g](SimTime done) { g.resume_at(done); });
    });
}

void HostCtx::MmioReadAw::await_suspend(std::coroutine_handle<> h) {
    Guest& g = c.guest();
    g.set_resume_handle(h);
    g.charge(2);
    SimTime e = g.local_now();
    c.sim().engine().schedule_at(e, [this, e, &g] {
        c.core().mmio_read(mcc, reg, e,
                           [this, &g](SimTime done, std::uint64_t v, bool dirty) {
                               out.value = v;
                               out.dirty = dirty;
                               g.resume_at(done);
                           });
    });
}

void HostCtx::SpawnAw::await_suspend(std::coroutine_handle<> h) {
    Guest& g = c.guest();
    g.set_resume_handle(h);
    g.charge(2);
    SimTime e = g.local_now();
    auto handle = std::make_unique<SpawnHandle>();
    handle->mcc = mcc;
    handle->cb_bytes = cb_bytes;
    out = handle.get();
    c.spawn_handles.push_back(std::move(handle));
    c.sim().engine().schedule_at(e, [this, e, &g] {
        Simulator& sim = c.sim();
        Mcc& target = sim.mcc(mcc);
        if (target.busy()) {
            out->state = SpawnHandle::State::Failed;
            g.wake(e);
            return;
        }
        sim.counters().spawns++;
        // Reprogram signal plus the control-block copy over the link.
        SimTime t_signal = e + sim.mmio_params().write_ns;
        SimTime copy_done_t = sim.mem().link().request(t_signal, cb_bytes);
        sim.counters().link_bytes += cb_bytes;
        SimTime arrival = copy_done_t + sim.params().spad_oneway_ns;
        SimTime ready;
        try {
            ready = target.spawn_receive(cb_bytes, verify, arrival);
        } catch (const SpawnError&) {
            out->state = SpawnHandle::State::Failed;
            g.wake(e);
            return;
        }
        out->state = verify ? SpawnHandle::State::Verifying : SpawnHandle::State::Copying;
        out->ready_at = ready;
        CpGuest& cp = sim.activate_cp(mcc, name, prog, ready);
        out->cp = &cp;
        sim.engine().schedule_at(ready, [this] {
            out->state = SpawnHandle::State::Ready;
            if (out->waiter) {
                Guest* w = out->waiter;
                out->waiter = nullptr;
                w->wake(out->ready_at);
            }
        });
        g.wake(t_signal);
    });
}

void HostCtx::AwaitSpawnAw::await_suspend(std::coroutine_handle<> h) {
    Guest& g = c.guest();
    g.set_resume_handle(h);
    g.charge(2);
    SimTime e = g.local_now();
    c.sim().engine().schedule_at(e, [this, e, &g] {
        if (handle->state == SpawnHandle::State::Ready ||
            handle->state == SpawnHandle::State::Failed) {
            // Observe the acknowledgement register.
            c.core().mmio_read(handle->mcc, 31, e,
                               [&g](SimTime done, std::uint64_t, bool) { g.resume_at(done); });
        } else {
            g.block("await_spawn mcc " + std::to_string(handle->mcc), e);
            handle->waiter = &g;
        }
    });
}

}  // namespace farsim
