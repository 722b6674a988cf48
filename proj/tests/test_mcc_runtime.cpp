#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <map>
#include <vector>

#include "farsim/host/host_ctx.hpp"
#include "farsim/mcc/mcc_ctx.hpp"
#include "farsim/simulator.hpp"

using namespace farsim;

namespace {

Config cfg4(const std::string& extra = "") {
    return Config::from_string(
        "mcc.count = 4\n"
        "cpu.cores = 1\n"
        "mem.far_bytes = 8388608\n"
        "mem.local_bytes = 1048576\n" +
        extra);
}

}  // namespace

TEST_CASE("single-line copy stamps read_ts about one internal latency later") {
    Simulator sim(cfg4());
    std::uint64_t faddr = sim.mem().far_base();
    std::uint64_t pattern = 0x1122334455667788ull;
    std::memcpy(sim.mem().far().raw(faddr, 8).data(), &pattern, 8);

    SimTime elapsed = 0;
    std::uint64_t got = 0;
    sim.activate_cp(0, "cp", [&](MccCtx& c) -> GuestTask {
        SimTime t0 = c.guest().local_now();
        std::uint64_t since = c.mcc().line(3).read_ts;
        co_await c.copy_start({CopyCommand::Dir::FarToSpad, faddr, 3, 1});
        CHECK(!co_await c.copy_done(3, true, since));  // straight after issue
        co_await c.await_ts(3, true, since);
        elapsed = c.guest().local_now() - t0;
        got = c.spad_peek_u64(3, 0);
        co_return;
    });
    sim.run();
    CHECK(got == pattern);
    CHECK(elapsed >= 238);
    CHECK(elapsed <= 238 + 40);  // issue + poll cycles on top of the DDR path
}

TEST_CASE("two interleaved single-line reads complete within one queueing window") {
    Simulator sim(cfg4());
    std::uint64_t faddr = sim.mem().far_base();
    SimTime elapsed = 0;
    sim.activate_cp(0, "cp", [&](MccCtx& c) -> GuestTask {
        SimTime t0 = c.guest().local_now();
        std::uint64_t s0 = c.mcc().line(0).read_ts;
        std::uint64_t s1 = c.mcc().line(1).read_ts;
        // Same channel: line-index parity picks the channel, so use stride 2.
        co_await c.copy_start({CopyCommand::Dir::FarToSpad, faddr, 0, 1});
        co_await c.copy_start({CopyCommand::Dir::FarToSpad, faddr + 256, 1, 1});
        co_await c.await_ts(0, true, s0);
        co_await c.await_ts(1, true, s1);
        elapsed = c.guest().local_now() - t0;
        co_return;
    });
    sim.run();
    CHECK(elapsed >= 238);
    CHECK(elapsed <= 238 + 15 + 60);  // second op only pays the service gap
}

TEST_CASE("copy preconditions and conflicts") {
    SUBCASE("line_count zero is rejected") {
        Simulator sim(cfg4());
        auto& cp = sim.activate_cp(0, "cp", [&](MccCtx& c) -> GuestTask {
            co_await c.copy_start({CopyCommand::Dir::FarToSpad, c.sim().mem().far_base(), 0, 0});
            co_return;
        });
        sim.run();
        CHECK(cp.state() == GuestState::Failed);
        CHECK(sim.mcc(0).io_read(31) == (0xdead0000ull | 1));
    }
    SUBCASE("overlapping in-flight copy is an error") {
        Simulator sim(cfg4());
        auto& cp = sim.activate_cp(0, "cp", [&](MccCtx& c) -> GuestTask {
            co_await c.copy_start({CopyCommand::Dir::FarToSpad, c.sim().mem().far_base(), 5, 1});
            co_await c.copy_start(
                {CopyCommand::Dir::FarToSpad, c.sim().mem().far_base() + 4096, 5, 1});
            co_return;
        });
        sim.run();
        CHECK(cp.state() == GuestState::Failed);
        CHECK(cp.failure().find("overlap") != std::string::npos);
    }
}

TEST_CASE("timestamps equal the global counter at completion and increase per line") {
    Simulator sim(cfg4());
    std::uint64_t faddr = sim.mem().far_base();
    std::vector<std::uint64_t> stamps;
    sim.activate_cp(0, "cp", [&](MccCtx& c) -> GuestTask {
        for (int i = 0; i < 5; ++i) {
            std::uint64_t since = c.mcc().line(0).read_ts;
            co_await c.copy_start({CopyCommand::Dir::FarToSpad, faddr, 0, 1});
            co_await c.await_ts(0, true, since);
            stamps.push_back(c.mcc().line(0).read_ts);
        }
        co_return;
    });
    sim.run();
    for (size_t i = 1; i < stamps.size(); ++i) CHECK(stamps[i] > stamps[i - 1]);
    // Counter is time-derived: stamp/1024 is the completion instant in ns.
    CHECK((stamps[0] >> 10) >= 238);
}

TEST_CASE("polling loop observes completion at the next poll instant") {
    Simulator sim(cfg4());
    std::uint64_t faddr = sim.mem().far_base();
    SimTime done_at = 0;
    int polls = 0;
    sim.activate_cp(0, "cp", [&](MccCtx& c) -> GuestTask {
        std::uint64_t since = c.mcc().line(0).read_ts;
        co_await c.copy_start({CopyCommand::Dir::FarToSpad, faddr, 0, 1});
        while (!co_await c.copy_done(0, true, since)) {
            c.compute(30);  // 100 ns poll period
            ++polls;
        }
        done_at = c.guest().local_now();
        co_return;
    });
    sim.run();
    CHECK(polls >= 2);
    CHECK(done_at >= 238);
    CHECK(done_at <= 238 + 110);  // completion rounded up to the next poll
}

TEST_CASE("read lock defers the CPU read until the CP releases modified data") {
    Simulator sim(cfg4());
    std::uint64_t window = addrmap::kSpadCachedBase;  // mcc 0, line 0
    std::uint64_t got = 0;
    SimTime cpu_elapsed = 0;

    sim.activate_cp(0, "cp", [&](MccCtx& c) -> GuestTask {
        co_await c.lock(0, LockMode::ReadLocked);
        auto ev = co_await c.await_notify();
        REQUIRE(ev.has_value());
        CHECK(ev->req == NotifierEvent::Req::CpuRead);
        CHECK(ev->line == 0);
        c.spad_poke_u64(0, 0, 0xfeedface00ull);  // modify before releasing
        co_await c.unlock(0);
        co_return;
    });
    sim.add_host(0, "h", [&](HostCtx& c) -> GuestTask {
        co_await c.sleep_ns(500);  // let the CP take the lock
        SimTime t0 = c.guest().local_now();
        got = co_await c.load(window);
        cpu_elapsed = c.guest().local_now() - t0;
        co_return;
    });
    sim.run();
    CHECK(got == 0xfeedface00ull);
    // Round trip plus notifier delay and CP handling; far beyond a plain fetch.
    CHECK(cpu_elapsed > 1100);
}

TEST_CASE("unlocked scratchpad line is served without CP involvement") {
    Simulator sim(cfg4());
    std::uint64_t window = addrmap::kSpadCachedBase + 2 * 128;
    std::uint64_t pattern = 0x77;
    sim.mcc(0).line(2).data[0] = static_cast<std::uint8_t>(pattern);
    std::uint64_t got = 1;
    sim.add_host(0, "h", [&](HostCtx& c) -> GuestTask {
        got = co_await c.load(window, 1);
        co_return;
    });
    sim.run();
    CHECK(got == pattern);
}

TEST_CASE("write-locked line: writeback lands immediately, acquisition stalls until release") {
    Simulator sim(cfg4());
    std::uint64_t window = addrmap::kSpadCachedBase + 7 * 128;
    SimTime wb_seen_at = 0, store_path_done = 0;
    std::uint64_t cp_saw = 0;

    sim.activate_cp(0, "cp", [&](MccCtx& c) -> GuestTask {
        co_await c.lock(7, LockMode::WriteLocked);
        // First notification: the CPU's write-allocate fetch, deferred by the
        // lock. Hold it for a while, then release and relock for the data.
        auto ev = co_await c.await_notify();
        REQUIRE(ev.has_value());
        CHECK(ev->req == NotifierEvent::Req::CpuRead);
        c.compute(600);  // hold the line for 2 us
        co_await c.yield();
        co_await c.unlock(7);
        co_await c.lock(7, LockMode::WriteLocked);
        ev = co_await c.await_notify();
        REQUIRE(ev.has_value());
        CHECK(ev->req == NotifierEvent::Req::CpuWrite);  // flushed data arrives
        wb_seen_at = c.guest().local_now();
        cp_saw = c.spad_peek_u64(7, 0);
        co_await c.unlock(7);
        co_return;
    });
    sim.add_host(0, "h", [&](HostCtx& c) -> GuestTask {
        co_await c.sleep_ns(300);
        co_await c.store(window, 0xc0ffee11ull);  // write-allocate fetch is deferred
        co_await c.flush(window);
        std::uint64_t v = co_await c.load(window);  // hits the local dirty copy
        CHECK(v == 0xc0ffee11ull);
        store_path_done = c.guest().local_now();
        co_return;
    });
    sim.run();
    CHECK(cp_saw == 0xc0ffee11ull);
    CHECK(wb_seen_at > 2000);
    CHECK(store_path_done > 2000);  // the line was not granted before release
}

TEST_CASE("notifier events pop in arrival order") {
    Simulator sim(cfg4());
    std::vector<int> order;
    sim.activate_cp(0, "cp", [&](MccCtx& c) -> GuestTask {
        for (int i = 0; i < 3; ++i) {
            auto ev = co_await c.await_notify();
            order.push_back(ev->line);
        }
        co_return;
    });
    sim.add_host(0, "h", [&](HostCtx& c) -> GuestTask {
        std::uint64_t base = addrmap::kSpadCachedBase;
        // Lock lines so writebacks notify; write 3, 1, 2 in that order.
        co_return;
        (void)base;
    });
    // Drive notifications directly in arrival order.
    sim.engine().schedule_at(100, [&] { sim.mcc(0).notify({3, NotifierEvent::Req::CpuWrite}, 100); });
    sim.engine().schedule_at(200, [&] { sim.mcc(0).notify({1, NotifierEvent::Req::CpuWrite}, 200); });
    sim.engine().schedule_at(300, [&] { sim.mcc(0).notify({2, NotifierEvent::Req::CpuWrite}, 300); });
    sim.run();
    CHECK(order == std::vector<int>{3, 1, 2});
}

TEST_CASE("non-blocking notifier pop on empty queue returns empty") {
    Simulator sim(cfg4());
    bool empty_seen = false;
    sim.activate_cp(0, "cp", [&](MccCtx& c) -> GuestTask {
        auto ev = co_await c.notify_poll();
        empty_seen = !ev.has_value();
        co_return;
    });
    sim.run();
    CHECK(empty_seen);
}

TEST_CASE("notifier overflow aborts with diagnostics") {
    Simulator sim(cfg4("mcc.notifier_depth = 4\n"));
    CHECK_THROWS_AS(
        [&] {
            for (int i = 0; i < 5; ++i)
                sim.mcc(0).notify({i, NotifierEvent::Req::CpuWrite}, 0);
        }(),
        SimulationError);
}

TEST_CASE("fifo roundtrip, capacity backpressure and conservation") {
    SUBCASE("send then recv transfers the word") {
        Simulator sim(cfg4());
        std::uint64_t got = 0;
        sim.activate_cp(0, "tx", [&](MccCtx& c) -> GuestTask {
            co_await c.fifo_send(1, 0xdeadbeef);
            co_return;
        });
        sim.activate_cp(1, "rx", [&](MccCtx& c) -> GuestTask {
            auto w = co_await c.fifo_recv(0);
            got = *w;
            co_return;
        });
        sim.run();
        CHECK(got == 0xdeadbeef);
        CHECK(sim.counters().fifo_words == 1);
    }

    SUBCASE("1025th send blocks until a recv frees space") {
        Simulator sim(cfg4());
        SimTime sender_done = 0;
        sim.activate_cp(0, "tx", [&](MccCtx& c) -> GuestTask {
            for (int i = 0; i < 1025; ++i) co_await c.fifo_send(1, i);
            sender_done = c.guest().local_now();
            co_return;
        });
        sim.activate_cp(1, "rx", [&](MccCtx& c) -> GuestTask {
            co_await c.yield();
            c.compute(30000);  // wait 100 us before draining
            co_await c.yield();
            for (int i = 0; i < 1025; ++i) {
                auto w = co_await c.fifo_recv(0);
                CHECK(*w == static_cast<std::uint64_t>(i));
            }
            co_return;
        });
        sim.run();
        CHECK(sender_done > 100000);  // blocked on the full fifo
    }

    SUBCASE("all-to-all random exchange conserves per-pair words in order") {
        Simulator sim(cfg4());
        const int n = 4;
        const int per_pair = 2500;
        std::map<std::pair<int, int>, std::vector<std::uint64_t>> received;
        for (int me = 0; me < n; ++me) {
            sim.activate_cp(me, "cp" + std::to_string(me), [&, me](MccCtx& c) -> GuestTask {
                RngStream rng = c.sim().rng("fifo-fuzz", "mcc" + std::to_string(me));
                // Interleave sends and receives to exercise backpressure.
                std::vector<int> sent(n, 0), got(n, 0);
                bool progress = true;
                while (progress) {
                    progress = false;
                    for (int peer = 0; peer < n; ++peer) {
                        if (peer == me) continue;
                        if (sent[peer] < per_pair) {
                            std::uint64_t word =
                                (static_cast<std::uint64_t>(me) << 48) | sent[peer]++;
                            co_await c.fifo_send(peer, word);
                            progress = true;
                        }
                        if (got[peer] < per_pair) {
                            auto w = co_await c.fifo_recv_poll(peer);
                            if (w) {
                                received[{peer, me}].push_back(*w);
                                got[peer]++;
                            }
                            progress = true;
                        }
                    }
                    (void)rng;
                    // Keep polling until every pair is drained.
                    bool done = true;
                    for (int p = 0; p < n; ++p)
                        if (p != me && (sent[p] < per_pair || got[p] < per_pair)) done = false;
                    if (!done) progress = true;
                }
                co_return;
            });
        }
        sim.run();
        for (int from = 0; from < n; ++from) {
            for (int to = 0; to < n; ++to) {
                if (from == to) continue;
                auto& v = received[{from, to}];
                REQUIRE(v.size() == per_pair);
                for (int i = 0; i < per_pair; ++i)
                    CHECK(v[static_cast<size_t>(i)] ==
                          ((static_cast<std::uint64_t>(from) << 48) | i));
            }
        }
        CHECK(sim.counters().fifo_words == 4ull * 3ull * per_pair);
    }
}

TEST_CASE("compute cost converts cycles to nanoseconds at the MCC clock") {
    Simulator sim(cfg4());
    SimTime elapsed = 0;
    sim.activate_cp(0, "cp", [&](MccCtx& c) -> GuestTask {
        SimTime t0 = c.guest().local_now();
        c.compute(300);
        co_await c.yield();
        elapsed = c.guest().local_now() - t0;
        co_return;
    });
    sim.run();
    CHECK(elapsed == 1000);  // 300 cycles at 300 MHz
}

TEST_CASE("exit code zero with no work costs nothing beyond dispatch") {
    Simulator sim(cfg4());
    auto& cp = sim.activate_cp(0, "cp", [&](MccCtx& c) -> GuestTask {
        c.exit(0);
        co_return;
    });
    RunStats s = sim.run();
    CHECK(cp.state() == GuestState::Done);
    CHECK(cp.exit_code() == 0);
    CHECK(cp.busy_cycles() == 0);
    CHECK(s.final_time == 0);
    CHECK(sim.mcc(0).io_read(31) == 0);
    CHECK(sim.mcc(0).io_dirty(31));
}

TEST_CASE("spawn model hits the 1 ms anchor and orders verified above unverified") {
    Simulator sim(cfg4());
    Mcc& m = sim.mcc(0);
    SimTime v16 = m.spawn_receive(16 * 1024, true, 0);
    CHECK(v16 > 800000);
    CHECK(v16 < 1200000);
    CHECK(m.spawn_receive(0, false, 0) == 200000);  // base cost only
    for (std::uint64_t sz : {1024ull, 8192ull, 16384ull, 32768ull})
        CHECK(m.spawn_receive(sz, true, 0) > m.spawn_receive(sz, false, 0));
    // Verification dominates at the top of the range.
    SimTime v32 = m.spawn_receive(32 * 1024, true, 0);
    SimTime u32 = m.spawn_receive(32 * 1024, false, 0);
    CHECK(v32 - u32 > u32);
    CHECK_THROWS_AS(m.spawn_receive(64 * 1024, true, 0), SpawnError);
}

TEST_CASE("host spawn resolves ready and runs the CP; busy target fails") {
    Simulator sim(cfg4());
    std::uint64_t side_effect = 0;
    SpawnHandle::State first_state{}, second_state{};
    SimTime ready_elapsed = 0;
    sim.add_host(0, "h", [&](HostCtx& c) -> GuestTask {
        SimTime t0 = c.guest().local_now();
        auto* h1 = co_await c.spawn(2, "worker", 1024, false, [&](MccCtx& mc) -> GuestTask {
            side_effect = 42;
            mc.compute(3000000);  // stay busy ~10 ms
            co_await mc.yield();
            mc.exit(7);
            co_return;
        });
        co_await c.await_spawn(h1);
        first_state = h1->state;
        ready_elapsed = c.guest().local_now() - t0;
        auto* h2 = co_await c.spawn(2, "interloper", 1024, false,
                                    [](MccCtx& mc) -> GuestTask {
                                        mc.exit(0);
                                        co_return;
                                    });
        second_state = h2->state;  // mcc 2 still busy at signal time
        co_return;
    });
    sim.run();
    CHECK(first_state == SpawnHandle::State::Ready);
    CHECK(side_effect == 42);
    // Base-cost dominated for a 1 KiB control block.
    CHECK(ready_elapsed > 200000);
    CHECK(ready_elapsed < 260000);
    CHECK(second_state == SpawnHandle::State::Failed);
}

TEST_CASE("mmio write then read-back returns the written value") {
    Simulator sim(cfg4());
    MmioValue got{};
    sim.add_host(0, "h", [&](HostCtx& c) -> GuestTask {
        co_await c.mmio_write(1, 5, 0xabcd);
        co_await c.sleep_ns(1000);
        got = co_await c.mmio_read(1, 5);
        co_return;
    });
    sim.run();
    CHECK(got.value == 0xabcd);
    CHECK(got.dirty);
    CHECK(sim.counters().mmio_ops == 2);
}

TEST_CASE("mcc io register access costs nine core cycles") {
    Simulator sim(cfg4());
    SimTime elapsed = 0;
    sim.activate_cp(0, "cp", [&](MccCtx& c) -> GuestTask {
        SimTime t0 = c.guest().local_now();
        co_await c.io_write(3, 99);
        elapsed = c.guest().local_now() - t0;
        co_return;
    });
    sim.run();
    CHECK(elapsed == 30);  // ceil(9 cycles at 300 MHz)
}
