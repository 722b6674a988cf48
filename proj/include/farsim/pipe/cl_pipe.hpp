#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "farsim/guest/subtask.hpp"
#include "farsim/host/host_ctx.hpp"
#include "farsim/mcc/mcc_ctx.hpp"

namespace farsim {

// Cache-line pipes built on scratchpad line locking.
//
// Line layout: byte 0 is the flag (a per-slot sequence 1..250, 255 = close),
// byte 1 the payload length, bytes 2..127 the payload. The flag byte is
// written last, so a writeback triggered by an eviction mid-compose carries a
// stale flag and the receiver ignores it; fault mode writes the flag first,
// reproducing the half-written-line bug class under cache pressure.
struct ClPipeLayout {
    static constexpr int kFlagOff = 0;
    static constexpr int kLenOff = 1;
    static constexpr int kPayloadOff = 2;
    static constexpr std::uint8_t kClose = 255;
    static constexpr std::size_t kPayloadMax = 126;

    static std::uint8_t flag_for_round(std::uint64_t round) {
        return static_cast<std::uint8_t>(round % 250) + 1;
    }
};

// Host -> MCC direction. One sender guest per pipe.
class HostClSender {
public:
    HostClSender(HostCtx& c, int mcc, int first_line, int k, bool torn_fault = false)
        : c_(c), mcc_(mcc), first_line_(first_line), k_(k), fault_(torn_fault) {}

    int lines() const { return k_; }

    SubTask<void> send(std::span<const std::uint8_t> payload) {
        if (closed_) throw ClosedError("cl pipe sender already closed");
        if (payload.size() > ClPipeLayout::kPayloadMax)
            throw EncodeError("message exceeds line payload");
        co_await send_line(payload, ClPipeLayout::flag_for_round(cursor_ / k_));
    }

    SubTask<void> close() {
        closed_ = true;
        co_await send_line({}, ClPipeLayout::kClose);
    }

private:
    SubTask<void> send_line(std::span<const std::uint8_t> payload, std::uint8_t flag) {
        int slot = static_cast<int>(cursor_ % k_);
        ++cursor_;
        std::uint64_t addr = line_addr(slot);
        if (!c_.sim().mem().cached(addr)) {
            // Request the line back; blocks while it is in flight or still
            // being processed by the CP.
            co_await c_.load(addr, 1);
        }
        if (fault_) co_await c_.store(addr + ClPipeLayout::kFlagOff, flag, 1);
        std::uint8_t len = static_cast<std::uint8_t>(payload.size());
        co_await c_.store(addr + ClPipeLayout::kLenOff, len, 1);
        for (std::size_t off = 0; off < payload.size(); off += 8) {
            std::uint64_t w = 0;
            std::size_t n = std::min<std::size_t>(8, payload.size() - off);
            std::memcpy(&w, payload.data() + off, n);
            co_await c_.store(addr + ClPipeLayout::kPayloadOff + off, w, n);
        }
        if (!fault_) co_await c_.store(addr + ClPipeLayout::kFlagOff, flag, 1);
        co_await c_.flush(addr);
        co_await c_.invalidate(addr);
        // Keep the ring primed: fetches for upcoming slots park at the CP and
        // are granted as their previous messages are consumed, so the grant
        // round trip overlaps with composition.
        if (k_ > 1) co_await c_.prefetch(line_addr(static_cast<int>(cursor_ % k_)));
        if (k_ > 2) co_await c_.prefetch(line_addr(static_cast<int>((cursor_ + 1) % k_)));
        if (k_ > 3) co_await c_.prefetch(line_addr(static_cast<int>((cursor_ + 2) % k_)));
    }

    std::uint64_t line_addr(int slot) const {
        return addrmap::kSpadCachedBase +
               static_cast<std::uint64_t>(mcc_) * addrmap::kSpadWindowStride +
               static_cast<std::uint64_t>(first_line_ + slot) * 128;
    }

    HostCtx& c_;
    int mcc_, first_line_, k_;
    bool fault_;
    std::uint64_t cursor_ = 0;
    bool closed_ = false;
};

// CP-side receiver for the host -> MCC direction. Call bind() once before
// the first recv to write-lock the ring.
class CpClReceiver {
public:
    CpClReceiver(MccCtx& c, int first_line, int k, double recv_line_cycles)
        : c_(c), first_line_(first_line), k_(k), recv_cycles_(recv_line_cycles) {}

    SubTask<void> bind() {
        for (int i = 0; i < k_; ++i)
            co_await c_.lock(first_line_ + i, LockMode::WriteLocked);
    }

    // Returns the payload, or nullopt when the sender closed the pipe.
    SubTask<std::optional<std::vector<std::uint8_t>>> recv() {
        for (;;) {
            int slot = static_cast<int>(cursor_ % k_);
            int li = first_line_ + slot;
            std::uint8_t expect = ClPipeLayout::flag_for_round(cursor_ / k_);
            std::uint8_t flag = c_.mcc().line(li).data[ClPipeLayout::kFlagOff];
            if (flag == expect || flag == ClPipeLayout::kClose) {
                c_.compute(recv_cycles_);  // notification + unmarshal + verify
                auto& data = c_.mcc().line(li).data;
                std::optional<std::vector<std::uint8_t>> out;
                if (flag != ClPipeLayout::kClose) {
                    std::size_t len = data[ClPipeLayout::kLenOff];
                    out.emplace(data.begin() + ClPipeLayout::kPayloadOff,
                                data.begin() + ClPipeLayout::kPayloadOff +
                                    static_cast<std::ptrdiff_t>(len));
                }
                data[ClPipeLayout::kFlagOff] = 0;
                c_.sim().counters().pipe_lines++;
                ++cursor_;
                co_await c_.unlock(li);  // serves the sender's pending refetch
                co_await c_.lock(li, LockMode::WriteLocked);
                co_return out;
            }
            auto ev = co_await c_.await_notify();
            if (ev && ev->req == NotifierEvent::Req::CpuRead) {
                // A compose-fetch for an already-consumed slot: grant it.
                auto& line = c_.mcc().line(ev->line);
                if (!line.pending.empty() &&
                    line.data[ClPipeLayout::kFlagOff] == 0) {
                    co_await c_.unlock(ev->line);
                    co_await c_.lock(ev->line, LockMode::WriteLocked);
                }
            }
        }
    }

private:
    MccCtx& c_;
    int first_line_, k_;
    double recv_cycles_;
    std::uint64_t cursor_ = 0;
};

// MCC -> CPU direction: the CP composes into read-locked lines and releases
// each one to the single reader waiting on it.
class CpClSender {
public:
    CpClSender(MccCtx& c, int first_line, int k, double marshal_cycles = 10)
        : c_(c), first_line_(first_line), k_(k), marshal_cycles_(marshal_cycles) {}

    SubTask<void> bind() {
        for (int i = 0; i < k_; ++i)
            co_await c_.lock(first_line_ + i, LockMode::ReadLocked);
    }

    SubTask<void> send(std::span<const std::uint8_t> payload) {
        co_await send_line(payload, ClPipeLayout::flag_for_round(cursor_ / k_));
    }

    SubTask<void> close() { co_await send_line({}, ClPipeLayout::kClose); }

private:
    SubTask<void> send_line(std::span<const std::uint8_t> payload, std::uint8_t flag) {
        int slot = static_cast<int>(cursor_ % k_);
        int li = first_line_ + slot;
        ++cursor_;
        // Wait for the reader's deferred fetch before filling the line.
        while (c_.mcc().line(li).pending.empty()) {
            co_await c_.await_notify();
        }
        c_.compute(marshal_cycles_);
        auto& data = c_.mcc().line(li).data;
        data[ClPipeLayout::kLenOff] = static_cast<std::uint8_t>(payload.size());
        std::copy(payload.begin(), payload.end(),
                  data.begin() + ClPipeLayout::kPayloadOff);
        data[ClPipeLayout::kFlagOff] = flag;
        c_.sim().counters().pipe_lines++;
        co_await c_.unlock(li);  // hands the line to the reader
        co_await c_.lock(li, LockMode::ReadLocked);
    }

    MccCtx& c_;
    int first_line_, k_;
    double marshal_cycles_;
    std::uint64_t cursor_ = 0;
};

class HostClReceiver {
public:
    HostClReceiver(HostCtx& c, int mcc, int first_line, int k)
        : c_(c), mcc_(mcc), first_line_(first_line), k_(k) {}

    SubTask<std::optional<std::vector<std::uint8_t>>> recv() {
        int slot = static_cast<int>(cursor_ % k_);
        std::uint64_t addr = line_addr(slot);
        std::uint8_t expect = ClPipeLayout::flag_for_round(cursor_ / k_);
        ++cursor_;
        co_await c_.invalidate(addr);
        // Pipeline fetches of the upcoming slots.
        for (int a = 1; a < k_; ++a)
            co_await c_.prefetch(line_addr(static_cast<int>((cursor_ - 1 + a) % k_)));
        co_await c_.load(addr, 1);
        std::uint8_t head[2];
        c_.read_bytes(addr, head);
        std::optional<std::vector<std::uint8_t>> out;
        if (head[0] == ClPipeLayout::kClose) co_return out;
        if (head[0] != expect)
            throw ProtocolError("cl pipe reader observed unexpected flag");
        out.emplace(head[1]);
        if (head[1] > 0) c_.read_bytes(addr + ClPipeLayout::kPayloadOff, *out);
        co_return out;
    }

private:
    std::uint64_t line_addr(int slot) const {
        return addrmap::kSpadCachedBase +
               static_cast<std::uint64_t>(mcc_) * addrmap::kSpadWindowStride +
               static_cast<std::uint64_t>(first_line_ + slot) * 128;
    }

    HostCtx& c_;
    int mcc_, first_line_, k_;
    std::uint64_t cursor_ = 0;
};

}  // namespace farsim
