#pragma once

#include <cstdint>

#include "farsim/guest/subtask.hpp"
#include "farsim/host/host_ctx.hpp"
#include "farsim/mcc/mcc_ctx.hpp"

namespace farsim {

// MMIO register pipes: one 64-bit payload per register, guarded by the
// per-register dirty flag. The producer polls for clean before writing; the
// consumer polls for dirty, reads, and marks clean.

class HostRegSender {
public:
    HostRegSender(HostCtx& c, int mcc, int first_reg, int r)
        : c_(c), mcc_(mcc), first_reg_(first_reg), r_(r) {}

    SubTask<void> send(std::uint64_t word) {
        int reg = first_reg_ + static_cast<int>(cursor_ % r_);
        ++cursor_;
        // Poll the status bitmap once per ring pass; spin only while the
        // consumer is behind.
        if (reg == first_reg_) {
            std::uint64_t mine = ((r_ >= 64 ? ~0ull : (1ull << r_) - 1)) << first_reg_;
            for (;;) {
                MmioValue mv = co_await c_.mmio_read_mask(mcc_);
                if ((mv.value & mine) == 0) break;
            }
        }
        co_await c_.mmio_write(mcc_, reg, word);
    }

private:
    HostCtx& c_;
    int mcc_, first_reg_, r_;
    std::uint64_t cursor_ = 0;
};

class CpRegReceiver {
public:
    CpRegReceiver(MccCtx& c, int first_reg, int r)
        : c_(c), first_reg_(first_reg), r_(r) {}

    SubTask<std::uint64_t> recv() {
        int reg = first_reg_ + static_cast<int>(cursor_ % r_);
        for (;;) {
            std::uint64_t mask = co_await c_.io_dirty_mask();
            if (mask & (1ull << reg)) break;
            c_.compute(4);  // poll pacing
        }
        std::uint64_t v = co_await c_.io_read(reg);
        co_await c_.io_mark_clean(reg);
        ++cursor_;
        co_return v;
    }

private:
    MccCtx& c_;
    int first_reg_, r_;
    std::uint64_t cursor_ = 0;
};

// Single-register reply channel (MCC -> CPU).
class CpRegSender {
public:
    CpRegSender(MccCtx& c, int reg) : c_(c), reg_(reg) {}

    SubTask<void> send(std::uint64_t word) {
        for (;;) {
            std::uint64_t mask = co_await c_.io_dirty_mask();
            if (!(mask & (1ull << reg_))) break;
            c_.compute(4);
        }
        co_await c_.io_write(reg_, word);
    }

private:
    MccCtx& c_;
    int reg_;
};

class HostRegReceiver {
public:
    HostRegReceiver(HostCtx& c, int mcc, int reg) : c_(c), mcc_(mcc), reg_(reg) {}

    SubTask<std::uint64_t> recv() {
        for (;;) {
            MmioValue mv = co_await c_.mmio_read(mcc_, reg_);
            if (mv.dirty) {
                co_await c_.mmio_clean(mcc_, reg_);
                co_return mv.value;
            }
        }
    }

private:
    HostCtx& c_;
    int mcc_, reg_;
};

}  // namespace farsim
