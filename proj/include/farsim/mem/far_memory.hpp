#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

#include "farsim/errors.hpp"
#include "farsim/mem/params.hpp"

namespace farsim {

// Byte-addressable far DRAM with a version counter per line. Versions bump
// exactly once per committed line write; the staleness probe and the shadow
// oracles key off them.
class FarMemory {
public:
    FarMemory(std::uint64_t base, std::uint64_t size, std::uint64_t line_bytes)
        : base_(base), size_(size), line_bytes_(line_bytes),
          bytes_(size, 0), versions_(size / line_bytes, 0) {}

    std::uint64_t base() const { return base_; }
    std::uint64_t size() const { return size_; }

    bool contains(std::uint64_t addr, std::uint64_t len = 1) const {
        return addr >= base_ && addr + len <= base_ + size_;
    }

    std::uint64_t line_index(std::uint64_t addr) const {
        check(addr, 1);
        return (addr - base_) / line_bytes_;
    }

    std::uint64_t line_addr(std::uint64_t addr) const {
        return addr & ~(line_bytes_ - 1);
    }

    std::span<const std::uint8_t> line_data(std::uint64_t laddr) const {
        check(laddr, line_bytes_);
        return {bytes_.data() + (laddr - base_), line_bytes_};
    }

    std::uint64_t version(std::uint64_t laddr) const { return versions_[line_index(laddr)]; }

    // Committed line write: copies a full line and bumps its version.
    void commit_line(std::uint64_t laddr, const std::uint8_t* src) {
        check(laddr, line_bytes_);
        std::memcpy(bytes_.data() + (laddr - base_), src, line_bytes_);
        versions_[line_index(laddr)]++;
    }

    // Untimed backdoor for workload setup and verification.
    std::span<std::uint8_t> raw(std::uint64_t addr, std::uint64_t len) {
        check(addr, len);
        return {bytes_.data() + (addr - base_), len};
    }
    std::span<const std::uint8_t> raw(std::uint64_t addr, std::uint64_t len) const {
        check(addr, len);
        return {bytes_.data() + (addr - base_), len};
    }

private:
    void check(std::uint64_t addr, std::uint64_t len) const {
        if (!contains(addr, len))
            throw AddressFault("far memory access at " + std::to_string(addr) +
                               " len " + std::to_string(len));
    }

    std::uint64_t base_, size_, line_bytes_;
    std::vector<std::uint8_t> bytes_;
    std::vector<std::uint64_t> versions_;
};

}  // namespace farsim
