#pragma once

#include <cstdint>
#include <cstring>
#include <optional>
#include <vector>

#include "farsim/errors.hpp"

namespace farsim {

// Set-associative LRU cache that stores line data copies. Keeping the data
// in the cache (rather than just tags) is what lets non-coherence show up:
// a hit returns the fill-time copy even if far memory has moved on.
class Llc {
public:
    struct Entry {
        std::uint64_t line_addr = 0;
        bool valid = false;
        bool dirty = false;
        std::uint64_t version_at_fill = 0;
        std::uint64_t last_used = 0;
        std::vector<std::uint8_t> data;
    };

    Llc(std::uint64_t capacity_bytes, std::uint64_t ways, std::uint64_t line_bytes)
        : line_bytes_(line_bytes), ways_(ways),
          sets_(capacity_bytes / (ways * line_bytes)) {
        if (sets_ == 0) throw ConfigError("llc too small for geometry");
        entries_.resize(sets_ * ways_);
        for (auto& e : entries_) e.data.resize(line_bytes_);
    }

    std::uint64_t sets() const { return sets_; }
    std::uint64_t ways() const { return ways_; }
    std::uint64_t occupancy() const {
        std::uint64_t n = 0;
        for (const auto& e : entries_)
            if (e.valid) ++n;
        return n;
    }

    Entry* find(std::uint64_t line_addr) {
        Entry* row = set_of(line_addr);
        for (std::uint64_t w = 0; w < ways_; ++w)
            if (row[w].valid && row[w].line_addr == line_addr) return &row[w];
        return nullptr;
    }

    void touch(Entry& e) { e.last_used = ++tick_; }

    // Chooses the victim way for a fill: an invalid way if any, otherwise the
    // least recently used. Does not modify the entry.
    Entry& victim(std::uint64_t line_addr) {
        Entry* row = set_of(line_addr);
        Entry* best = &row[0];
        for (std::uint64_t w = 0; w < ways_; ++w) {
            if (!row[w].valid) return row[w];
            if (row[w].last_used < best->last_used) best = &row[w];
        }
        return *best;
    }

    void fill(Entry& e, std::uint64_t line_addr, const std::uint8_t* src,
              std::uint64_t version) {
        e.line_addr = line_addr;
        e.valid = true;
        e.dirty = false;
        e.version_at_fill = version;
        std::memcpy(e.data.data(), src, line_bytes_);
        touch(e);
    }

    void invalidate(std::uint64_t line_addr) {
        if (Entry* e = find(line_addr)) e->valid = false;
    }

private:
    Entry* set_of(std::uint64_t line_addr) {
        std::uint64_t set = (line_addr / line_bytes_) % sets_;
        return entries_.data() + set * ways_;
    }

    std::uint64_t line_bytes_, ways_, sets_;
    std::uint64_t tick_ = 0;
    std::vector<Entry> entries_;
};

}  // namespace farsim
