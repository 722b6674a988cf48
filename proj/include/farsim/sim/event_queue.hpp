#pragma once

#include <cstdint>

#include "farsim/errors.hpp"
#include <functional>
#include <queue>
#include <string>
#include <vector>

#include "farsim/sim/time.hpp"

namespace farsim {

using EventId = std::uint64_t;
using EventAction = std::function<void()>;

struct RunStats {
    std::uint64_t events_fired = 0;
    SimTime final_time = 0;
};

// Deterministic event engine. Delivery order is strictly (fire_at, seq)
// where seq is the insertion counter, so same-instant events run in the
// order they were scheduled.
class Engine {
public:
    SimTime now() const { return now_; }
    bool empty() const { return queue_.empty(); }
    std::size_t pending() const { return queue_.size(); }

    EventId schedule(SimTime delay, EventAction action) {
        return schedule_at(now_ + delay, std::move(action));
    }

    EventId schedule_at(SimTime fire_at, EventAction action) {
        EventId id = next_seq_++;
        queue_.push(Event{fire_at, id, std::move(action)});
        return id;
    }

    void set_event_budget(std::uint64_t n) { budget_ = n; }

    // Runs until the queue drains or until events at > limit remain.
    // final_time is the fire time of the last executed event (or the limit /
    // start time when nothing at all fired).
    RunStats run_until(SimTime limit = kNoLimit) {
        RunStats stats;
        stats.final_time = now_;
        while (!queue_.empty() && queue_.top().fire_at <= limit) {
            Event ev = std::move(const_cast<Event&>(queue_.top()));
            queue_.pop();
            now_ = ev.fire_at;
            ++stats.events_fired;
            stats.final_time = now_;
            if (trace_) trace_->push_back({ev.fire_at, ev.seq});
            ev.action();
            if (budget_ && stats.events_fired > budget_)
                throw SimError("event budget exceeded (" + std::to_string(budget_) + ")");
        }
        return stats;
    }

    // Optional (fire_at, seq) trace used by the replay oracle.
    void enable_trace(std::vector<std::pair<SimTime, EventId>>* sink) { trace_ = sink; }

private:
    struct Event {
        SimTime fire_at;
        EventId seq;
        EventAction action;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
            return a.seq > b.seq;
        }
    };

    SimTime now_ = 0;
    std::uint64_t budget_ = 0;
    EventId next_seq_ = 0;
    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    std::vector<std::pair<SimTime, EventId>>* trace_ = nullptr;
};

}  // namespace farsim
