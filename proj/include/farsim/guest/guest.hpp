#pragma once

#include <cstdint>
#include <exception>
#include <string>
#include <vector>

#include <coroutine>

#include "farsim/guest/task.hpp"
#include "farsim/sim/event_queue.hpp"
#include "farsim/sim/time.hpp"

namespace farsim {

class Simulator;

enum class GuestState { Ready, Running, Blocked, Done, Failed };

// A cooperative guest with its own cycle clock. Cycle costs accumulate as
// doubles and convert to integer nanoseconds from a fixed anchor, so
// fractional per-action costs do not drift over long bursts. The anchor
// resets whenever the guest resumes from an event.
class Guest {
public:
    Guest(Simulator& sim, std::string name, double freq_hz);
    virtual ~Guest() = default;

    const std::string& name() const { return name_; }
    double freq_hz() const { return freq_; }
    GuestState state() const { return state_; }
    bool finished() const { return state_ == GuestState::Done || state_ == GuestState::Failed; }
    int exit_code() const { return exit_code_; }
    const std::string& failure() const { return failure_; }
    const std::string& block_reason() const { return block_reason_; }

    Simulator& sim() { return sim_; }

    // ---- cycle clock ----
    void charge(double cycles) {
        pending_cycles_ += cycles;
        busy_cycles_ += cycles;
    }
    SimTime local_now() const { return anchor_ + ns_from_cycles(pending_cycles_, freq_); }
    void sync_to(SimTime t) {
        anchor_ = t;
        pending_cycles_ = 0;
    }
    double busy_cycles() const { return busy_cycles_; }
    SimTime blocked_ns() const { return blocked_ns_; }

    // ---- scheduling ----
    void start(GuestTask task, SimTime at);
    // Marks the guest blocked on an external condition; a later wake() resumes it.
    void block(const std::string& reason, SimTime since);
    // Resumes at time t (t is the effect time of the completed action).
    void wake(SimTime t);
    void resume_at(SimTime t);  // schedule wake via the event queue

    // Leaf awaitables record the innermost suspended frame here so nested
    // sub-coroutines resume correctly.
    void set_resume_handle(std::coroutine_handle<> h) { resume_h_ = h; }

    // Result slots written by the runtime just before wake().
    std::uint64_t result_u64 = 0;
    bool result_flag = false;

    // Errors raised while executing an action on the guest's behalf; rethrown
    // into the coroutine at await_resume.
    std::exception_ptr pending_error;
    void check_pending() {
        if (pending_error) {
            auto e = std::exchange(pending_error, nullptr);
            std::rethrow_exception(e);
        }
    }

protected:
    virtual void on_finished() {}

    Simulator& sim_;
    std::string name_;
    double freq_;
    GuestState state_ = GuestState::Ready;
    GuestTask task_;
    SimTime anchor_ = 0;
    double pending_cycles_ = 0;
    double busy_cycles_ = 0;
    SimTime blocked_ns_ = 0;
    SimTime blocked_since_ = 0;
    std::string block_reason_;
    int exit_code_ = 0;
    std::string failure_;
    std::coroutine_handle<> resume_h_;

    void run_coroutine();

public:
    // Set by the Exit awaitable before finishing the coroutine.
    void set_exit_code(int code) { exit_code_ = code; }
};

}  // namespace farsim
