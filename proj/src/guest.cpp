#include "farsim/guest/guest.hpp"

#include "farsim/errors.hpp"
#include "farsim/simulator.hpp"

namespace farsim {

Guest::Guest(Simulator& sim, std::string name, double freq_hz)
    : sim_(sim), name_(std::move(name)), freq_(freq_hz) {
    sim_.register_guest(this);
}

void Guest::start(GuestTask task, SimTime at) {
    task_ = std::move(task);
    resume_h_ = task_.h;
    sim_.engine().schedule_at(at, [this, at] {
        sync_to(at);
        state_ = GuestState::Running;
        run_coroutine();
    });
}

void Guest::block(const std::string& reason, SimTime since) {
    state_ = GuestState::Blocked;
    block_reason_ = reason;
    blocked_since_ = since;
}

void Guest::wake(SimTime t) {
    if (state_ == GuestState::Blocked) blocked_ns_ += t - blocked_since_;
    sync_to(t);
    state_ = GuestState::Running;
    run_coroutine();
}

void Guest::resume_at(SimTime t) {
    sim_.engine().schedule_at(t, [this, t] { wake(t); });
}

void Guest::run_coroutine() {
    resume_h_.resume();
    if (task_.h.done()) {
        if (task_.h.promise().error) {
            state_ = GuestState::Failed;
            try {
                std::rethrow_exception(task_.h.promise().error);
            } catch (const std::exception& e) {
                failure_ = e.what();
            } catch (...) {
                failure_ = "unknown guest exception";
            }
        } else {
            state_ = GuestState::Done;
        }
        on_finished();
    }
}

}  // namespace farsim
