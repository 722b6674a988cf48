#pragma once

#include <coroutine>
#include <exception>
#include <utility>

namespace farsim {

// Coroutine handle for guest programs (channel programs and host programs).
// Guests interact with the simulated world only through awaitables; the
// runtime resumes them when the awaited action's effect time arrives.
struct GuestTask {
    struct promise_type {
        std::exception_ptr error;

        GuestTask get_return_object() {
            return GuestTask{std::coroutine_handle<promise_type>::from_promise(*this)};
        }
        std::suspend_always initial_suspend() noexcept { return {}; }
        std::suspend_always final_suspend() noexcept { return {}; }
        void return_void() noexcept {}
        void unhandled_exception() noexcept { error = std::current_exception(); }
    };
    using Handle = std::coroutine_handle<promise_type>;

    GuestTask() = default;
    explicit GuestTask(Handle hh) : h(hh) {}
    GuestTask(const GuestTask&) = delete;
    GuestTask& operator=(const GuestTask&) = delete;
    GuestTask(GuestTask&& o) noexcept : h(std::exchange(o.h, {})) {}
    GuestTask& operator=(GuestTask&& o) noexcept {
        if (this != &o) {
            reset();
            h = std::exchange(o.h, {});
        }
        return *this;
    }
    ~GuestTask() { reset(); }

    void reset() {
        if (h) {
            h.destroy();
            h = {};
        }
    }

    Handle h;
};

}  // namespace farsim
