#pragma once

#include <coroutine>
#include <exception>
#include <utility>

namespace farsim {

// Awaitable sub-coroutine for guest library code (pipe endpoints, protocol
// helpers). Starts lazily when awaited and resumes its awaiter on completion
// via symmetric transfer, so leaf awaitables always see the innermost frame.
template <class T>
struct SubTask {
    struct promise_type {
        T value{};
        std::exception_ptr error;
        std::coroutine_handle<> cont;

        SubTask get_return_object() {
            return SubTask{std::coroutine_handle<promise_type>::from_promise(*this)};
        }
        std::suspend_always initial_suspend() noexcept { return {}; }
        struct FinalAw {
            bool await_ready() const noexcept { return false; }
            std::coroutine_handle<> await_suspend(
                std::coroutine_handle<promise_type> h) noexcept {
                auto c = h.promise().cont;
                return c ? c : std::noop_coroutine();
            }
            void await_resume() const noexcept {}
        };
        FinalAw final_suspend() noexcept { return {}; }
        void return_value(T v) { value = std::move(v); }
        void unhandled_exception() noexcept { error = std::current_exception(); }
    };
    using Handle = std::coroutine_handle<promise_type>;

    explicit SubTask(Handle hh) : h(hh) {}
    SubTask(SubTask&& o) noexcept : h(std::exchange(o.h, {})) {}
    SubTask(const SubTask&) = delete;
    SubTask& operator=(const SubTask&) = delete;
    SubTask& operator=(SubTask&&) = delete;
    ~SubTask() {
        if (h) h.destroy();
    }

    bool await_ready() const noexcept { return false; }
    std::coroutine_handle<> await_suspend(std::coroutine_handle<> awaiter) noexcept {
        h.promise().cont = awaiter;
        return h;  // start the child
    }
    T await_resume() {
        if (h.promise().error) std::rethrow_exception(h.promise().error);
        return std::move(h.promise().value);
    }

    Handle h;
};

template <>
struct SubTask<void> {
    struct promise_type {
        std::exception_ptr error;
        std::coroutine_handle<> cont;

        SubTask get_return_object() {
            return SubTask{std::coroutine_handle<promise_type>::from_promise(*this)};
        }
        std::suspend_always initial_suspend() noexcept { return {}; }
        struct FinalAw {
            bool await_ready() const noexcept { return false; }
            std::coroutine_handle<> await_suspend(
                std::coroutine_handle<promise_type> h) noexcept {
                auto c = h.promise().cont;
                return c ? c : std::noop_coroutine();
            }
            void await_resume() const noexcept {}
        };
        FinalAw final_suspend() noexcept { return {}; }
        void return_void() noexcept {}
        void unhandled_exception() noexcept { error = std::current_exception(); }
    };
    using Handle = std::coroutine_handle<promise_type>;

    explicit SubTask(Handle hh) : h(hh) {}
    SubTask(SubTask&& o) noexcept : h(std::exchange(o.h, {})) {}
    SubTask(const SubTask&) = delete;
    SubTask& operator=(const SubTask&) = delete;
    SubTask& operator=(SubTask&&) = delete;
    ~SubTask() {
        if (h) h.destroy();
    }

    bool await_ready() const noexcept { return false; }
    std::coroutine_handle<> await_suspend(std::coroutine_handle<> awaiter) noexcept {
        h.promise().cont = awaiter;
        return h;
    }
    void await_resume() {
        if (h.promise().error) std::rethrow_exception(h.promise().error);
    }

    Handle h;
};

}  // namespace farsim
