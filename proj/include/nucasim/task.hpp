#pragma once

#include <coroutine>
#include <exception>
#include <optional>
#include <utility>

namespace nucasim {

class SimThread;

namespace detail {

// Set by the engine for the thread whose coroutine it is about to resume.
// Simulations on different host threads each see their own value.
inline thread_local SimThread* current_thread = nullptr;

void set_resume_point(SimThread& thread, std::coroutine_handle<> h) noexcept;

template <typename Promise>
struct FinalAwaiter {
  bool await_ready() const noexcept { return false; }
  void await_suspend(std::coroutine_handle<Promise> h) noexcept {
    // Hand control back to the engine, which resumes the caller next.
    set_resume_point(*current_thread, h.promise().continuation);
  }
  void await_resume() const noexcept {}
};

template <typename Derived>
struct PromiseBase {
  std::coroutine_handle<> continuation;

  std::suspend_always initial_suspend() const noexcept { return {}; }
  FinalAwaiter<Derived> final_suspend() const noexcept { return {}; }
  // Faults abort the whole simulation; let them escape through resume().
  void unhandled_exception() { throw; }
};

}  // namespace detail

/// Lazily started coroutine for code running on a simulated thread.
///
/// `co_await task` is a nested call on the same simulated thread. The
/// engine drives calls and returns as a trampoline (no symmetric transfer),
/// so deep recursion in workloads never grows the host stack.
template <typename T = void>
class [[nodiscard]] Task {
 public:
  struct promise_type : detail::PromiseBase<promise_type> {
    std::optional<T> value;

    Task get_return_object() {
      return Task(std::coroutine_handle<promise_type>::from_promise(*this));
    }
    template <typename U>
    void return_value(U&& v) {
      value.emplace(std::forward<U>(v));
    }
  };

  Task(Task&& other) noexcept : handle_(std::exchange(other.handle_, {})) {}
  Task& operator=(Task&& other) noexcept {
    if (this != &other) {
      reset();
      handle_ = std::exchange(other.handle_, {});
    }
    return *this;
  }
  Task(const Task&) = delete;
  Task& operator=(const Task&) = delete;
  ~Task() { reset(); }

  bool await_ready() const noexcept { return false; }
  void await_suspend(std::coroutine_handle<> caller) noexcept {
    handle_.promise().continuation = caller;
    detail::set_resume_point(*detail::current_thread, handle_);
  }
  T await_resume() { return std::move(*handle_.promise().value); }

  std::coroutine_handle<> handle() const { return handle_; }

 private:
  explicit Task(std::coroutine_handle<promise_type> h) : handle_(h) {}
  void reset() {
    if (handle_) handle_.destroy();
    handle_ = {};
  }

  std::coroutine_handle<promise_type> handle_;
};

template <>
class [[nodiscard]] Task<void> {
 public:
  struct promise_type : detail::PromiseBase<promise_type> {
    Task get_return_object() {
      return Task(std::coroutine_handle<promise_type>::from_promise(*this));
    }
    void return_void() const noexcept {}
  };

  Task(Task&& other) noexcept : handle_(std::exchange(other.handle_, {})) {}
  Task& operator=(Task&& other) noexcept {
    if (this != &other) {
      reset();
      handle_ = std::exchange(other.handle_, {});
    }
    return *this;
  }
  Task(const Task&) = delete;
  Task& operator=(const Task&) = delete;
  ~Task() { reset(); }

  bool await_ready() const noexcept { return false; }
  void await_suspend(std::coroutine_handle<> caller) noexcept {
    handle_.promise().continuation = caller;
    detail::set_resume_point(*detail::current_thread, handle_);
  }
  void await_resume() const noexcept {}

  std::coroutine_handle<> handle() const { return handle_; }

 private:
  explicit Task(std::coroutine_handle<promise_type> h) : handle_(h) {}
  void reset() {
    if (handle_) handle_.destroy();
    handle_ = {};
  }

  std::coroutine_handle<promise_type> handle_;
};

}  // namespace nucasim
