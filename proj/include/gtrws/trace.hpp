#ifndef GTRWS_TRACE_HPP
#define GTRWS_TRACE_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace gtrws {

enum class Direction { Forward, Backward };

inline const char* to_string(Direction d) { return d == Direction::Forward ? "forward" : "backward"; }

inline Direction reversed(Direction d) { return d == Direction::Forward ? Direction::Backward : Direction::Forward; }

/// Work counters. `meff` adds n for every minimization over a table with n cells;
/// `message_ops` counts message updates of the chain solver.
struct Effort {
  std::uint64_t meff = 0;
  std::uint64_t message_ops = 0;
};

struct TraceRow {
  std::size_t pass = 0;
  Direction direction = Direction::Forward;
  std::string method;
  double bound = 0.0;
  std::uint64_t meff = 0;
  double ms = 0.0;
};

using BoundTrace = std::vector<TraceRow>;

struct StopRule {
  std::size_t max_passes = 500;
  /// Stop once |bound_k - bound_{k-1}| <= eps * max(1, |bound_k|); negative disables the test.
  double eps = 1e-7;
};

using PassCallback = std::function<void(const TraceRow&)>;

/// Drives any solver exposing direction(), pass() -> bound and effort().
template <class Solver>
BoundTrace run_passes(Solver& solver, const StopRule& rule, const std::string& method,
                      const PassCallback& after_pass = {}) {
  BoundTrace trace;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t k = 1; k <= rule.max_passes; ++k) {
    const Direction dir = solver.direction();
    const double bound = solver.pass();
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    trace.push_back({k, dir, method, bound, solver.effort().meff, ms});
    if (after_pass) after_pass(trace.back());
    if (rule.eps >= 0.0 && trace.size() >= 2) {
      const double prev = trace[trace.size() - 2].bound;
      if (std::abs(bound - prev) <= rule.eps * std::max(1.0, std::abs(bound))) break;
    }
  }
  return trace;
}

}  // namespace gtrws

#endif  // GTRWS_TRACE_HPP
