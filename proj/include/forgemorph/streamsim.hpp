#pragma once

#include <ostream>
#include <vector>

#include "forgemorph/costmodel.hpp"

namespace forgemorph::streamsim {

using costmodel::LatencyTerms;
using costmodel::PoolOp;

/// Per-pixel sideband flags of the streaming protocol.
struct ControlSignal {
  bool valid = false;
  bool h_start = false;
  bool h_end = false;
  bool v_start = false;
  bool v_end = false;
};

struct StreamTrace {
  /// Cycles from the first active stream cycle until the first window
  /// result leaves the PE (interface start-up delays excluded).
  long long cycles_to_first_valid_output = 0;
  /// Cycles from power-on of the frame (including input delay and porch
  /// settle) until the frame is consumed and the last output has drained.
  long long cycles_total = 0;
  long long outputs_emitted = 0;
};

enum class EventKind { Idle, Consume, Emit };

struct TraceEvent {
  long long cycle = 0;
  EventKind kind = EventKind::Idle;
  ControlSignal flags;
};

struct SimResult {
  StreamTrace trace;
  std::vector<TraceEvent> events;  // populated only when requested
};

/// Drives one synthetic padded frame through the line buffer + MAC model
/// pixel-per-cycle and counts cycles exactly. No pixel values are
/// computed; the simulator validates latency, not arithmetic.
StreamTrace simulate_conv_stream(int width, int height, int kernel, int stride,
                                 int pad, const LatencyTerms& terms);
SimResult simulate_conv_stream_traced(int width, int height, int kernel,
                                      int stride, int pad,
                                      const LatencyTerms& terms);

StreamTrace simulate_pool_stream(int width, int height, int kernel, int stride,
                                 PoolOp op, const LatencyTerms& terms);
SimResult simulate_pool_stream_traced(int width, int height, int kernel,
                                      int stride, PoolOp op,
                                      const LatencyTerms& terms);

void write_trace_csv(std::ostream& out, const std::vector<TraceEvent>& events);

}  // namespace forgemorph::streamsim
