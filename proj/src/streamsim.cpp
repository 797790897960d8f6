#include "forgemorph/streamsim.hpp"

#include <algorithm>
#include <cmath>

namespace forgemorph::streamsim {

namespace {

struct FrameSpec {
  long long width = 0;   // padded
  long long height = 0;  // padded
  int kernel = 1;
  int stride = 1;
  long long window_delay = 0;  // MAC / comparator pipeline, cycles
};

long long to_cycles(double value) { return std::llround(value); }

void check_shape(int width, int height, int kernel, int stride, int pad) {
  if (width < 1 || height < 1 || kernel < 1 || stride < 1 || pad < 0) {
    raise(Errc::invalid_argument, "stream dimensions must be positive");
  }
  const int out_w = (width + 2 * pad - kernel) / stride + 1;
  const int out_h = (height + 2 * pad - kernel) / stride + 1;
  if (width + 2 * pad < kernel || height + 2 * pad < kernel || out_w < 1 ||
      out_h < 1) {
    raise(Errc::degenerate_shape, "frame smaller than one window");
  }
}

SimResult run_stream(const FrameSpec& frame, const LatencyTerms& terms,
                     bool record) {
  terms.validate();

  SimResult result;
  long long cycle = 0;

  const auto idle = [&](long long count) {
    for (long long i = 0; i < count; ++i) {
      ++cycle;
      if (record) result.events.push_back({cycle, EventKind::Idle, {}});
    }
  };

  idle(to_cycles(terms.d_in));
  // The stream interface aligns on a half-porch boundary, rounded to a
  // whole cycle.
  idle(static_cast<long long>(std::ceil((terms.p_b + 1) / 2.0)));
  const long long active_start = cycle;

  const long long d_out = to_cycles(terms.d_out);
  long long first_emit = -1;
  long long last_emit = -1;
  long long emitted = 0;
  std::vector<TraceEvent> emissions;

  // Line buffer state: rows fully shifted into the FIFO bank, saturating
  // once K-1 rows are resident.
  int full_rows = 0;

  for (long long r = 0; r < frame.height; ++r) {
    idle(to_cycles(terms.p_b));
    for (long long c = 0; c < frame.width; ++c) {
      ++cycle;
      ControlSignal flags;
      flags.valid = true;
      flags.h_start = (c == 0);
      flags.h_end = (c == frame.width - 1);
      flags.v_start = (r == 0 && c == 0);
      flags.v_end = (r == frame.height - 1 && c == frame.width - 1);
      if (record) result.events.push_back({cycle, EventKind::Consume, flags});

      const bool bank_full = full_rows == frame.kernel - 1;
      const bool col_ready = c >= frame.kernel - 1 &&
                             (c - (frame.kernel - 1)) % frame.stride == 0;
      const bool row_ready = (r - (frame.kernel - 1)) % frame.stride == 0;
      if (bank_full && col_ready && row_ready) {
        const long long emit_cycle = cycle + frame.window_delay + d_out;
        ++emitted;
        if (first_emit < 0) first_emit = emit_cycle;
        last_emit = emit_cycle;
        if (record) emissions.push_back({emit_cycle, EventKind::Emit, {}});
      }
    }
    full_rows = std::min(full_rows + 1, frame.kernel - 1);
    idle(to_cycles(terms.p_f));
  }

  const long long envelope_end = cycle;
  result.trace.outputs_emitted = emitted;
  result.trace.cycles_total = std::max(envelope_end, last_emit);
  result.trace.cycles_to_first_valid_output =
      first_emit < 0 ? 0 : first_emit - active_start;

  if (record) {
    result.events.insert(result.events.end(), emissions.begin(), emissions.end());
    std::stable_sort(result.events.begin(), result.events.end(),
                     [](const TraceEvent& a, const TraceEvent& b) {
                       return a.cycle < b.cycle;
                     });
  }
  return result;
}

long long conv_window_delay(const LatencyTerms& terms) {
  return to_cycles(terms.t_pad) + to_cycles(terms.t_tap) +
         to_cycles(terms.t_mul) + to_cycles(terms.t_add) +
         to_cycles(terms.t_relu);
}

long long pool_window_delay(const LatencyTerms& terms, PoolOp op) {
  long long delay =
      to_cycles(terms.t_pad) + to_cycles(terms.t_tap) + to_cycles(terms.t_add);
  if (op == PoolOp::Avg) delay += to_cycles(terms.t_mul);
  return delay;
}

}  // namespace

SimResult simulate_conv_stream_traced(int width, int height, int kernel,
                                      int stride, int pad,
                                      const LatencyTerms& terms) {
  check_shape(width, height, kernel, stride, pad);
  FrameSpec frame;
  frame.width = width + 2ll * pad;
  frame.height = height + 2ll * pad;
  frame.kernel = kernel;
  frame.stride = stride;
  frame.window_delay = conv_window_delay(terms);
  return run_stream(frame, terms, /*record=*/true);
}

StreamTrace simulate_conv_stream(int width, int height, int kernel, int stride,
                                 int pad, const LatencyTerms& terms) {
  check_shape(width, height, kernel, stride, pad);
  FrameSpec frame;
  frame.width = width + 2ll * pad;
  frame.height = height + 2ll * pad;
  frame.kernel = kernel;
  frame.stride = stride;
  frame.window_delay = conv_window_delay(terms);
  return run_stream(frame, terms, /*record=*/false).trace;
}

SimResult simulate_pool_stream_traced(int width, int height, int kernel,
                                      int stride, PoolOp op,
                                      const LatencyTerms& terms) {
  check_shape(width, height, kernel, stride, /*pad=*/0);
  FrameSpec frame;
  frame.width = width;
  frame.height = height;
  frame.kernel = kernel;
  frame.stride = stride;
  frame.window_delay = pool_window_delay(terms, op);
  return run_stream(frame, terms, /*record=*/true);
}

StreamTrace simulate_pool_stream(int width, int height, int kernel, int stride,
                                 PoolOp op, const LatencyTerms& terms) {
  check_shape(width, height, kernel, stride, /*pad=*/0);
  FrameSpec frame;
  frame.width = width;
  frame.height = height;
  frame.kernel = kernel;
  frame.stride = stride;
  frame.window_delay = pool_window_delay(terms, op);
  return run_stream(frame, terms, /*record=*/false).trace;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceEvent>& events) {
  out << "cycle,valid,h_start,h_end,v_start,v_end,event\n";
  for (const TraceEvent& event : events) {
    const char* kind = event.kind == EventKind::Consume ? "consume"
                       : event.kind == EventKind::Emit  ? "emit"
                                                        : "idle";
    out << event.cycle << ',' << event.flags.valid << ',' << event.flags.h_start
        << ',' << event.flags.h_end << ',' << event.flags.v_start << ','
        << event.flags.v_end << ',' << kind << '\n';
  }
}

}  // namespace forgemorph::streamsim
