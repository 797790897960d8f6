#pragma once

#include <stdexcept>
#include <string>

namespace forgemorph {

/// Failure categories surfaced by the library. The CLI maps these onto
/// process exit codes: input problems exit 1, infeasible searches exit 2,
/// broken internal invariants exit 3.
enum class Errc {
  malformed_document,
  shape_mismatch,
  cyclic_graph,
  dangling_connection,
  unsupported_topology,
  degenerate_shape,
  unsupported_kernel,
  incomplete_terms,
  length_mismatch,
  no_feasible_design,
  invalid_cut,
  empty_block,
  too_narrow,
  degenerate_fit,
  dim_mismatch,
  empty_blocks,
  invalid_argument,
  io_error,
  internal,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

  int exit_code() const noexcept {
    switch (code_) {
      case Errc::no_feasible_design:
        return 2;
      case Errc::internal:
        return 3;
      default:
        return 1;
    }
  }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
  throw Error(code, message);
}

inline const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::malformed_document: return "MalformedDocument";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::cyclic_graph: return "CyclicGraph";
    case Errc::dangling_connection: return "DanglingConnection";
    case Errc::unsupported_topology: return "UnsupportedTopology";
    case Errc::degenerate_shape: return "DegenerateShape";
    case Errc::unsupported_kernel: return "UnsupportedKernel";
    case Errc::incomplete_terms: return "IncompleteTerms";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::no_feasible_design: return "NoFeasibleDesign";
    case Errc::invalid_cut: return "InvalidCut";
    case Errc::empty_block: return "EmptyBlock";
    case Errc::too_narrow: return "TooNarrow";
    case Errc::degenerate_fit: return "DegenerateFit";
    case Errc::dim_mismatch: return "DimMismatch";
    case Errc::empty_blocks: return "EmptyBlocks";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::io_error: return "IoError";
    case Errc::internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace forgemorph
