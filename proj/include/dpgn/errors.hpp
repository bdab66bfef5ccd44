#pragma once

#include <stdexcept>
#include <string>

namespace dpgn {

enum class Errc {
  // graph construction
  out_of_range_index,
  self_loop,
  duplicate_edge,
  non_positive_weight,
  // operator application
  length_mismatch,
  zero_edge_weight,
  // autodiff
  shape_mismatch,
  non_finite_value,
  non_scalar_output,
  // simulation
  bad_init_count,
  non_finite_state,
  too_few_states,
  // model / training
  unknown_edge_type,
  feature_dim_mismatch,
  non_finite_loss,
  // data io
  parse_error,
  misaligned_time,
  unknown_edge_type_name,
  io_error,
  empty_dataset,
  // cli
  config_error,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::out_of_range_index: return "OutOfRangeIndex";
    case Errc::self_loop: return "SelfLoop";
    case Errc::duplicate_edge: return "DuplicateEdge";
    case Errc::non_positive_weight: return "NonPositiveWeight";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::zero_edge_weight: return "ZeroEdgeWeight";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::non_finite_value: return "NonFiniteValue";
    case Errc::non_scalar_output: return "NonScalarOutput";
    case Errc::bad_init_count: return "BadInitCount";
    case Errc::non_finite_state: return "NonFiniteState";
    case Errc::too_few_states: return "TooFewStates";
    case Errc::unknown_edge_type: return "UnknownEdgeType";
    case Errc::feature_dim_mismatch: return "FeatureDimMismatch";
    case Errc::non_finite_loss: return "NonFiniteLoss";
    case Errc::parse_error: return "ParseError";
    case Errc::misaligned_time: return "MisalignedTime";
    case Errc::unknown_edge_type_name: return "UnknownEdgeTypeName";
    case Errc::io_error: return "IoError";
    case Errc::empty_dataset: return "EmptyDataset";
    case Errc::config_error: return "ConfigError";
  }
  return "UnknownError";
}

/// Library-wide exception type; `code()` identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace dpgn
