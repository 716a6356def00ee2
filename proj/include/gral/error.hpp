#pragma once

#include <stdexcept>
#include <string>

namespace gral {

// Every failure surfaced by the library carries one of these codes so callers
// (and the CLI's machine-readable error output) can react without string
// matching.
enum class Errc {
  // graph store
  malformed_row,
  dangling_edge,
  duplicate_node_id,
  unknown_node,
  // embeddings
  dimension_mismatch,
  missing_vector,
  non_finite_value,
  provider_unavailable,
  fixture_miss,
  // retrieval
  empty_item_set,
  rank_overflow,
  empty_graph,
  graph_too_large_for_exact,
  // prompting / gateway
  unknown_template,
  missing_slot,
  rate_limited,
  parse_failure,
  no_grounded_anchors,
  judge_unparseable,
  // numeric core
  shape_mismatch,
  not_scalar_loss,
  missing_grad,
  // aligner
  length_mismatch,
  batch_mismatch,
  non_positive_temperature,
  checkpoint_mismatch,
  empty_dataset,
  // refinement
  score_length_mismatch,
  // evaluation
  empty_gold,
  // config / pipeline
  config_invalid,
  missing_artifact,
  output_locked,
  io_error,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }
  const char* code_name() const noexcept { return errc_name(code_); }

 private:
  Errc code_;
};

}  // namespace gral
