#include "gral/error.hpp"

namespace gral {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::malformed_row: return "MalformedRow";
    case Errc::dangling_edge: return "DanglingEdge";
    case Errc::duplicate_node_id: return "DuplicateNodeId";
    case Errc::unknown_node: return "UnknownNode";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::missing_vector: return "MissingVector";
    case Errc::non_finite_value: return "NonFiniteValue";
    case Errc::provider_unavailable: return "ProviderUnavailable";
    case Errc::fixture_miss: return "FixtureMiss";
    case Errc::empty_item_set: return "EmptyItemSet";
    case Errc::rank_overflow: return "RankOverflow";
    case Errc::empty_graph: return "EmptyGraph";
    case Errc::graph_too_large_for_exact: return "GraphTooLargeForExact";
    case Errc::unknown_template: return "UnknownTemplate";
    case Errc::missing_slot: return "MissingSlot";
    case Errc::rate_limited: return "RateLimited";
    case Errc::parse_failure: return "ParseFailure";
    case Errc::no_grounded_anchors: return "NoGroundedAnchors";
    case Errc::judge_unparseable: return "JudgeUnparseable";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::not_scalar_loss: return "NotScalarLoss";
    case Errc::missing_grad: return "MissingGrad";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::batch_mismatch: return "BatchMismatch";
    case Errc::non_positive_temperature: return "NonPositiveTemperature";
    case Errc::checkpoint_mismatch: return "CheckpointMismatch";
    case Errc::empty_dataset: return "EmptyDataset";
    case Errc::score_length_mismatch: return "ScoreLengthMismatch";
    case Errc::empty_gold: return "EmptyGold";
    case Errc::config_invalid: return "ConfigInvalid";
    case Errc::missing_artifact: return "MissingArtifact";
    case Errc::output_locked: return "OutputLocked";
    case Errc::io_error: return "IoError";
  }
  return "UnknownError";
}

}  // namespace gral
