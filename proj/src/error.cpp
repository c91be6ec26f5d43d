#include "pspo/error.hpp"

namespace pspo {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDegenerateStencil: return "DegenerateStencil";
    case ErrorCode::kIllPosedModel: return "IllPosedModel";
    case ErrorCode::kInvalidPlacement: return "InvalidPlacement";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kSelectionFailed: return "SelectionFailed";
    case ErrorCode::kDegeneratePlacement: return "DegeneratePlacement";
    case ErrorCode::kDivergence: return "Divergence";
    case ErrorCode::kConfig: return "Config";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace pspo
