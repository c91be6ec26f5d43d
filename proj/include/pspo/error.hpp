#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace pspo {

enum class ErrorCode : std::uint8_t {
  kInvalidArgument,
  kDegenerateStencil,
  kIllPosedModel,
  kInvalidPlacement,
  kShapeMismatch,
  kRankDeficient,
  kSelectionFailed,
  kDegeneratePlacement,
  kDivergence,
  kConfig,
  kIo,
};

const char* to_string(ErrorCode code);

// Single exception type for the library. `detail` carries the offending
// index, numerical rank or training step where one exists.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<long long> detail = std::nullopt)
      : std::runtime_error(what), code_(code), detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<long long> detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::optional<long long> detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what,
                              std::optional<long long> detail = std::nullopt) {
  throw Error(code, what, detail);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::kInvalidArgument, what);
}

}  // namespace pspo
