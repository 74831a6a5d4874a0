#ifndef ADASTEER_COMMON_HPP
#define ADASTEER_COMMON_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace adasteer {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Every failure the toolkit can surface. The CLI maps each one to its own exit code.
enum class ErrorCode : int {
  kMagicMismatch = 10,
  kDimensionMismatch = 11,
  kNonFiniteValue = 12,
  kTruncatedFile = 13,
  kIoFailure = 14,
  kDuplicatePromptId = 15,
  kEmptyDataset = 20,
  kLayerOutOfRange = 21,
  kNoAdmissibleLayer = 22,
  kZeroDirection = 23,
  kEmptyGrid = 30,
  kInsufficientData = 31,
  kDegeneratePositions = 32,
  kEmptyValidationSet = 33,
  kInvalidConfig = 40,
  kSchemaMismatch = 41,
  kMissingInput = 42,
};

std::string_view error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

enum class DatasetTag : std::uint8_t {
  kRejectedHarmful = 0,
  kCompliedHarmful = 1,
  kCompliedBenign = 2,
  kProbe = 3,
};

enum class Behavior : std::uint8_t {
  kReject = 0,
  kComply = 1,
  kUnknown = 2,
};

inline constexpr DatasetTag kAllTags[] = {DatasetTag::kRejectedHarmful, DatasetTag::kCompliedHarmful,
                                          DatasetTag::kCompliedBenign, DatasetTag::kProbe};

std::string_view to_string(DatasetTag tag);
std::string_view to_string(Behavior behavior);
DatasetTag parse_dataset_tag(std::string_view text);
Behavior parse_behavior(std::string_view text);

// Attack tag reserved for benign (utility / over-safety) inputs.
inline constexpr std::string_view kBenignAttackTag = "benign";

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

inline void require_same_size(Eigen::Index a, Eigen::Index b, std::string_view what) {
  if (a != b) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + " (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

}  // namespace adasteer

#endif  // ADASTEER_COMMON_HPP
