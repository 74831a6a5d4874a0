#ifndef ADASTEER_LAW_FITTER_HPP
#define ADASTEER_LAW_FITTER_HPP

#include "adasteer/direction_lab.hpp"

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

namespace adasteer {

// lambda = clamp(w * pos + b, lambda_lower, lambda_upper)
struct SteeringLaw {
  double w = 0.0;
  double b = 0.0;
  double lambda_lower = 0.0;
  double lambda_upper = 0.0;
  int layer = 0;

  bool operator==(const SteeringLaw&) const = default;
};

/// Swaps reversed bounds; returns true when it had to.
bool normalize_bounds(SteeringLaw& law);

/// A law that always yields `value`.
SteeringLaw constant_law(double value, int layer);

inline double clamp_lambda(const SteeringLaw& law, double pos) {
  return std::min(law.lambda_upper, std::max(law.lambda_lower, law.w * pos + law.b));
}

/// Steering needed to move an input from `pos` to `target_pos` along `direction`.
double geometric_lambda(double pos, double target_pos, const Vector& direction);

enum class LawKind { kRejection, kCompliance };

struct CalibrationPair {
  std::string prompt_id;
  double pos = 0.0;
  double lambda_min = 0.0;
  bool saturated = false;
};

// Behavior of a record when steered with a single trial coefficient.
using BehaviorOracle = std::function<Behavior(const ActivationRecord&, double lambda)>;
// Behavior of a record under full dual-vector steering.
using SteeredOracle = std::function<Behavior(const ActivationRecord&, double lambda_r, double lambda_c)>;

struct LambdaGrid {
  double start = 0.0;
  double stop = 1.0;
  double step = 0.01;

  std::vector<double> values() const;
};

/// First grid value at which the oracle shows `target`, per record.
/// The position is pos_RD for rejection laws and pos_HD for compliance laws.
std::vector<CalibrationPair> calibrate(const std::vector<ActivationRecord>& records, const DirectionSet& directions,
                                       LawKind kind, Behavior target, const BehaviorOracle& oracle,
                                       const std::vector<double>& grid);

/// Ordinary least squares of lambda_min on pos over the non-saturated pairs.
SteeringLaw fit_law(const std::vector<CalibrationPair>& pairs, double lambda_lower, double lambda_upper, int layer);

struct SearchSpec {
  std::vector<double> w_multipliers{1.0};
  std::vector<double> w_offsets{0.0};
  std::vector<double> b_offsets{0.0};
  // (lower, upper) candidates; empty keeps the initial law's bounds.
  std::vector<std::pair<double, double>> bounds;
  double alpha = 0.5;  // objective = alpha * DSR + (1 - alpha) * CR
};

struct SearchResult {
  SteeringLaw law;
  double objective = 0.0;
  double dsr = 0.0;
  double cr = 0.0;
  std::size_t candidates = 0;
};

/// Exhaustive search over candidate laws around `initial`; `companion` stays
/// fixed as the other law of the pair. Ties go to the candidate closest to
/// `initial` in (w, b), then to the lexicographically smallest.
SearchResult grid_search(const SteeringLaw& initial, const SteeringLaw& companion, LawKind kind,
                         const DirectionSet& directions, const ActivationDataset& val_jailbreak,
                         const ActivationDataset& val_benign, const SteeredOracle& oracle, const SearchSpec& spec);

std::string calibration_csv(const std::vector<CalibrationPair>& pairs);

}  // namespace adasteer

#endif  // ADASTEER_LAW_FITTER_HPP
