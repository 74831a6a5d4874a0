#ifndef ADASTEER_STEER_ENGINE_HPP
#define ADASTEER_STEER_ENGINE_HPP

#include "adasteer/law_fitter.hpp"

#include <functional>
#include <memory>

namespace adasteer {

struct SteeringPolicy {
  DirectionSet directions;
  SteeringLaw law_r;
  SteeringLaw law_c;

  /// Throws DimensionMismatch / InvalidConfig when the parts disagree.
  void check() const;
};

struct SteeringDecision {
  std::string prompt_id;
  double pos_rd = 0.0;
  double pos_hd = 0.0;
  double lambda_r = 0.0;
  double lambda_c = 0.0;

  bool operator==(const SteeringDecision&) const = default;
};

// (layer, token, hidden) -> steered hidden. Must be applied once per site.
using Hook = std::function<Vector(int layer, int token, const Vector& hidden)>;

SteeringDecision compute_coefficients(const SteeringPolicy& policy, const ActivationRecord& record);

/// h + lambda_r * v_rd + lambda_c * v_hd
template <typename Derived>
Vector steer_hidden(const Eigen::MatrixBase<Derived>& h, double lambda_r, double lambda_c,
                    const SteeringPolicy& policy) {
  require_same_size(h.size(), policy.directions.v_rd.size(), "hidden vector vs steering vectors");
  return h + lambda_r * policy.directions.v_rd + lambda_c * policy.directions.v_hd;
}

/// Stateless hook applying the frozen decision at every layer and token.
Hook make_hook(std::shared_ptr<const SteeringPolicy> policy, const SteeringDecision& decision);

/// Experimental variant: coefficients are re-measured from the states that
/// reach layer_rd / layer_hd, so earlier steering feeds back into them.
/// Layers below those use the most recent values, starting from `initial`.
/// Stateful; use one instance per forward pass.
Hook make_recomputing_hook(std::shared_ptr<const SteeringPolicy> policy, const SteeringDecision& initial);

std::string decisions_csv(const std::vector<SteeringDecision>& decisions);

}  // namespace adasteer

#endif  // ADASTEER_STEER_ENGINE_HPP
