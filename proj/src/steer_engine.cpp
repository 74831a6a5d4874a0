#include "adasteer/steer_engine.hpp"

#include "adasteer/io.hpp"

#include <sstream>

namespace adasteer {

void SteeringPolicy::check() const {
  const auto n = directions.hidden_size;
  for (const Vector* v : {&directions.d_rd, &directions.d_hd, &directions.v_rd, &directions.v_hd,
                          &directions.mu_c_harmful_rd, &directions.mu_c_harmful_hd}) {
    require_same_size(v->size(), n, "direction set vector length");
  }
  if (law_r.layer != directions.layer_rd || law_c.layer != directions.layer_hd) {
    throw Error(ErrorCode::kInvalidConfig, "law layers (" + std::to_string(law_r.layer) + ", " +
                                               std::to_string(law_c.layer) + ") disagree with direction layers (" +
                                               std::to_string(directions.layer_rd) + ", " +
                                               std::to_string(directions.layer_hd) + ")");
  }
  if (law_r.lambda_lower > law_r.lambda_upper || law_c.lambda_lower > law_c.lambda_upper) {
    throw Error(ErrorCode::kInvalidConfig, "law bounds are reversed");
  }
}

SteeringDecision compute_coefficients(const SteeringPolicy& policy, const ActivationRecord& record) {
  const auto& dirs = policy.directions;
  if (dirs.layer_rd >= record.hidden.rows() || dirs.layer_hd >= record.hidden.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "record '" + record.prompt_id + "' has too few layers for the policy");
  }
  SteeringDecision d;
  d.prompt_id = record.prompt_id;
  d.pos_rd = position_rd(record.layer(dirs.layer_rd), dirs);
  d.pos_hd = position_hd(record.layer(dirs.layer_hd), dirs);
  d.lambda_r = clamp_lambda(policy.law_r, d.pos_rd);
  d.lambda_c = clamp_lambda(policy.law_c, d.pos_hd);
  return d;
}

Hook make_hook(std::shared_ptr<const SteeringPolicy> policy, const SteeringDecision& decision) {
  return [policy = std::move(policy), lr = decision.lambda_r, lc = decision.lambda_c](int, int, const Vector& h) {
    return steer_hidden(h, lr, lc, *policy);
  };
}

Hook make_recomputing_hook(std::shared_ptr<const SteeringPolicy> policy, const SteeringDecision& initial) {
  struct State {
    double lambda_r;
    double lambda_c;
  };
  auto state = std::make_shared<State>(State{initial.lambda_r, initial.lambda_c});
  return [policy = std::move(policy), state](int layer, int, const Vector& h) {
    const auto& dirs = policy->directions;
    if (layer == dirs.layer_rd) state->lambda_r = clamp_lambda(policy->law_r, position_rd(h, dirs));
    if (layer == dirs.layer_hd) state->lambda_c = clamp_lambda(policy->law_c, position_hd(h, dirs));
    return steer_hidden(h, state->lambda_r, state->lambda_c, *policy);
  };
}

std::string decisions_csv(const std::vector<SteeringDecision>& decisions) {
  std::ostringstream out;
  out << "prompt_id,pos_rd,pos_hd,lambda_r,lambda_c\n";
  for (const auto& d : decisions) {
    out << io::csv_field(d.prompt_id) << ',' << io::format_real(d.pos_rd) << ',' << io::format_real(d.pos_hd) << ','
        << io::format_real(d.lambda_r) << ',' << io::format_real(d.lambda_c) << '\n';
  }
  return out.str();
}

}  // namespace adasteer
