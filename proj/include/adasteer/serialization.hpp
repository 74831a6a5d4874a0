#ifndef ADASTEER_SERIALIZATION_HPP
#define ADASTEER_SERIALIZATION_HPP

#include "adasteer/steer_engine.hpp"
#include "adasteer/toy_model.hpp"

#include "json.hpp"

namespace adasteer {

using Json = nlohmann::ordered_json;

Json to_json(const Vector& v);
Vector vector_from_json(const Json& j);

Json to_json(const DirectionSet& d);
DirectionSet direction_set_from_json(const Json& j);

Json to_json(const SteeringLaw& law);
/// Reversed bounds are swapped (with a warning) so lower <= upper always holds.
SteeringLaw steering_law_from_json(const Json& j);

Json to_json(const SteeringPolicy& p);
SteeringPolicy steering_policy_from_json(const Json& j);

Json to_json(const SyntheticWorldConfig& c);
/// Keys absent from `j` keep their defaults.
SyntheticWorldConfig world_config_from_json(const Json& j);

/// FNV-1a 64 over the compact JSON dump, as 16 hex digits.
std::string fingerprint(const Json& j);

}  // namespace adasteer

#endif  // ADASTEER_SERIALIZATION_HPP
