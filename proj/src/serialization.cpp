#include "adasteer/serialization.hpp"

#include <spdlog/spdlog.h>

#include <cstdio>

namespace adasteer {

namespace {

template <typename T>
void read_opt(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

Json to_json(const ClusterSpec& c) {
  return Json{{"name", c.name}, {"rd", c.rd}, {"hd", c.hd}, {"sigma", c.sigma}, {"count", c.count}};
}

ClusterSpec cluster_from_json(const Json& j, ClusterSpec base) {
  read_opt(j, "name", base.name);
  read_opt(j, "rd", base.rd);
  read_opt(j, "hd", base.hd);
  read_opt(j, "sigma", base.sigma);
  read_opt(j, "count", base.count);
  return base;
}

Json to_json(const SplitCounts& s) { return Json{{"calib", s.calib}, {"val", s.val}, {"test", s.test}}; }

SplitCounts split_from_json(const Json& j, SplitCounts base) {
  read_opt(j, "calib", base.calib);
  read_opt(j, "val", base.val);
  read_opt(j, "test", base.test);
  return base;
}

}  // namespace

Json to_json(const Vector& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Vector vector_from_json(const Json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Json to_json(const DirectionSet& d) {
  return Json{{"layer_rd", d.layer_rd},
              {"layer_hd", d.layer_hd},
              {"hidden_size", d.hidden_size},
              {"mu_r_harmful", to_json(d.mu_r_harmful)},
              {"mu_c_harmful_rd", to_json(d.mu_c_harmful_rd)},
              {"mu_c_harmful_hd", to_json(d.mu_c_harmful_hd)},
              {"mu_c_benign", to_json(d.mu_c_benign)},
              {"d_rd", to_json(d.d_rd)},
              {"d_hd", to_json(d.d_hd)},
              {"v_rd", to_json(d.v_rd)},
              {"v_hd", to_json(d.v_hd)}};
}

DirectionSet direction_set_from_json(const Json& j) {
  try {
    DirectionSet d;
    d.layer_rd = j.at("layer_rd").get<int>();
    d.layer_hd = j.at("layer_hd").get<int>();
    d.hidden_size = j.at("hidden_size").get<int>();
    d.mu_r_harmful = vector_from_json(j.at("mu_r_harmful"));
    d.mu_c_harmful_rd = vector_from_json(j.at("mu_c_harmful_rd"));
    d.mu_c_harmful_hd = vector_from_json(j.at("mu_c_harmful_hd"));
    d.mu_c_benign = vector_from_json(j.at("mu_c_benign"));
    d.d_rd = vector_from_json(j.at("d_rd"));
    d.d_hd = vector_from_json(j.at("d_hd"));
    d.v_rd = vector_from_json(j.at("v_rd"));
    d.v_hd = vector_from_json(j.at("v_hd"));
    for (const Vector* v : {&d.mu_r_harmful, &d.mu_c_harmful_rd, &d.mu_c_harmful_hd, &d.mu_c_benign, &d.d_rd,
                            &d.d_hd, &d.v_rd, &d.v_hd}) {
      require_same_size(v->size(), d.hidden_size, "direction set vector");
    }
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("malformed direction set: ") + e.what());
  }
}

Json to_json(const SteeringLaw& law) {
  return Json{{"w", law.w},
              {"b", law.b},
              {"lambda_lower", law.lambda_lower},
              {"lambda_upper", law.lambda_upper},
              {"layer", law.layer}};
}

SteeringLaw steering_law_from_json(const Json& j) {
  try {
    SteeringLaw law;
    law.w = j.at("w").get<double>();
    law.b = j.at("b").get<double>();
    law.lambda_lower = j.at("lambda_lower").get<double>();
    law.lambda_upper = j.at("lambda_upper").get<double>();
    law.layer = j.at("layer").get<int>();
    if (normalize_bounds(law)) {
      spdlog::warn("steering law bounds were reversed; using [{}, {}]", law.lambda_lower, law.lambda_upper);
    }
    return law;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("malformed steering law: ") + e.what());
  }
}

Json to_json(const SteeringPolicy& p) {
  return Json{{"directions", to_json(p.directions)}, {"law_r", to_json(p.law_r)}, {"law_c", to_json(p.law_c)}};
}

SteeringPolicy steering_policy_from_json(const Json& j) {
  SteeringPolicy p{direction_set_from_json(j.at("directions")), steering_law_from_json(j.at("law_r")),
                   steering_law_from_json(j.at("law_c"))};
  p.check();
  return p;
}

Json to_json(const SyntheticWorldConfig& c) {
  Json families = Json::array();
  for (const auto& f : c.families) families.push_back(to_json(f));
  return Json{{"hidden_size", c.hidden_size},
              {"layer_count", c.layer_count},
              {"seed", c.seed},
              {"axis_angle_deg", c.axis_angle_deg},
              {"rd_layer", c.rd_layer},
              {"hd_layer", c.hd_layer},
              {"off_layer_rd_gain", c.off_layer_rd_gain},
              {"hd_shear", c.hd_shear},
              {"weight_scale", c.weight_scale},
              {"bias_scale", c.bias_scale},
              {"readout",
               {{"gamma", c.readout.gamma},
                {"cosine", c.readout.cosine},
                {"hd_weight", c.readout.hd_weight},
                {"threshold_rd", c.readout.threshold_rd}}},
              {"rejected_harmful", to_json(c.rejected_harmful)},
              {"complied_harmful", to_json(c.complied_harmful)},
              {"complied_benign", to_json(c.complied_benign)},
              {"families", families},
              {"family_counts", to_json(c.family_counts)},
              {"benign_probe", to_json(c.benign_probe)},
              {"benign_counts", to_json(c.benign_counts)}};
}

SyntheticWorldConfig world_config_from_json(const Json& j) {
  SyntheticWorldConfig c;
  try {
    read_opt(j, "hidden_size", c.hidden_size);
    read_opt(j, "layer_count", c.layer_count);
    read_opt(j, "seed", c.seed);
    read_opt(j, "axis_angle_deg", c.axis_angle_deg);
    read_opt(j, "rd_layer", c.rd_layer);
    read_opt(j, "hd_layer", c.hd_layer);
    read_opt(j, "off_layer_rd_gain", c.off_layer_rd_gain);
    read_opt(j, "hd_shear", c.hd_shear);
    read_opt(j, "weight_scale", c.weight_scale);
    read_opt(j, "bias_scale", c.bias_scale);
    if (j.contains("readout")) {
      const auto& r = j.at("readout");
      read_opt(r, "gamma", c.readout.gamma);
      read_opt(r, "cosine", c.readout.cosine);
      read_opt(r, "hd_weight", c.readout.hd_weight);
      read_opt(r, "threshold_rd", c.readout.threshold_rd);
    }
    if (j.contains("rejected_harmful")) c.rejected_harmful = cluster_from_json(j.at("rejected_harmful"), c.rejected_harmful);
    if (j.contains("complied_harmful")) c.complied_harmful = cluster_from_json(j.at("complied_harmful"), c.complied_harmful);
    if (j.contains("complied_benign")) c.complied_benign = cluster_from_json(j.at("complied_benign"), c.complied_benign);
    if (j.contains("families")) {
      c.families.clear();
      for (const auto& f : j.at("families")) c.families.push_back(cluster_from_json(f, ClusterSpec{}));
    }
    if (j.contains("family_counts")) c.family_counts = split_from_json(j.at("family_counts"), c.family_counts);
    if (j.contains("benign_probe")) c.benign_probe = cluster_from_json(j.at("benign_probe"), c.benign_probe);
    if (j.contains("benign_counts")) c.benign_counts = split_from_json(j.at("benign_counts"), c.benign_counts);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("malformed world config: ") + e.what());
  }
  c.check();
  return c;
}

std::string fingerprint(const Json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace adasteer
