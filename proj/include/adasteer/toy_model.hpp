#ifndef ADASTEER_TOY_MODEL_HPP
#define ADASTEER_TOY_MODEL_HPP

#include "adasteer/activation_store.hpp"
#include "adasteer/steer_engine.hpp"

#include <string>
#include <vector>

namespace adasteer {

// One residual block: h <- h + tanh(weight * h + bias) + mix * h.
// An empty `mix` means no linear term.
struct ToyLayer {
  Matrix weight;
  Vector bias;
  Matrix mix;
};

struct Logits {
  double refuse = 0.0;
  double comply = 0.0;
};

struct ToyTransformer {
  int layer_count = 0;
  int hidden_size = 0;
  std::vector<ToyLayer> layers;
  Matrix readout;       // 2 x hidden_size, rows (REFUSE, COMPLY)
  Eigen::Vector2d readout_bias = Eigen::Vector2d::Zero();

  /// Layers with zero weight, bias and mix: every block is the identity.
  static ToyTransformer identity(int layer_count, int hidden_size, const Vector& refuse_row, double refuse_bias = 0.0);
};

struct ForwardResult {
  std::vector<Vector> states;  // post-hook residual state after each layer
  Logits logits;
};

ForwardResult forward(const ToyTransformer& model, const Vector& input, const Hook& hook = nullptr);

/// Continues a forward pass from the unsteered state produced by block
/// `layer`: applies the hook at `layer`, then runs the remaining blocks.
/// `states` holds entries for `layer` onward only.
ForwardResult resume(const ToyTransformer& model, int layer, const Vector& state, const Hook& hook = nullptr);

/// reject iff REFUSE > COMPLY; an exact tie complies.
Behavior decide(const Logits& logits);

struct ClusterSpec {
  std::string name;
  double rd = 0.0;  // coordinate along the planted RD axis at the RD layer
  double hd = 0.0;  // coordinate along the planted HD axis at the HD layer
  double sigma = 1.0;
  int count = 0;
};

struct SplitCounts {
  int calib = 0;
  int val = 0;
  int test = 0;
};

struct ReadoutSpec {
  double gamma = 1.0;
  double cosine = 0.9;      // cosine between the REFUSE row and the planted RD axis
  double hd_weight = 0.0;   // share of the HD axis in the off-axis part of the REFUSE row
  double threshold_rd = 4.0;  // RD coordinate of the decision boundary for HD coordinate 0
};

struct SyntheticWorldConfig {
  int hidden_size = 64;
  int layer_count = 8;
  std::uint64_t seed = 20250519;
  double axis_angle_deg = 90.0;
  int rd_layer = 2;
  int hd_layer = 5;
  double off_layer_rd_gain = 0.6;  // RD-axis gain at every layer except rd_layer
  double hd_shear = 6.0;           // nuisance-to-HD mixing at layers below hd_layer
  double weight_scale = 0.01;
  double bias_scale = 0.002;
  ReadoutSpec readout;

  ClusterSpec rejected_harmful{"rejected_harmful", 8.0, 0.0, 1.0, 200};
  ClusterSpec complied_harmful{"complied_harmful", 0.0, 0.0, 1.0, 200};
  ClusterSpec complied_benign{"complied_benign", -5.0, 6.0, 1.0, 200};
  std::vector<ClusterSpec> families{
      {"JB20", -2.5, -1.0, 1.0, 0}, {"JB40", -5.0, -1.0, 1.0, 0},
      {"JB60", -7.5, -1.0, 1.0, 0}, {"JB80", -10.0, -1.0, 1.0, 0}};
  SplitCounts family_counts{10, 50, 200};
  ClusterSpec benign_probe{"benign", -5.0, 6.0, 1.0, 0};
  SplitCounts benign_counts{60, 100, 200};

  /// Throws InvalidConfig.
  void check() const;
};

// Orthonormal-ish frame the world is planted in.
struct PlantedAxes {
  Vector u_rd;
  Vector u_hd;
  Vector nuisance;
  Vector readout_noise;
};

struct SyntheticWorld {
  ToyTransformer model;
  PlantedAxes axes;
  ActivationDataset train;  // rejected_harmful, complied_harmful, complied_benign
  ActivationDataset calib;  // probes: jailbreak families and benign
  ActivationDataset val;
  ActivationDataset test;
};

PlantedAxes planted_axes(const SyntheticWorldConfig& config);
ToyTransformer build_toy_model(const SyntheticWorldConfig& config);

/// Model input for a point given by planted coordinates (plus optional noise
/// already expressed in the canonical frame).
Vector world_input(const SyntheticWorldConfig& config, const PlantedAxes& axes, double rd, double hd,
                   const Vector& noise);

SyntheticWorld generate_world(const SyntheticWorldConfig& config);

/// One record from a model input: unsteered states at every layer, behavior from the readout.
ActivationRecord make_record(const ToyTransformer& model, const Vector& input, std::string prompt_id, DatasetTag tag,
                             std::optional<std::string> attack_tag);

}  // namespace adasteer

#endif  // ADASTEER_TOY_MODEL_HPP
