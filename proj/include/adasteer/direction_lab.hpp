#ifndef ADASTEER_DIRECTION_LAB_HPP
#define ADASTEER_DIRECTION_LAB_HPP

#include "adasteer/activation_store.hpp"

#include <vector>

namespace adasteer {

// Centers, difference-in-means directions and steering vectors.
//
// Both position axes share one origin convention: the mean activation of
// complied harmful inputs, taken at the axis's own layer. Moving along d_rd
// away from that origin means "more rejection"; moving along d_hd means
// "more benign".
struct DirectionSet {
  int layer_rd = 0;
  int layer_hd = 0;
  int hidden_size = 0;
  Vector mu_r_harmful;     // at layer_rd
  Vector mu_c_harmful_rd;  // at layer_rd
  Vector mu_c_harmful_hd;  // at layer_hd
  Vector mu_c_benign;      // at layer_hd
  Vector d_rd;
  Vector d_hd;
  Vector v_rd;
  Vector v_hd;

  bool operator==(const DirectionSet&) const;
};

struct LayerDiagnosticsRow {
  int layer = 0;
  double benign_mean_pos_rd = 0.0;
  double harmful_mean_pos_rd = 0.0;
  double hd_overlap = 0.0;
  double separation_margin = 0.0;  // harmful minus benign mean pos_rd
  bool admissible = false;         // benign mean pos_rd strictly below harmful
};

using LayerDiagnostics = std::vector<LayerDiagnosticsRow>;

struct LayerSelection {
  int layer_rd = 0;
  int layer_hd = 0;
  LayerDiagnostics diagnostics;
};

/// Scalar projection of (h - origin) onto direction.
template <typename H, typename O, typename D>
double position_along(const Eigen::MatrixBase<H>& h, const Eigen::MatrixBase<O>& origin,
                      const Eigen::MatrixBase<D>& direction) {
  return (h - origin).dot(direction);
}

Vector mean_activation(const ActivationDataset& dataset, int layer);

Vector identify_rd(const ActivationDataset& rejected_harmful, const ActivationDataset& complied_harmful, int layer);
Vector identify_hd(const ActivationDataset& complied_benign, const ActivationDataset& complied_harmful, int layer);

/// (d_rd . d_hd) d_rd, the rank-one projection of d_hd onto d_rd without
/// normalization. With `normalized`, projects onto the unit d_rd instead.
Vector compliance_vector(const Vector& d_rd, const Vector& d_hd, bool normalized = false);

double position_rd(const Vector& h, const DirectionSet& directions);
double position_hd(const Vector& h, const DirectionSet& directions);

/// Assembles every center and vector at the two given layers.
DirectionSet identify_directions(const ActivationDataset& rejected_harmful, const ActivationDataset& complied_harmful,
                                 const ActivationDataset& complied_benign, int layer_rd, int layer_hd,
                                 bool normalized_compliance = false);

/// Fraction of benign positions below the harmful median plus fraction of
/// harmful positions above the benign median, halved.
double median_crossing_overlap(std::vector<double> benign, std::vector<double> harmful);

/// RD layer: largest benign-below-harmful gap. HD layer: smallest overlap.
/// Ties go to the lowest layer index.
LayerSelection select_layers(const ActivationDataset& rejected_harmful, const ActivationDataset& complied_harmful,
                             const ActivationDataset& complied_benign);

std::string diagnostics_csv(const LayerDiagnostics& diagnostics);

}  // namespace adasteer

#endif  // ADASTEER_DIRECTION_LAB_HPP
