#include "adasteer/direction_lab.hpp"

#include "adasteer/io.hpp"

#include <algorithm>
#include <sstream>

namespace adasteer {

namespace {

void require_nonempty(const ActivationDataset& ds, const char* role) {
  if (ds.empty()) throw Error(ErrorCode::kEmptyDataset, std::string(role) + " dataset is empty");
}

void require_layer(const ActivationDataset& ds, int layer) {
  if (layer < 0 || layer >= ds.layer_count) {
    throw Error(ErrorCode::kLayerOutOfRange,
                "layer " + std::to_string(layer) + " outside [0, " + std::to_string(ds.layer_count) + ")");
  }
}

void require_compatible(const ActivationDataset& a, const ActivationDataset& b) {
  require_same_size(a.hidden_size, b.hidden_size, "hidden_size differs between datasets");
  require_same_size(a.layer_count, b.layer_count, "layer_count differs between datasets");
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> positions(const ActivationDataset& ds, int layer, const Vector& origin, const Vector& dir) {
  std::vector<double> out;
  out.reserve(ds.size());
  for (const auto& rec : ds.records) out.push_back(position_along(rec.layer(layer), origin, dir));
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

bool DirectionSet::operator==(const DirectionSet& o) const {
  return layer_rd == o.layer_rd && layer_hd == o.layer_hd && hidden_size == o.hidden_size &&
         mu_r_harmful == o.mu_r_harmful && mu_c_harmful_rd == o.mu_c_harmful_rd &&
         mu_c_harmful_hd == o.mu_c_harmful_hd && mu_c_benign == o.mu_c_benign && d_rd == o.d_rd && d_hd == o.d_hd &&
         v_rd == o.v_rd && v_hd == o.v_hd;
}

Vector mean_activation(const ActivationDataset& dataset, int layer) {
  require_nonempty(dataset, "input");
  require_layer(dataset, layer);
  Vector sum = Vector::Zero(dataset.hidden_size);
  for (const auto& rec : dataset.records) {
    require_same_size(rec.hidden.cols(), dataset.hidden_size, "record width");
    sum += rec.layer(layer);
  }
  return sum / static_cast<double>(dataset.size());
}

Vector identify_rd(const ActivationDataset& rejected_harmful, const ActivationDataset& complied_harmful, int layer) {
  require_nonempty(rejected_harmful, "rejected_harmful");
  require_nonempty(complied_harmful, "complied_harmful");
  require_compatible(rejected_harmful, complied_harmful);
  return mean_activation(rejected_harmful, layer) - mean_activation(complied_harmful, layer);
}

Vector identify_hd(const ActivationDataset& complied_benign, const ActivationDataset& complied_harmful, int layer) {
  require_nonempty(complied_benign, "complied_benign");
  require_nonempty(complied_harmful, "complied_harmful");
  require_compatible(complied_benign, complied_harmful);
  return mean_activation(complied_benign, layer) - mean_activation(complied_harmful, layer);
}

Vector compliance_vector(const Vector& d_rd, const Vector& d_hd, bool normalized) {
  require_same_size(d_rd.size(), d_hd.size(), "compliance_vector operands");
  if (!normalized) return d_rd.dot(d_hd) * d_rd;
  const double norm2 = d_rd.squaredNorm();
  if (norm2 == 0.0) return Vector::Zero(d_rd.size());
  return (d_rd.dot(d_hd) / norm2) * d_rd;
}

double position_rd(const Vector& h, const DirectionSet& ds) {
  require_same_size(h.size(), ds.d_rd.size(), "hidden vector vs d_rd");
  return position_along(h, ds.mu_c_harmful_rd, ds.d_rd);
}

double position_hd(const Vector& h, const DirectionSet& ds) {
  require_same_size(h.size(), ds.d_hd.size(), "hidden vector vs d_hd");
  return position_along(h, ds.mu_c_harmful_hd, ds.d_hd);
}

DirectionSet identify_directions(const ActivationDataset& rejected_harmful, const ActivationDataset& complied_harmful,
                                 const ActivationDataset& complied_benign, int layer_rd, int layer_hd,
                                 bool normalized_compliance) {
  require_nonempty(rejected_harmful, "rejected_harmful");
  require_nonempty(complied_harmful, "complied_harmful");
  require_nonempty(complied_benign, "complied_benign");
  require_compatible(rejected_harmful, complied_harmful);
  require_compatible(complied_benign, complied_harmful);

  DirectionSet ds;
  ds.layer_rd = layer_rd;
  ds.layer_hd = layer_hd;
  ds.hidden_size = complied_harmful.hidden_size;
  ds.mu_r_harmful = mean_activation(rejected_harmful, layer_rd);
  ds.mu_c_harmful_rd = mean_activation(complied_harmful, layer_rd);
  ds.mu_c_harmful_hd = mean_activation(complied_harmful, layer_hd);
  ds.mu_c_benign = mean_activation(complied_benign, layer_hd);
  ds.d_rd = ds.mu_r_harmful - ds.mu_c_harmful_rd;
  ds.d_hd = ds.mu_c_benign - ds.mu_c_harmful_hd;
  ds.v_rd = ds.d_rd;
  ds.v_hd = compliance_vector(ds.d_rd, ds.d_hd, normalized_compliance);
  return ds;
}

double median_crossing_overlap(std::vector<double> benign, std::vector<double> harmful) {
  if (benign.empty() || harmful.empty()) throw Error(ErrorCode::kEmptyDataset, "overlap needs both groups");
  const double harmful_median = median(harmful);
  const double benign_median = median(benign);
  const auto below = std::count_if(benign.begin(), benign.end(), [&](double p) { return p < harmful_median; });
  const auto above = std::count_if(harmful.begin(), harmful.end(), [&](double p) { return p > benign_median; });
  return 0.5 * (static_cast<double>(below) / static_cast<double>(benign.size()) +
                static_cast<double>(above) / static_cast<double>(harmful.size()));
}

LayerSelection select_layers(const ActivationDataset& rejected_harmful, const ActivationDataset& complied_harmful,
                             const ActivationDataset& complied_benign) {
  require_nonempty(rejected_harmful, "rejected_harmful");
  require_nonempty(complied_harmful, "complied_harmful");
  require_nonempty(complied_benign, "complied_benign");
  require_compatible(rejected_harmful, complied_harmful);
  require_compatible(complied_benign, complied_harmful);

  LayerSelection sel;
  int best_rd = -1;
  int best_hd = -1;
  for (int l = 0; l < complied_harmful.layer_count; ++l) {
    const Vector mu_ch = mean_activation(complied_harmful, l);
    const Vector d_rd = mean_activation(rejected_harmful, l) - mu_ch;
    const Vector d_hd = mean_activation(complied_benign, l) - mu_ch;

    LayerDiagnosticsRow row;
    row.layer = l;
    row.benign_mean_pos_rd = mean_of(positions(complied_benign, l, mu_ch, d_rd));
    row.harmful_mean_pos_rd = mean_of(positions(complied_harmful, l, mu_ch, d_rd));
    row.separation_margin = row.harmful_mean_pos_rd - row.benign_mean_pos_rd;
    row.admissible = row.benign_mean_pos_rd < row.harmful_mean_pos_rd;
    row.hd_overlap =
        median_crossing_overlap(positions(complied_benign, l, mu_ch, d_hd), positions(complied_harmful, l, mu_ch, d_hd));
    sel.diagnostics.push_back(row);

    if (row.admissible && (best_rd < 0 || row.separation_margin > sel.diagnostics[best_rd].separation_margin)) {
      best_rd = l;
    }
    if (best_hd < 0 || row.hd_overlap < sel.diagnostics[best_hd].hd_overlap) best_hd = l;
  }
  if (best_rd < 0) {
    throw Error(ErrorCode::kNoAdmissibleLayer, "no layer places benign inputs below complied harmful ones on RD");
  }
  sel.layer_rd = best_rd;
  sel.layer_hd = best_hd;
  return sel;
}

std::string diagnostics_csv(const LayerDiagnostics& diagnostics) {
  std::ostringstream out;
  out << "layer,benign_mean_pos_rd,harmful_mean_pos_rd,hd_overlap,separation_margin,admissible\n";
  for (const auto& r : diagnostics) {
    out << r.layer << ',' << io::format_real(r.benign_mean_pos_rd) << ',' << io::format_real(r.harmful_mean_pos_rd)
        << ',' << io::format_real(r.hd_overlap) << ',' << io::format_real(r.separation_margin) << ','
        << (r.admissible ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace adasteer
