#include "adasteer/toy_model.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace adasteer {

namespace {

// Independent, reproducible random streams derived from one seed.
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return std::mt19937_64(seq);
}

Matrix gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double sd) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = sd * n(rng);
  }
  return m;
}

// Linear frame of layer l relative to the canonical (planted) frame.
Matrix frame(const SyntheticWorldConfig& c, const PlantedAxes& axes, int layer) {
  const double gain = layer == c.rd_layer ? 1.0 : c.off_layer_rd_gain;
  const double shear = layer < c.hd_layer ? c.hd_shear : 0.0;
  Matrix d = Matrix::Identity(c.hidden_size, c.hidden_size);
  d += (gain - 1.0) * axes.u_rd * axes.u_rd.transpose();
  d += shear * axes.u_hd * axes.nuisance.transpose();
  return d;
}

Vector block(const ToyLayer& layer, const Vector& h) {
  Vector next = h + (layer.weight * h + layer.bias).array().tanh().matrix();
  if (layer.mix.size() != 0) next += layer.mix * h;
  return next;
}

Logits read(const ToyTransformer& model, const Vector& h) {
  const Eigen::Vector2d z = model.readout * h + model.readout_bias;
  return {z(0), z(1)};
}

std::string id_for(const std::string& cluster, const char* split, int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05d", i);
  return cluster + ":" + split + ":" + buf;
}

}  // namespace

ToyTransformer ToyTransformer::identity(int layer_count, int hidden_size, const Vector& refuse_row,
                                        double refuse_bias) {
  require_same_size(refuse_row.size(), hidden_size, "refuse readout row");
  ToyTransformer m;
  m.layer_count = layer_count;
  m.hidden_size = hidden_size;
  for (int l = 0; l < layer_count; ++l) {
    m.layers.push_back({Matrix::Zero(hidden_size, hidden_size), Vector::Zero(hidden_size), Matrix()});
  }
  m.readout = Matrix::Zero(2, hidden_size);
  m.readout.row(0) = refuse_row.transpose();
  m.readout_bias = Eigen::Vector2d(refuse_bias, 0.0);
  return m;
}

ForwardResult forward(const ToyTransformer& model, const Vector& input, const Hook& hook) {
  require_same_size(input.size(), model.hidden_size, "toy model input");
  ForwardResult out;
  out.states.reserve(model.layer_count);
  Vector h = input;
  for (int l = 0; l < model.layer_count; ++l) {
    h = block(model.layers[l], h);
    if (hook) h = hook(l, 0, h);
    out.states.push_back(h);
  }
  out.logits = read(model, h);
  return out;
}

ForwardResult resume(const ToyTransformer& model, int layer, const Vector& state, const Hook& hook) {
  require_same_size(state.size(), model.hidden_size, "toy model state");
  if (layer < 0 || layer >= model.layer_count) {
    throw Error(ErrorCode::kLayerOutOfRange, "cannot resume at layer " + std::to_string(layer));
  }
  ForwardResult out;
  Vector h = hook ? hook(layer, 0, state) : state;
  out.states.push_back(h);
  for (int l = layer + 1; l < model.layer_count; ++l) {
    h = block(model.layers[l], h);
    if (hook) h = hook(l, 0, h);
    out.states.push_back(h);
  }
  out.logits = read(model, h);
  return out;
}

Behavior decide(const Logits& logits) { return logits.refuse > logits.comply ? Behavior::kReject : Behavior::kComply; }

void SyntheticWorldConfig::check() const {
  auto bad = [](const std::string& why) { throw Error(ErrorCode::kInvalidConfig, why); };
  if (hidden_size < 4) bad("hidden_size must be at least 4");
  if (layer_count < 1) bad("layer_count must be positive");
  if (rd_layer < 0 || rd_layer >= layer_count || hd_layer < 0 || hd_layer >= layer_count) {
    bad("planted layers must lie inside [0, layer_count)");
  }
  if (!(axis_angle_deg > 0.0 && axis_angle_deg <= 90.0)) bad("axis_angle_deg must be in (0, 90]");
  if (!(off_layer_rd_gain > 0.0)) bad("off_layer_rd_gain must be positive");
  if (hd_shear < 0.0 || weight_scale < 0.0 || bias_scale < 0.0) bad("scales must be non-negative");
  if (!(readout.cosine > 0.0 && readout.cosine <= 1.0)) bad("readout.cosine must be in (0, 1]");
  for (const ClusterSpec* c : {&rejected_harmful, &complied_harmful, &complied_benign}) {
    if (c->count <= 0) bad("cluster '" + c->name + "' needs a positive count");
    if (c->sigma < 0.0) bad("cluster '" + c->name + "' has negative sigma");
  }
  if (families.empty()) bad("at least one jailbreak family is required");
  for (const auto& f : families) {
    if (f.sigma < 0.0) bad("family '" + f.name + "' has negative sigma");
    if (f.name.empty() || f.name == kBenignAttackTag) bad("family names must be nonempty and not 'benign'");
  }
  if (benign_probe.sigma < 0.0) bad("benign probe has negative sigma");
  for (const SplitCounts* s : {&family_counts, &benign_counts}) {
    if (s->calib <= 0 || s->val <= 0 || s->test <= 0) bad("split counts must be positive");
  }
}

PlantedAxes planted_axes(const SyntheticWorldConfig& c) {
  auto rng = stream(c.seed, 1);
  const Matrix q = Eigen::HouseholderQR<Matrix>(gaussian(rng, c.hidden_size, 4, 1.0)).householderQ() *
                   Matrix::Identity(c.hidden_size, 4);
  const double theta = c.axis_angle_deg * std::numbers::pi / 180.0;
  PlantedAxes axes;
  axes.u_rd = q.col(0);
  axes.u_hd = std::cos(theta) * q.col(0) + std::sin(theta) * q.col(1);
  axes.nuisance = q.col(2);
  axes.readout_noise = q.col(3);
  return axes;
}

Vector world_input(const SyntheticWorldConfig& c, const PlantedAxes& axes, double rd, double hd,
                   const Vector& noise) {
  const Vector canonical = rd * axes.u_rd + hd * axes.u_hd + noise;
  return frame(c, axes, 0) * canonical;
}

ToyTransformer build_toy_model(const SyntheticWorldConfig& c) {
  c.check();
  const PlantedAxes axes = planted_axes(c);
  auto rng = stream(c.seed, 2);
  const int n = c.hidden_size;

  ToyTransformer m;
  m.layer_count = c.layer_count;
  m.hidden_size = n;
  Matrix prev = frame(c, axes, 0);
  for (int l = 0; l < c.layer_count; ++l) {
    ToyLayer layer;
    layer.weight = gaussian(rng, n, n, c.weight_scale / std::sqrt(static_cast<double>(n)));
    layer.bias = gaussian(rng, n, 1, c.bias_scale);
    const Matrix cur = frame(c, axes, l);
    const Matrix mix = cur * prev.inverse() - Matrix::Identity(n, n);
    if (!mix.isZero(0.0)) layer.mix = mix;
    prev = cur;
    m.layers.push_back(std::move(layer));
  }

  // REFUSE row: cosine `readout.cosine` with u_rd; the remainder leans on the
  // HD axis (orthogonalized against u_rd) by `hd_weight` and on a private axis.
  Vector hd_perp = axes.u_hd - axes.u_hd.dot(axes.u_rd) * axes.u_rd;
  if (hd_perp.norm() > 0.0) hd_perp.normalize();
  Vector off = c.readout.hd_weight * hd_perp + axes.readout_noise;
  off.normalize();
  const double sine = std::sqrt(std::max(0.0, 1.0 - c.readout.cosine * c.readout.cosine));
  m.readout = Matrix::Zero(2, n);
  m.readout.row(0) = (c.readout.gamma * (c.readout.cosine * axes.u_rd + sine * off)).transpose();

  const Vector boundary = world_input(c, axes, c.readout.threshold_rd, 0.0, Vector::Zero(n));
  const Logits at_boundary = forward(m, boundary).logits;
  m.readout_bias(0) = -at_boundary.refuse;
  return m;
}

ActivationRecord make_record(const ToyTransformer& model, const Vector& input, std::string prompt_id, DatasetTag tag,
                             std::optional<std::string> attack_tag) {
  const ForwardResult fwd = forward(model, input);
  ActivationRecord rec;
  rec.prompt_id = std::move(prompt_id);
  rec.dataset_tag = tag;
  rec.attack_tag = std::move(attack_tag);
  rec.behavior = decide(fwd.logits);
  rec.hidden.resize(model.layer_count, model.hidden_size);
  for (int l = 0; l < model.layer_count; ++l) rec.hidden.row(l) = fwd.states[l].transpose().cast<float>();
  return rec;
}

SyntheticWorld generate_world(const SyntheticWorldConfig& c) {
  c.check();
  SyntheticWorld world;
  world.axes = planted_axes(c);
  world.model = build_toy_model(c);

  auto rng = stream(c.seed, 3);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto sample = [&](const ClusterSpec& spec) {
    Vector noise(c.hidden_size);
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise(i) = spec.sigma * normal(rng);
    return world_input(c, world.axes, spec.rd, spec.hd, noise);
  };
  auto empty = [&] {
    ActivationDataset ds;
    ds.layer_count = c.layer_count;
    ds.hidden_size = c.hidden_size;
    ds.source = "synthetic";
    ds.seed = c.seed;
    return ds;
  };
  world.train = empty();
  world.calib = empty();
  world.val = empty();
  world.test = empty();

  const std::pair<const ClusterSpec*, DatasetTag> identification[] = {
      {&c.rejected_harmful, DatasetTag::kRejectedHarmful},
      {&c.complied_harmful, DatasetTag::kCompliedHarmful},
      {&c.complied_benign, DatasetTag::kCompliedBenign}};
  for (const auto& [spec, tag] : identification) {
    const std::string attack = tag == DatasetTag::kCompliedBenign ? std::string(kBenignAttackTag) : "vanilla";
    for (int i = 0; i < spec->count; ++i) {
      world.train.records.push_back(make_record(world.model, sample(*spec), id_for(spec->name, "train", i), tag, attack));
    }
  }

  struct Split {
    ActivationDataset* ds;
    const char* name;
    int SplitCounts::*count;
  };
  const Split splits[] = {{&world.calib, "calib", &SplitCounts::calib},
                          {&world.val, "val", &SplitCounts::val},
                          {&world.test, "test", &SplitCounts::test}};
  for (const auto& split : splits) {
    for (const auto& fam : c.families) {
      for (int i = 0; i < c.family_counts.*split.count; ++i) {
        split.ds->records.push_back(
            make_record(world.model, sample(fam), id_for(fam.name, split.name, i), DatasetTag::kProbe, fam.name));
      }
    }
    for (int i = 0; i < c.benign_counts.*split.count; ++i) {
      split.ds->records.push_back(make_record(world.model, sample(c.benign_probe),
                                              id_for(c.benign_probe.name, split.name, i), DatasetTag::kProbe,
                                              std::string(kBenignAttackTag)));
    }
  }
  return world;
}

}  // namespace adasteer
