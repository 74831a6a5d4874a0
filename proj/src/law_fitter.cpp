#include "adasteer/law_fitter.hpp"

#include "adasteer/io.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

namespace adasteer {

bool normalize_bounds(SteeringLaw& law) {
  if (law.lambda_lower <= law.lambda_upper) return false;
  std::swap(law.lambda_lower, law.lambda_upper);
  return true;
}

SteeringLaw constant_law(double value, int layer) { return SteeringLaw{0.0, value, value, value, layer}; }

double geometric_lambda(double pos, double target_pos, const Vector& direction) {
  const double norm2 = direction.squaredNorm();
  if (!(norm2 > 0.0)) throw Error(ErrorCode::kZeroDirection, "direction has zero norm");
  return (target_pos - pos) / norm2;
}

std::vector<double> LambdaGrid::values() const {
  if (!(step > 0.0) || stop < start) return {};
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = start + static_cast<double>(i) * step;
  return out;
}

std::vector<CalibrationPair> calibrate(const std::vector<ActivationRecord>& records, const DirectionSet& directions,
                                       LawKind kind, Behavior target, const BehaviorOracle& oracle,
                                       const std::vector<double>& grid) {
  if (grid.empty()) throw Error(ErrorCode::kEmptyGrid, "calibration grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw Error(ErrorCode::kEmptyGrid, "calibration grid is not strictly increasing");
  }
  std::vector<CalibrationPair> pairs;
  pairs.reserve(records.size());
  for (const auto& rec : records) {
    CalibrationPair pair;
    pair.prompt_id = rec.prompt_id;
    pair.pos = kind == LawKind::kRejection ? position_rd(rec.layer(directions.layer_rd), directions)
                                           : position_hd(rec.layer(directions.layer_hd), directions);
    pair.saturated = true;
    pair.lambda_min = grid.back();
    for (double lambda : grid) {
      if (oracle(rec, lambda) == target) {
        pair.lambda_min = lambda;
        pair.saturated = false;
        break;
      }
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

SteeringLaw fit_law(const std::vector<CalibrationPair>& pairs, double lambda_lower, double lambda_upper, int layer) {
  std::vector<const CalibrationPair*> used;
  for (const auto& p : pairs) {
    if (!p.saturated) used.push_back(&p);
  }
  if (used.size() < 2) {
    throw Error(ErrorCode::kInsufficientData,
                "need at least 2 non-saturated calibration pairs, have " + std::to_string(used.size()));
  }
  if (used.size() < 5) spdlog::warn("fitting a steering law on only {} calibration pairs", used.size());

  const double n = static_cast<double>(used.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto* p : used) {
    mean_x += p->pos;
    mean_y += p->lambda_min;
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto* p : used) {
    sxx += (p->pos - mean_x) * (p->pos - mean_x);
    sxy += (p->pos - mean_x) * (p->lambda_min - mean_y);
  }
  if (sxx == 0.0) throw Error(ErrorCode::kDegeneratePositions, "all calibration positions are equal");

  SteeringLaw law;
  law.w = sxy / sxx;
  law.b = mean_y - law.w * mean_x;
  law.lambda_lower = lambda_lower;
  law.lambda_upper = lambda_upper;
  law.layer = layer;
  if (normalize_bounds(law)) spdlog::warn("clamp bounds were reversed; swapped to [{}, {}]", law.lambda_lower, law.lambda_upper);
  return law;
}

namespace {

struct ValItem {
  const ActivationRecord* record;
  double pos_rd;
  double pos_hd;
  std::map<std::pair<double, double>, Behavior> memo;
};

std::vector<ValItem> prepare(const ActivationDataset& ds, const DirectionSet& directions) {
  std::vector<ValItem> items;
  items.reserve(ds.size());
  for (const auto& rec : ds.records) {
    items.push_back({&rec, position_rd(rec.layer(directions.layer_rd), directions),
                     position_hd(rec.layer(directions.layer_hd), directions), {}});
  }
  return items;
}

}  // namespace

SearchResult grid_search(const SteeringLaw& initial, const SteeringLaw& companion, LawKind kind,
                         const DirectionSet& directions, const ActivationDataset& val_jailbreak,
                         const ActivationDataset& val_benign, const SteeredOracle& oracle, const SearchSpec& spec) {
  if (val_jailbreak.empty() || val_benign.empty()) {
    throw Error(ErrorCode::kEmptyValidationSet, "grid search needs jailbreak and benign validation records");
  }
  auto jailbreak = prepare(val_jailbreak, directions);
  auto benign = prepare(val_benign, directions);

  auto behavior_of = [&](ValItem& item, const SteeringLaw& candidate) {
    const SteeringLaw& law_r = kind == LawKind::kRejection ? candidate : companion;
    const SteeringLaw& law_c = kind == LawKind::kRejection ? companion : candidate;
    const std::pair<double, double> key{clamp_lambda(law_r, item.pos_rd), clamp_lambda(law_c, item.pos_hd)};
    auto it = item.memo.find(key);
    if (it != item.memo.end()) return it->second;
    const Behavior b = oracle(*item.record, key.first, key.second);
    item.memo.emplace(key, b);
    return b;
  };

  std::vector<std::pair<double, double>> bounds = spec.bounds;
  if (bounds.empty()) bounds.emplace_back(initial.lambda_lower, initial.lambda_upper);

  SearchResult best;
  bool have_best = false;
  double best_dist = 0.0;
  for (const auto& [lo, hi] : bounds) {
    for (double mult : spec.w_multipliers) {
      for (double dw : spec.w_offsets) {
        for (double db : spec.b_offsets) {
          SteeringLaw cand = initial;
          cand.w = initial.w * mult + dw;
          cand.b = initial.b + db;
          cand.lambda_lower = lo;
          cand.lambda_upper = hi;
          normalize_bounds(cand);
          ++best.candidates;

          std::size_t rejected = 0, complied = 0;
          for (auto& item : jailbreak) rejected += behavior_of(item, cand) == Behavior::kReject;
          for (auto& item : benign) complied += behavior_of(item, cand) == Behavior::kComply;
          const double dsr = static_cast<double>(rejected) / static_cast<double>(jailbreak.size());
          const double cr = static_cast<double>(complied) / static_cast<double>(benign.size());
          const double objective = spec.alpha * dsr + (1.0 - spec.alpha) * cr;
          const double dist = std::hypot(cand.w - initial.w, cand.b - initial.b);

          bool better = !have_best || objective > best.objective;
          if (have_best && objective == best.objective) {
            if (dist < best_dist) {
              better = true;
            } else if (dist == best_dist) {
              better = std::tie(cand.w, cand.b, cand.lambda_lower, cand.lambda_upper) <
                       std::tie(best.law.w, best.law.b, best.law.lambda_lower, best.law.lambda_upper);
            }
          }
          if (better) {
            best.law = cand;
            best.objective = objective;
            best.dsr = dsr;
            best.cr = cr;
            best_dist = dist;
            have_best = true;
          }
        }
      }
    }
  }
  return best;
}

std::string calibration_csv(const std::vector<CalibrationPair>& pairs) {
  std::ostringstream out;
  out << "prompt_id,pos,lambda_min,saturated\n";
  for (const auto& p : pairs) {
    out << io::csv_field(p.prompt_id) << ',' << io::format_real(p.pos) << ',' << io::format_real(p.lambda_min) << ','
        << (p.saturated ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace adasteer
