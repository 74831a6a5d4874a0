#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "adasteer/law_fitter.hpp"
#include "adasteer/toy_model.hpp"
#include "helpers.hpp"

#include <random>

using namespace adasteer;
using testing::record;

namespace {

template <typename F>
ErrorCode error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error");
  return ErrorCode::kIoFailure;
}

// Normal equations for [pos 1] * (w b)' = lambda, solved by Cramer's rule.
std::pair<double, double> normal_equations(const std::vector<CalibrationPair>& pairs) {
  long double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (const auto& p : pairs) {
    if (p.saturated) continue;
    sx += p.pos;
    sy += p.lambda_min;
    sxx += static_cast<long double>(p.pos) * p.pos;
    sxy += static_cast<long double>(p.pos) * p.lambda_min;
    n += 1;
  }
  const long double det = sxx * n - sx * sx;
  return {static_cast<double>((sxy * n - sx * sy) / det), static_cast<double>((sxx * sy - sx * sxy) / det)};
}

SteeringLaw llama_r() { return SteeringLaw{-0.02, -1.2, 0.08, 0.22, 8}; }

// One-dimensional direction set: pos_rd is the first coordinate, pos_hd the second.
DirectionSet unit_set() {
  DirectionSet d;
  d.hidden_size = 2;
  d.mu_c_harmful_rd = d.mu_c_harmful_hd = Vector::Zero(2);
  d.d_rd = d.v_rd = Vector::Unit(2, 0);
  d.d_hd = Vector::Unit(2, 1);
  d.mu_r_harmful = d.d_rd;
  d.mu_c_benign = d.d_hd;
  d.v_hd = Vector::Zero(2);
  return d;
}

ActivationDataset points(const std::string& prefix, const std::vector<std::pair<float, float>>& xy, bool benign) {
  std::vector<ActivationRecord> recs;
  int i = 0;
  for (auto [x, y] : xy) {
    recs.push_back(record(prefix + std::to_string(i++), DatasetTag::kProbe, {{x, y}}, Behavior::kUnknown,
                          benign ? std::optional<std::string>("benign") : std::optional<std::string>("JB")));
  }
  return testing::dataset(std::move(recs));
}

}  // namespace

TEST_CASE("clamp_lambda replays the published rejection law") {
  const auto law = llama_r();
  CHECK(clamp_lambda(law, -26.36) == 0.08);
  CHECK(clamp_lambda(law, -40.65) == 0.08);
  CHECK(clamp_lambda(law, -45.62) == 0.08);
  CHECK(clamp_lambda(law, -74.84) == 0.22);
  CHECK(-0.02 * -26.36 - 1.2 == doctest::Approx(-0.6728));
  CHECK(-0.02 * -74.84 - 1.2 == doctest::Approx(0.2968));
  CHECK(clamp_lambda(law, -68.85) == doctest::Approx(0.177));

  const SteeringLaw flat{0.0, 0.5, 0.0, 1.0, 0};
  for (double p : {-1e6, -3.0, 0.0, 42.0}) CHECK(clamp_lambda(flat, p) == 0.5);
}

TEST_CASE("clamp_lambda is monotone in the sign of w") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-200.0, 200.0);
  for (int t = 0; t < 500; ++t) {
    const double a = u(rng), b = u(rng);
    const double lo = std::min(a, b), hi = std::max(a, b);
    CHECK(clamp_lambda(llama_r(), lo) >= clamp_lambda(llama_r(), hi));
    const SteeringLaw up{0.017, 0.25, -0.5, 0.25, 13};
    CHECK(clamp_lambda(up, lo) <= clamp_lambda(up, hi));
  }
}

TEST_CASE("normalize_bounds swaps reversed bounds") {
  SteeringLaw qwen{-0.01, 0.1, 0.2, 0.0, 5};
  CHECK(normalize_bounds(qwen));
  CHECK(qwen.lambda_lower == 0.0);
  CHECK(qwen.lambda_upper == 0.2);
  CHECK(!normalize_bounds(qwen));
}

TEST_CASE("geometric_lambda") {
  const Vector d = (Vector(2) << 2.0, 0.0).finished();
  CHECK(geometric_lambda(3.0, 3.0, d) == 0.0);
  CHECK(geometric_lambda(0.0, 8.0, d) == doctest::Approx(2.0));
  CHECK(error_of([] { geometric_lambda(0.0, 1.0, Vector::Zero(3)); }) == ErrorCode::kZeroDirection);
}

TEST_CASE("calibrate on an identity toy model matches the analytic threshold") {
  // Four identity layers, REFUSE = e0, COMPLY = 0. The hook adds lambda*v at
  // each of the 4 layers, so the refuse logit is h0 + 4*lambda*v0.
  const int layers = 4;
  const auto model = ToyTransformer::identity(layers, 2, Vector::Unit(2, 0));
  DirectionSet d = unit_set();
  d.v_rd = d.d_rd = (Vector(2) << 0.5, 0.0).finished();
  auto oracle = [&](const ActivationRecord& rec, double lambda) {
    Hook hook = [&](int, int, const Vector& h) -> Vector { return h + lambda * d.v_rd; };
    return decide(resume(model, 0, rec.layer(0), hook).logits);
  };
  // needs 4 * lambda * 0.5 > 0.23, i.e. lambda > 0.115
  auto rec = record("x", DatasetTag::kProbe, {{-0.23f, 0}, {-0.23f, 0}, {-0.23f, 0}, {-0.23f, 0}});
  auto done = record("y", DatasetTag::kProbe, {{1, 0}, {1, 0}, {1, 0}, {1, 0}});
  auto far = record("z", DatasetTag::kProbe, {{-50, 0}, {-50, 0}, {-50, 0}, {-50, 0}});
  const auto grid = LambdaGrid{0.0, 1.0, 0.01}.values();
  CHECK(grid.size() == 101);
  const auto pairs = calibrate({rec, done, far}, d, LawKind::kRejection, Behavior::kReject, oracle, grid);
  REQUIRE(pairs.size() == 3);
  const double analytic = 0.23f / (layers * 0.5);
  CHECK(pairs[0].lambda_min == doctest::Approx(0.12));
  CHECK(pairs[0].lambda_min - analytic < 0.01 + 1e-12);
  CHECK(pairs[0].lambda_min > analytic);
  CHECK(!pairs[0].saturated);
  CHECK(pairs[0].pos == doctest::Approx(-0.23 * 0.5).epsilon(1e-6));
  CHECK(pairs[1].lambda_min == 0.0);
  CHECK(pairs[2].saturated);

  CHECK(error_of([&] { calibrate({rec}, d, LawKind::kRejection, Behavior::kReject, oracle, {}); }) ==
        ErrorCode::kEmptyGrid);
  CHECK(error_of([&] { calibrate({rec}, d, LawKind::kRejection, Behavior::kReject, oracle, {0.2, 0.1}); }) ==
        ErrorCode::kEmptyGrid);
}

TEST_CASE("fit_law recovers exact lines") {
  std::vector<CalibrationPair> pairs;
  for (int i = 0; i < 10; ++i) {
    const double pos = -80.0 + 7.0 * i;
    pairs.push_back({"p" + std::to_string(i), pos, -0.02 * pos - 1.2, false});
  }
  pairs.push_back({"sat", 0.0, 99.0, true});
  const auto law = fit_law(pairs, 0.08, 0.22, 8);
  CHECK(std::abs(law.w + 0.02) < 1e-9);
  CHECK(std::abs(law.b + 1.2) < 1e-9);
  CHECK(law.lambda_lower == 0.08);
  CHECK(law.lambda_upper == 0.22);
  CHECK(law.layer == 8);
}

TEST_CASE("fit_law under noise agrees with the normal equations") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> noise(0.0, 0.005);
  std::uniform_real_distribution<double> pos(-100.0, 0.0);
  std::vector<CalibrationPair> pairs;
  for (int i = 0; i < 50; ++i) {
    const double p = pos(rng);
    pairs.push_back({"n" + std::to_string(i), p, -0.02 * p - 1.2 + noise(rng), false});
  }
  const auto law = fit_law(pairs, 0.0, 1.0, 0);
  const auto [w, b] = normal_equations(pairs);
  CHECK(law.w == doctest::Approx(w).epsilon(1e-10));
  CHECK(law.b == doctest::Approx(b).epsilon(1e-10));
  CHECK(std::abs(law.w + 0.02) < 0.005);
  CHECK(std::abs(law.b + 1.2) < 0.3);
}

TEST_CASE("fit_law errors") {
  CHECK(error_of([] { fit_law({{"a", 1.0, 0.1, false}}, 0, 1, 0); }) == ErrorCode::kInsufficientData);
  CHECK(error_of([] { fit_law({{"a", 1.0, 0.1, false}, {"b", 2.0, 0.2, true}}, 0, 1, 0); }) ==
        ErrorCode::kInsufficientData);
  CHECK(error_of([] { fit_law({{"a", 1.0, 0.1, false}, {"b", 1.0, 0.2, false}}, 0, 1, 0); }) ==
        ErrorCode::kDegeneratePositions);
  const auto law = fit_law({{"a", 0.0, 0.1, false}, {"b", 1.0, 0.2, false}}, 0.5, 0.1, 0);
  CHECK(law.lambda_lower == 0.1);
  CHECK(law.lambda_upper == 0.5);
}

TEST_CASE("grid_search") {
  const DirectionSet d = unit_set();
  // Jailbreak at pos_rd x rejects when lambda_r >= -x/10; benign complies when
  // lambda_r - lambda_c < 0.3.
  SteeredOracle oracle = [](const ActivationRecord& rec, double lr, double lc) {
    if (rec.is_benign()) return lr - lc < 0.3 ? Behavior::kComply : Behavior::kReject;
    return lr >= -rec.hidden(0, 0) / 10.0 - 1e-12 ? Behavior::kReject : Behavior::kComply;
  };
  const auto jb = points("j", {{-1, 0}, {-2, 0}, {-3, 0}, {-4, 0}}, false);
  const auto ben = points("b", {{-1, 5}, {-2, 5}}, true);
  const SteeringLaw zero = constant_law(0.0, 0);

  SUBCASE("exhaustive oracle agrees") {
    SearchSpec spec;
    spec.w_multipliers = {0.0, 0.5, 1.0};
    spec.b_offsets = {0.0, 0.1, 0.2, 0.3, 0.4};
    spec.alpha = 0.5;
    const SteeringLaw init{-0.1, 0.0, 0.0, 1.0, 0};
    const auto res = grid_search(init, zero, LawKind::kRejection, d, jb, ben, oracle, spec);
    CHECK(res.candidates == 15);

    double best = -1;
    for (double m : spec.w_multipliers) {
      for (double off : spec.b_offsets) {
        SteeringLaw c = init;
        c.w *= m;
        c.b += off;
        int hits = 0, ok = 0;
        for (const auto& r : jb.records) hits += oracle(r, clamp_lambda(c, r.hidden(0, 0)), 0) == Behavior::kReject;
        for (const auto& r : ben.records) ok += oracle(r, clamp_lambda(c, r.hidden(0, 0)), 0) == Behavior::kComply;
        best = std::max(best, 0.5 * hits / 4.0 + 0.5 * ok / 2.0);
      }
    }
    CHECK(res.objective == doctest::Approx(best));
    // the exact law w=-0.1, b=0 reaches DSR 1 while benign needs lambda_r < 0.3
    CHECK(res.law.w == doctest::Approx(-0.1));
    CHECK(res.law.b == doctest::Approx(0.0));
    CHECK(res.dsr == 1.0);
    CHECK(res.cr == 1.0);
  }
  SUBCASE("alpha 1 ignores compliance") {
    SearchSpec spec;
    spec.b_offsets = {0.0, 0.5};
    spec.alpha = 1.0;
    const SteeringLaw init{0.0, 0.0, 0.0, 1.0, 0};
    const auto res = grid_search(init, zero, LawKind::kRejection, d, jb, ben, oracle, spec);
    CHECK(res.law.b == 0.5);
    CHECK(res.dsr == 1.0);
    CHECK(res.cr == 0.0);
  }
  SUBCASE("all candidates tie: nearest the initial law wins") {
    SearchSpec spec;
    spec.b_offsets = {-0.02, 0.01, 0.02};
    const SteeringLaw init{0.0, 0.0, 0.0, 1.0, 0};
    const auto res = grid_search(init, zero, LawKind::kRejection, d, jb, ben, oracle, spec);
    CHECK(res.law.b == 0.01);
  }
  SUBCASE("empty validation set") {
    ActivationDataset none = ben;
    none.records.clear();
    CHECK(error_of([&] { grid_search(zero, zero, LawKind::kRejection, d, jb, none, oracle, SearchSpec{}); }) ==
          ErrorCode::kEmptyValidationSet);
  }
}

TEST_CASE("calibration_csv") {
  const std::string csv = calibration_csv({{"a", -1.5, 0.25, false}, {"b", 2.0, 1.0, true}});
  CHECK(csv == "prompt_id,pos,lambda_min,saturated\na,-1.5,0.25,0\nb,2,1,1\n");
}
