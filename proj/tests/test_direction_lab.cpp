#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "adasteer/direction_lab.hpp"
#include "adasteer/toy_model.hpp"
#include "helpers.hpp"

#include <random>

using namespace adasteer;
using testing::record;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

DirectionSet hand_set(const Vector& mu_c, const Vector& d_rd, const Vector& mu_c_hd, const Vector& d_hd) {
  DirectionSet d;
  d.hidden_size = static_cast<int>(mu_c.size());
  d.mu_c_harmful_rd = mu_c;
  d.mu_r_harmful = mu_c + d_rd;
  d.d_rd = d.v_rd = d_rd;
  d.mu_c_harmful_hd = mu_c_hd;
  d.mu_c_benign = mu_c_hd + d_hd;
  d.d_hd = d_hd;
  d.v_hd = compliance_vector(d_rd, d_hd);
  return d;
}

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

}  // namespace

TEST_CASE("mean_activation") {
  auto ds = testing::dataset({record("a", DatasetTag::kProbe, {{1, 0}, {9, 9}}),
                              record("b", DatasetTag::kProbe, {{3, 2}, {9, 9}})});
  CHECK(mean_activation(ds, 0).isApprox(vec({2, 1})));

  auto one = testing::dataset({record("a", DatasetTag::kProbe, {{1.5f, -2}})});
  CHECK(mean_activation(one, 0) == vec({1.5, -2}));

  CHECK(error_of([&] { mean_activation(ds, 2); }) == ErrorCode::kLayerOutOfRange);
  ActivationDataset empty = ds;
  empty.records.clear();
  CHECK(error_of([&] { mean_activation(empty, 0); }) == ErrorCode::kEmptyDataset);
}

TEST_CASE("mean_activation agrees with an independent summation") {
  std::mt19937_64 rng(11);
  const auto ds = testing::cloud(Vector::Constant(4, 5.0), 1.0, 10, 1, DatasetTag::kProbe, rng, "g");
  const Vector m = mean_activation(ds, 0);
  for (int j = 0; j < 4; ++j) {
    long double s = 0;
    for (const auto& r : ds.records) s += static_cast<long double>(r.hidden(0, j));
    const double independent = static_cast<double>(s / 10.0L);
    CHECK(m(j) == doctest::Approx(independent).epsilon(1e-12));
    CHECK(std::abs(m(j) - 5.0) < 3.0 / std::sqrt(10.0));
  }
}

TEST_CASE("identify_rd and identify_hd on hand examples") {
  auto a = testing::dataset({record("a", DatasetTag::kRejectedHarmful, {{2, 1}})});
  auto b = testing::dataset({record("b", DatasetTag::kCompliedHarmful, {{1, 1}})});
  CHECK(identify_rd(a, b, 0) == vec({1, 0}));
  CHECK(identify_rd(a, a, 0).isZero());
  CHECK(identify_rd(b, a, 0) == -identify_rd(a, b, 0));

  auto benign = testing::dataset({record("c", DatasetTag::kCompliedBenign, {{0, 3}})});
  auto harm = testing::dataset({record("d", DatasetTag::kCompliedHarmful, {{0, 1}})});
  CHECK(identify_hd(benign, harm, 0) == vec({0, 2}));
  CHECK(identify_hd(harm, harm, 0).isZero());

  auto wide = testing::dataset({record("e", DatasetTag::kRejectedHarmful, {{1, 2, 3}})});
  CHECK(error_of([&] { identify_rd(wide, b, 0); }) == ErrorCode::kDimensionMismatch);
}

TEST_CASE("compliance_vector") {
  CHECK(compliance_vector(vec({1, 0}), vec({0, 5})).isZero());
  CHECK(compliance_vector(vec({1, 0}), vec({3, 4})) == vec({3, 0}));
  // (2,0).(3,4) = 6, times (2,0)
  CHECK(compliance_vector(vec({2, 0}), vec({3, 4})) == vec({12, 0}));
  CHECK(compliance_vector(vec({2, 0}), vec({3, 4}), true).isApprox(vec({3, 0})));
  CHECK(error_of([&] { compliance_vector(vec({1, 0}), vec({1, 2, 3})); }) == ErrorCode::kDimensionMismatch);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    Vector d_rd(6), d_hd(6);
    for (int i = 0; i < 6; ++i) {
      d_rd(i) = n(rng);
      d_hd(i) = n(rng);
    }
    const Vector v = compliance_vector(d_rd, d_hd);
    const double scalar = v(0) / d_rd(0);
    CHECK(scalar == doctest::Approx(d_rd.dot(d_hd)).epsilon(1e-12));
    CHECK((v - scalar * d_rd).norm() < 1e-12 * (1.0 + v.norm()));
  }
}

TEST_CASE("positions on hand examples") {
  const Vector mu = vec({1, 1, 0});
  const Vector d_rd = vec({0, 2, 0});  // |d|^2 = 4
  const Vector mu_hd = vec({0, 0, 1});
  const Vector d_hd = vec({1, -1, 2});
  const auto set = hand_set(mu, d_rd, mu_hd, d_hd);

  CHECK(position_rd(mu, set) == 0.0);
  CHECK(position_rd(set.mu_r_harmful, set) == doctest::Approx(4.0));
  CHECK(position_rd(mu + 0.5 * d_rd, set) == doctest::Approx(2.0));

  CHECK(position_hd(mu_hd, set) == 0.0);
  CHECK(position_hd(set.mu_c_benign, set) == doctest::Approx(6.0));
  // (3, 0.5, -1) - (0,0,1) = (3, 0.5, -2); . (1,-1,2) = 3 - 0.5 - 4
  CHECK(position_hd(vec({3, 0.5, -1}), set) == doctest::Approx(-1.5));

  CHECK(error_of([&] { position_rd(vec({1, 2}), set); }) == ErrorCode::kDimensionMismatch);
}

TEST_CASE("translation covariance") {
  std::mt19937_64 rng(5);
  Vector c_rej = Vector::Zero(5), c_com = Vector::Zero(5), c_ben = Vector::Zero(5);
  c_rej(0) = 4;
  c_ben(1) = 3;
  auto rej = testing::cloud(c_rej, 0.5, 30, 1, DatasetTag::kRejectedHarmful, rng, "r");
  auto com = testing::cloud(c_com, 0.5, 30, 1, DatasetTag::kCompliedHarmful, rng, "c");
  auto ben = testing::cloud(c_ben, 0.5, 30, 1, DatasetTag::kCompliedBenign, rng, "b");
  const auto base = identify_directions(rej, com, ben, 0, 0);

  const Vector shift = (Vector(5) << 0.5, -1.0, 2.0, 0.25, 1.0).finished();
  for (auto* ds : {&rej, &com, &ben}) {
    for (auto& r : ds->records) r.hidden.row(0) += shift.transpose().cast<float>();
  }
  const auto moved = identify_directions(rej, com, ben, 0, 0);
  CHECK((moved.d_rd - base.d_rd).norm() < 1e-5);
  CHECK((moved.d_hd - base.d_hd).norm() < 1e-5);

  for (const auto& r : rej.records) {
    const Vector h = r.layer(0);
    const double before = position_rd(h - shift, base);
    CHECK(position_rd(h, base) == doctest::Approx(before + shift.dot(base.d_rd)).epsilon(1e-9));
    CHECK(position_rd(h, moved) == doctest::Approx(before).epsilon(1e-4));
  }
}

TEST_CASE("median_crossing_overlap") {
  CHECK(median_crossing_overlap({10, 11, 12}, {0, 1, 2}) == 0.0);
  // benign median 1.5, harmful median 1.5: one of two benign below, one of two harmful above
  CHECK(median_crossing_overlap({1, 2}, {1, 2}) == doctest::Approx(0.5));
  CHECK(median_crossing_overlap({0, 0, 0}, {5, 5, 5}) == doctest::Approx(1.0));
}

TEST_CASE("select_layers") {
  SUBCASE("planted world picks the planted layers") {
    const auto world = generate_world(SyntheticWorldConfig{});
    const auto sel = select_layers(partition_by_tag(world.train, DatasetTag::kRejectedHarmful),
                                   partition_by_tag(world.train, DatasetTag::kCompliedHarmful),
                                   partition_by_tag(world.train, DatasetTag::kCompliedBenign));
    CHECK(sel.layer_rd == 2);
    CHECK(sel.layer_hd == 5);
    CHECK(sel.diagnostics.size() == 8);
  }
  SUBCASE("identical clusters everywhere") {
    auto same = [](DatasetTag t) {
      return testing::dataset({record("x", t, {{1, 2}, {3, 4}}), record("y", t, {{2, 1}, {4, 3}})});
    };
    CHECK(error_of([&] {
            select_layers(same(DatasetTag::kRejectedHarmful), same(DatasetTag::kCompliedHarmful),
                          same(DatasetTag::kCompliedBenign));
          }) == ErrorCode::kNoAdmissibleLayer);
  }
  SUBCASE("single layer") {
    auto rej = testing::dataset({record("r", DatasetTag::kRejectedHarmful, {{4, 0}})});
    auto com = testing::dataset({record("c", DatasetTag::kCompliedHarmful, {{0, 0}})});
    auto ben = testing::dataset({record("b", DatasetTag::kCompliedBenign, {{-2, 3}})});
    const auto sel = select_layers(rej, com, ben);
    CHECK(sel.layer_rd == 0);
    CHECK(sel.layer_hd == 0);
  }
  SUBCASE("empty input") {
    auto rej = testing::dataset({record("r", DatasetTag::kRejectedHarmful, {{4, 0}})});
    ActivationDataset none = rej;
    none.records.clear();
    CHECK(error_of([&] { select_layers(rej, none, rej); }) == ErrorCode::kEmptyDataset);
  }
}

TEST_CASE("identify_directions keeps each center at its own layer") {
  auto rej = testing::dataset({record("r", DatasetTag::kRejectedHarmful, {{4, 0}, {8, 0}})});
  auto com = testing::dataset({record("c", DatasetTag::kCompliedHarmful, {{0, 1}, {0, 2}})});
  auto ben = testing::dataset({record("b", DatasetTag::kCompliedBenign, {{0, 5}, {-1, 7}})});
  const auto d = identify_directions(rej, com, ben, 0, 1);
  CHECK(d.mu_c_harmful_rd == vec({0, 1}));
  CHECK(d.mu_c_harmful_hd == vec({0, 2}));
  CHECK(d.d_rd == vec({4, -1}));
  CHECK(d.d_hd == vec({-1, 5}));
  CHECK(d.v_rd == d.d_rd);
  CHECK(d.v_hd.isApprox(-9.0 * d.d_rd));
}
