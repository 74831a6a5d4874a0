#ifndef ADASTEER_TESTS_HELPERS_HPP
#define ADASTEER_TESTS_HELPERS_HPP

#include "adasteer/activation_store.hpp"

#include <filesystem>
#include <initializer_list>
#include <random>
#include <string>

namespace testing {

using namespace adasteer;

inline ActivationRecord record(std::string id, DatasetTag tag, std::initializer_list<std::initializer_list<float>> rows,
                               Behavior behavior = Behavior::kUnknown,
                               std::optional<std::string> attack = std::nullopt) {
  ActivationRecord r;
  r.prompt_id = std::move(id);
  r.dataset_tag = tag;
  r.behavior = behavior;
  r.attack_tag = std::move(attack);
  r.hidden.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (float v : row) r.hidden(i, j++) = v;
    ++i;
  }
  return r;
}

inline ActivationDataset dataset(std::vector<ActivationRecord> records) {
  ActivationDataset ds;
  ds.layer_count = static_cast<int>(records.front().hidden.rows());
  ds.hidden_size = static_cast<int>(records.front().hidden.cols());
  ds.source = "test";
  ds.records = std::move(records);
  return ds;
}

// Gaussian cloud around `center`, replicated on every layer.
inline ActivationDataset cloud(const Vector& center, double sigma, int n, int layers, DatasetTag tag,
                               std::mt19937_64& rng, const std::string& prefix) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ActivationDataset ds;
  ds.layer_count = layers;
  ds.hidden_size = static_cast<int>(center.size());
  for (int i = 0; i < n; ++i) {
    ActivationRecord r;
    r.prompt_id = prefix + std::to_string(i);
    r.dataset_tag = tag;
    r.hidden.resize(layers, center.size());
    for (int l = 0; l < layers; ++l) {
      for (Eigen::Index j = 0; j < center.size(); ++j) r.hidden(l, j) = static_cast<float>(center(j) + sigma * normal(rng));
    }
    ds.records.push_back(std::move(r));
  }
  return ds;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("adasteer_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing

#endif
