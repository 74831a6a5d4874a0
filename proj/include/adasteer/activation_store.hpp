#ifndef ADASTEER_ACTIVATION_STORE_HPP
#define ADASTEER_ACTIVATION_STORE_HPP

#include "adasteer/common.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace adasteer {

// Hidden states are held at storage precision (binary32) so that a dataset
// built in memory is bit-identical to what an ADST file carries.
using HiddenMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ActivationRecord {
  std::string prompt_id;
  DatasetTag dataset_tag = DatasetTag::kProbe;
  std::optional<std::string> attack_tag;
  Behavior behavior = Behavior::kUnknown;
  HiddenMatrix hidden;  // (layer_count, hidden_size), last-token state per layer

  Vector layer(Eigen::Index l) const { return hidden.row(l).transpose().cast<double>(); }
  bool is_benign() const {
    return dataset_tag == DatasetTag::kCompliedBenign || attack_tag.value_or("") == kBenignAttackTag;
  }

  bool operator==(const ActivationRecord& other) const;
};

struct ActivationDataset {
  std::vector<ActivationRecord> records;
  int layer_count = 0;
  int hidden_size = 0;
  std::string source;
  std::optional<std::uint64_t> seed;

  bool empty() const { return records.empty(); }
  std::size_t size() const { return records.size(); }

  bool operator==(const ActivationDataset& other) const = default;
};

struct Violation {
  std::string prompt_id;  // empty for dataset-level problems
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// ADST binary format: see README for the byte layout.
ActivationDataset load_dataset(const std::filesystem::path& path);
void save_dataset(const ActivationDataset& dataset, const std::filesystem::path& path);

// Human-readable sidecar (<name>.manifest.json); never read back by the loader.
void write_manifest(const ActivationDataset& dataset, const std::filesystem::path& adst_path);

ActivationDataset partition_by_tag(const ActivationDataset& dataset, DatasetTag tag);
ValidationReport validate_dataset(const ActivationDataset& dataset);

// Same header, new record list.
ActivationDataset with_records(const ActivationDataset& like, std::vector<ActivationRecord> records);

}  // namespace adasteer

#endif  // ADASTEER_ACTIVATION_STORE_HPP
