#include "adasteer/activation_store.hpp"

#include "adasteer/io.hpp"

#include "json.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <set>

namespace adasteer {

namespace {

constexpr char kMagic[4] = {'A', 'D', 'S', 'T'};
constexpr std::uint16_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "ADST codec assumes a little-endian host");

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    const auto* p = reinterpret_cast<const char*>(&value);
    buf_.append(p, sizeof(T));
  }
  void put_string(std::string_view s) {
    if (s.size() > 0xFFFF) throw Error(ErrorCode::kIoFailure, "string longer than 65535 bytes");
    put<std::uint16_t>(static_cast<std::uint16_t>(s.size()));
    buf_.append(s.data(), s.size());
  }
  void put_floats(const float* data, std::size_t n) {
    buf_.append(reinterpret_cast<const char*>(data), n * sizeof(float));
  }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string get_string() {
    auto n = get<std::uint16_t>();
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  void get_floats(float* out, std::size_t n) {
    need(n * sizeof(float));
    std::memcpy(out, data_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
  }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw Error(ErrorCode::kTruncatedFile, "unexpected end of ADST data");
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace

bool ActivationRecord::operator==(const ActivationRecord& other) const {
  if (prompt_id != other.prompt_id || dataset_tag != other.dataset_tag || attack_tag != other.attack_tag ||
      behavior != other.behavior || hidden.rows() != other.hidden.rows() || hidden.cols() != other.hidden.cols()) {
    return false;
  }
  return std::memcmp(hidden.data(), other.hidden.data(), sizeof(float) * hidden.size()) == 0;
}

ActivationDataset load_dataset(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = io::read_file(path);
  } catch (const Error&) {
    throw Error(ErrorCode::kIoFailure, "cannot read '" + path.string() + "'");
  }
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::kMagicMismatch, "'" + path.string() + "' is not an ADST file");
  }
  ByteReader in(std::string_view(bytes).substr(4));
  auto version = in.get<std::uint16_t>();
  if (version != kVersion) {
    throw Error(ErrorCode::kMagicMismatch, "unsupported ADST version " + std::to_string(version));
  }
  ActivationDataset ds;
  ds.layer_count = in.get<std::uint16_t>();
  ds.hidden_size = static_cast<int>(in.get<std::uint32_t>());
  auto record_count = in.get<std::uint32_t>();
  ds.source = in.get_string();
  auto seed = in.get<std::uint64_t>();
  if (seed != 0) ds.seed = seed;
  if (ds.layer_count <= 0 || ds.hidden_size <= 0) {
    throw Error(ErrorCode::kDimensionMismatch, "header declares an empty hidden matrix");
  }

  const std::size_t per_record = static_cast<std::size_t>(ds.layer_count) * ds.hidden_size;
  std::set<std::string> seen;
  ds.records.reserve(record_count);
  for (std::uint32_t i = 0; i < record_count; ++i) {
    ActivationRecord rec;
    rec.prompt_id = in.get_string();
    auto tag = in.get<std::uint8_t>();
    if (tag > 3) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "record " + std::to_string(i) + " is misaligned (dataset_tag byte " + std::to_string(tag) + ")");
    }
    rec.dataset_tag = static_cast<DatasetTag>(tag);
    auto attack = in.get_string();
    if (!attack.empty()) rec.attack_tag = std::move(attack);
    auto behavior = in.get<std::uint8_t>();
    if (behavior > 2) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "record " + std::to_string(i) + " is misaligned (behavior byte " + std::to_string(behavior) + ")");
    }
    rec.behavior = static_cast<Behavior>(behavior);
    rec.hidden.resize(ds.layer_count, ds.hidden_size);
    in.get_floats(rec.hidden.data(), per_record);
    if (!rec.hidden.allFinite()) {
      throw Error(ErrorCode::kNonFiniteValue, "record '" + rec.prompt_id + "' holds a non-finite value");
    }
    if (!seen.insert(rec.prompt_id).second) {
      throw Error(ErrorCode::kDuplicatePromptId, "prompt_id '" + rec.prompt_id + "' repeats");
    }
    ds.records.push_back(std::move(rec));
  }
  if (in.remaining() != 0) {
    throw Error(ErrorCode::kDimensionMismatch, std::to_string(in.remaining()) +
                                                   " bytes follow the last record; record sizes disagree with header");
  }
  return ds;
}

void save_dataset(const ActivationDataset& dataset, const std::filesystem::path& path) {
  if (dataset.layer_count <= 0 || dataset.layer_count > 0xFFFF || dataset.hidden_size <= 0) {
    throw Error(ErrorCode::kDimensionMismatch, "dataset dimensions do not fit the ADST header");
  }
  ByteWriter out;
  for (char c : kMagic) out.put<char>(c);
  out.put<std::uint16_t>(kVersion);
  out.put<std::uint16_t>(static_cast<std::uint16_t>(dataset.layer_count));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.hidden_size));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.records.size()));
  out.put_string(dataset.source);
  out.put<std::uint64_t>(dataset.seed.value_or(0));
  for (const auto& rec : dataset.records) {
    if (rec.hidden.rows() != dataset.layer_count || rec.hidden.cols() != dataset.hidden_size) {
      throw Error(ErrorCode::kDimensionMismatch, "record '" + rec.prompt_id + "' disagrees with dataset dims");
    }
    out.put_string(rec.prompt_id);
    out.put<std::uint8_t>(static_cast<std::uint8_t>(rec.dataset_tag));
    out.put_string(rec.attack_tag.value_or(""));
    out.put<std::uint8_t>(static_cast<std::uint8_t>(rec.behavior));
    out.put_floats(rec.hidden.data(), static_cast<std::size_t>(rec.hidden.size()));
  }
  io::write_file_atomic(path, out.bytes());
}

void write_manifest(const ActivationDataset& dataset, const std::filesystem::path& adst_path) {
  nlohmann::ordered_json j;
  j["source"] = dataset.source;
  j["seed"] = dataset.seed ? nlohmann::ordered_json(*dataset.seed) : nlohmann::ordered_json(nullptr);
  j["layer_count"] = dataset.layer_count;
  j["hidden_size"] = dataset.hidden_size;
  j["record_count"] = dataset.records.size();
  nlohmann::ordered_json tags = nlohmann::ordered_json::object();
  for (DatasetTag tag : kAllTags) tags[std::string(to_string(tag))] = 0;
  std::map<std::string, int> attacks;
  for (const auto& rec : dataset.records) {
    tags[std::string(to_string(rec.dataset_tag))] = tags[std::string(to_string(rec.dataset_tag))].get<int>() + 1;
    if (rec.attack_tag) ++attacks[*rec.attack_tag];
  }
  j["counts_per_tag"] = tags;
  j["counts_per_attack"] = attacks;
  auto manifest = adst_path;
  manifest.replace_extension(".manifest.json");
  io::write_file_atomic(manifest, j.dump(2) + "\n");
}

ActivationDataset with_records(const ActivationDataset& like, std::vector<ActivationRecord> records) {
  ActivationDataset out;
  out.layer_count = like.layer_count;
  out.hidden_size = like.hidden_size;
  out.source = like.source;
  out.seed = like.seed;
  out.records = std::move(records);
  return out;
}

ActivationDataset partition_by_tag(const ActivationDataset& dataset, DatasetTag tag) {
  std::vector<ActivationRecord> kept;
  for (const auto& rec : dataset.records) {
    if (rec.dataset_tag == tag) kept.push_back(rec);
  }
  return with_records(dataset, std::move(kept));
}

ValidationReport validate_dataset(const ActivationDataset& dataset) {
  ValidationReport report;
  auto add = [&](std::string id, std::string msg) { report.violations.push_back({std::move(id), std::move(msg)}); };
  if (dataset.layer_count <= 0) add("", "layer_count must be positive");
  if (dataset.hidden_size <= 0) add("", "hidden_size must be positive");

  std::map<std::string, int> seen;
  for (const auto& rec : dataset.records) {
    if (++seen[rec.prompt_id] == 2) add(rec.prompt_id, "duplicate prompt_id");
    if (rec.hidden.rows() != dataset.layer_count || rec.hidden.cols() != dataset.hidden_size) {
      add(rec.prompt_id, "hidden shape (" + std::to_string(rec.hidden.rows()) + ", " +
                             std::to_string(rec.hidden.cols()) + ") disagrees with dataset (" +
                             std::to_string(dataset.layer_count) + ", " + std::to_string(dataset.hidden_size) + ")");
      continue;
    }
    for (Eigen::Index l = 0; l < rec.hidden.rows(); ++l) {
      for (Eigen::Index i = 0; i < rec.hidden.cols(); ++i) {
        if (!std::isfinite(rec.hidden(l, i))) {
          add(rec.prompt_id, "non-finite value at layer " + std::to_string(l) + ", index " + std::to_string(i));
        }
      }
    }
  }
  return report;
}

}  // namespace adasteer
