#ifndef ADASTEER_PIPELINE_HPP
#define ADASTEER_PIPELINE_HPP

#include "adasteer/eval_harness.hpp"
#include "adasteer/serialization.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace adasteer {

struct Bounds {
  double lower = 0.0;
  double upper = 0.0;
};

struct PipelineConfig {
  bool synthetic = true;
  std::uint64_t seed = 20250519;  // overrides world.seed
  SyntheticWorldConfig world;

  // Input dumps per role. Relative paths resolve against out_dir.
  std::filesystem::path train = "train.adst";
  std::filesystem::path calib = "calib.adst";
  std::filesystem::path val = "val.adst";
  std::filesystem::path test = "test.adst";

  std::optional<int> layer_rd;  // unset: chosen by select_layers
  std::optional<int> layer_hd;
  bool normalized_compliance = false;

  LambdaGrid grid_r{0.0, 1.0, 0.01};
  LambdaGrid grid_c{-0.02, 0.02, 0.0002};
  Bounds bounds_r{0.0, 0.4};
  Bounds bounds_c{0.0, 0.02};

  SearchSpec search_r;      // first pass, rejection law alone
  SearchSpec search_c;      // compliance law, rejection law fixed
  bool refine_r = true;     // second rejection pass with the compliance law fixed
  SearchSpec refine_search_r;

  std::filesystem::path out_dir = "adasteer_out";

  std::filesystem::path resolve(const std::filesystem::path& p) const { return p.is_absolute() ? p : out_dir / p; }
  void check() const;
};

/// Applies `key.path=value` overrides to a JSON document. The value is parsed
/// as JSON when possible and kept as a string otherwise.
void apply_override(Json& doc, const std::string& assignment);

Json to_json(const PipelineConfig& c);
PipelineConfig pipeline_config_from_json(const Json& j);
PipelineConfig load_pipeline_config(const std::filesystem::path& path, const std::vector<std::string>& overrides);

struct DumpResult {
  SyntheticWorld world;
  std::vector<std::filesystem::path> files;
};

struct IdentifyResult {
  DirectionSet directions;
  std::optional<LayerDiagnostics> diagnostics;
  bool layers_overridden = false;
};

struct CalibrateResult {
  SteeringPolicy policy;
  std::vector<CalibrationPair> pairs_r;
  std::vector<CalibrationPair> pairs_c;
  SteeringLaw fitted_r;
  SteeringLaw fitted_c;
};

struct EvalResult {
  std::vector<EvalReport> reports;  // baseline, adasteer, w/o v_RD, w/o v_HD
  RenderedTable table;
  std::optional<Metrics> label_metrics;  // non-synthetic runs only
};

DumpResult cmd_dump_synthetic(const PipelineConfig& config);
IdentifyResult cmd_identify(const PipelineConfig& config);
CalibrateResult cmd_calibrate_fit(const PipelineConfig& config);
EvalResult cmd_eval(const PipelineConfig& config);

enum class Stage { kDump, kIdentify, kCalibrate, kEval };
std::vector<Stage> parse_stages(const std::string& csv);

/// Runs the selected stages in order; the first failure propagates.
EvalResult cmd_pipeline(const PipelineConfig& config, const std::vector<Stage>& stages);

/// validate_dataset over each given file; returns the number of violations.
std::size_t cmd_validate(const std::vector<std::filesystem::path>& files, std::ostream& out);

}  // namespace adasteer

#endif  // ADASTEER_PIPELINE_HPP
