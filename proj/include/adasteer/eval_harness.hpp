#ifndef ADASTEER_EVAL_HARNESS_HPP
#define ADASTEER_EVAL_HARNESS_HPP

#include "adasteer/steer_engine.hpp"
#include "adasteer/toy_model.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace adasteer {

struct Cell {
  int hits = 0;
  int total = 0;

  double rate() const { return static_cast<double>(hits) / static_cast<double>(total); }
  bool operator==(const Cell&) const = default;
};

// DSR per attack tag over jailbreak records and CR over benign records.
// Tags with no records are absent rather than zero.
struct Metrics {
  std::map<std::string, Cell> dsr;
  std::optional<Cell> cr;

  /// Unweighted mean over attack tags; NaN when there are none.
  double avg_dsr() const;
  bool operator==(const Metrics&) const = default;
};

struct EvalReport {
  std::string label;
  std::string fingerprint;  // of the serialized policy; "none" for the unsteered run
  Metrics steered;
  Metrics baseline;
  std::vector<SteeringDecision> decisions;

  bool operator==(const EvalReport&) const = default;
};

/// Runs every record through the model, steered by `policy` when given.
/// Each record resumes from its stored layer-0 state, so the result is the
/// same as a full forward pass from the original input.
EvalReport evaluate(const SteeringPolicy* policy, const ToyTransformer& model, const ActivationDataset& dataset,
                    std::string label = "adasteer");

/// Metrics straight from stored behavior labels (dumps without a model).
Metrics metrics_from_labels(const ActivationDataset& dataset);

struct ScatterRow {
  std::string prompt_id;
  std::string attack_tag;
  double pos_rd = 0.0;
  double pos_hd = 0.0;
  Behavior behavior = Behavior::kUnknown;
};

std::vector<ScatterRow> position_scatter(const DirectionSet& directions, const ActivationDataset& dataset);
std::string scatter_csv(const std::vector<ScatterRow>& rows);

struct RenderedTable {
  std::string text;
  std::string csv;
};

/// Aligned text (2 decimals) plus lossless long-format CSV.
/// Throws SchemaMismatch when the reports cover different attack tags.
RenderedTable report_table(const std::vector<EvalReport>& reports);

/// Inverse of the CSV half of report_table (decisions are not carried).
std::vector<EvalReport> parse_report_csv(const std::string& csv);

}  // namespace adasteer

#endif  // ADASTEER_EVAL_HARNESS_HPP
