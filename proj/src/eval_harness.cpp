#include "adasteer/eval_harness.hpp"

#include "adasteer/io.hpp"
#include "adasteer/serialization.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <memory>
#include <set>
#include <sstream>

namespace adasteer {

namespace {

void tally(Metrics& m, const ActivationRecord& rec, Behavior b) {
  if (rec.is_benign()) {
    if (!m.cr) m.cr = Cell{};
    m.cr->total += 1;
    m.cr->hits += b == Behavior::kComply;
  } else {
    Cell& cell = m.dsr[rec.attack_tag.value_or("untagged")];
    cell.total += 1;
    cell.hits += b == Behavior::kReject;
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string fixed2(double v) {
  if (std::isnan(v)) return "-";
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << v;
  return s.str();
}

}  // namespace

double Metrics::avg_dsr() const {
  if (dsr.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (const auto& [tag, cell] : dsr) s += cell.rate();
  return s / static_cast<double>(dsr.size());
}

EvalReport evaluate(const SteeringPolicy* policy, const ToyTransformer& model, const ActivationDataset& dataset,
                    std::string label) {
  require_same_size(dataset.hidden_size, model.hidden_size, "dataset vs model hidden_size");
  require_same_size(dataset.layer_count, model.layer_count, "dataset vs model layer_count");
  std::shared_ptr<const SteeringPolicy> shared;
  EvalReport report;
  report.label = std::move(label);
  report.fingerprint = "none";
  if (policy) {
    policy->check();
    require_same_size(policy->directions.hidden_size, model.hidden_size, "policy vs model hidden_size");
    shared = std::make_shared<const SteeringPolicy>(*policy);
    report.fingerprint = fingerprint(to_json(*policy));
  }
  for (const auto& rec : dataset.records) {
    const Vector entry = rec.layer(0);
    const Behavior base = decide(resume(model, 0, entry).logits);
    tally(report.baseline, rec, base);
    if (!shared) {
      tally(report.steered, rec, base);
      continue;
    }
    SteeringDecision decision = compute_coefficients(*shared, rec);
    const Behavior steered = decide(resume(model, 0, entry, make_hook(shared, decision)).logits);
    tally(report.steered, rec, steered);
    report.decisions.push_back(std::move(decision));
  }
  return report;
}

Metrics metrics_from_labels(const ActivationDataset& dataset) {
  Metrics m;
  for (const auto& rec : dataset.records) {
    if (rec.behavior != Behavior::kUnknown) tally(m, rec, rec.behavior);
  }
  return m;
}

std::vector<ScatterRow> position_scatter(const DirectionSet& directions, const ActivationDataset& dataset) {
  std::vector<ScatterRow> rows;
  rows.reserve(dataset.size());
  for (const auto& rec : dataset.records) {
    if (directions.layer_rd >= rec.hidden.rows() || directions.layer_hd >= rec.hidden.rows()) {
      throw Error(ErrorCode::kDimensionMismatch, "record '" + rec.prompt_id + "' has too few layers");
    }
    rows.push_back({rec.prompt_id, rec.attack_tag.value_or(""), position_rd(rec.layer(directions.layer_rd), directions),
                    position_hd(rec.layer(directions.layer_hd), directions), rec.behavior});
  }
  return rows;
}

std::string scatter_csv(const std::vector<ScatterRow>& rows) {
  std::ostringstream out;
  out << "prompt_id,attack_tag,pos_rd,pos_hd,behavior\n";
  for (const auto& r : rows) {
    out << io::csv_field(r.prompt_id) << ',' << io::csv_field(r.attack_tag) << ',' << io::format_real(r.pos_rd) << ','
        << io::format_real(r.pos_hd) << ',' << to_string(r.behavior) << '\n';
  }
  return out.str();
}

RenderedTable report_table(const std::vector<EvalReport>& reports) {
  std::set<std::string> tags;
  bool first = true;
  for (const auto& r : reports) {
    std::set<std::string> mine;
    for (const auto& [tag, cell] : r.steered.dsr) mine.insert(tag);
    for (const auto& [tag, cell] : r.baseline.dsr) mine.insert(tag);
    if (first) {
      tags = mine;
      first = false;
    } else if (mine != tags) {
      throw Error(ErrorCode::kSchemaMismatch, "report '" + r.label + "' covers a different set of attack tags");
    }
  }

  std::vector<std::string> header{"method"};
  for (const auto& t : tags) header.push_back(t);
  for (const char* h : {"AVG", "CR", "base AVG", "base CR"}) header.push_back(h);

  std::vector<std::vector<std::string>> rows;
  for (const auto& r : reports) {
    std::vector<std::string> row{r.label};
    for (const auto& t : tags) {
      auto it = r.steered.dsr.find(t);
      row.push_back(it == r.steered.dsr.end() ? "-" : fixed2(it->second.rate()));
    }
    row.push_back(fixed2(r.steered.avg_dsr()));
    row.push_back(r.steered.cr ? fixed2(r.steered.cr->rate()) : "-");
    row.push_back(fixed2(r.baseline.avg_dsr()));
    row.push_back(r.baseline.cr ? fixed2(r.baseline.cr->rate()) : "-");
    rows.push_back(std::move(row));
  }

  std::vector<std::size_t> width(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) {
    width[i] = header[i].size();
    for (const auto& row : rows) width[i] = std::max(width[i], row[i].size());
  }
  std::ostringstream text;
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i == 0) {
        text << std::left << std::setw(static_cast<int>(width[i])) << cells[i];
      } else {
        text << "  " << std::right << std::setw(static_cast<int>(width[i])) << cells[i];
      }
    }
    text << '\n';
  };
  emit(header);
  for (const auto& row : rows) emit(row);

  std::ostringstream csv;
  csv << "label,fingerprint,run,metric,tag,hits,total,value\n";
  for (const auto& r : reports) {
    for (const auto& [run, m] : {std::pair<const char*, const Metrics*>{"steered", &r.steered}, {"baseline", &r.baseline}}) {
      const std::string prefix = io::csv_field(r.label) + ',' + r.fingerprint + ',' + run + ',';
      for (const auto& [tag, cell] : m->dsr) {
        csv << prefix << "dsr," << io::csv_field(tag) << ',' << cell.hits << ',' << cell.total << ','
            << io::format_real(cell.rate()) << '\n';
      }
      if (!m->dsr.empty()) csv << prefix << "avg_dsr,AVG,,," << io::format_real(m->avg_dsr()) << '\n';
      if (m->cr) {
        csv << prefix << "cr,benign," << m->cr->hits << ',' << m->cr->total << ',' << io::format_real(m->cr->rate())
            << '\n';
      }
    }
  }
  return {text.str(), csv.str()};
}

std::vector<EvalReport> parse_report_csv(const std::string& csv) {
  std::vector<EvalReport> out;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw Error(ErrorCode::kSchemaMismatch, "report CSV row has " + std::to_string(f.size()) + " fields");
    if (out.empty() || out.back().label != f[0] || out.back().fingerprint != f[1]) {
      out.push_back(EvalReport{f[0], f[1], {}, {}, {}});
    }
    Metrics& m = f[2] == "steered" ? out.back().steered : out.back().baseline;
    if (f[3] == "dsr") {
      m.dsr[f[4]] = Cell{std::stoi(f[5]), std::stoi(f[6])};
    } else if (f[3] == "cr") {
      m.cr = Cell{std::stoi(f[5]), std::stoi(f[6])};
    }
  }
  return out;
}

}  // namespace adasteer
