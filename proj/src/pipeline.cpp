#include "adasteer/pipeline.hpp"

#include "adasteer/io.hpp"

#include <spdlog/spdlog.h>

#include <iostream>
#include <sstream>

namespace adasteer {

namespace {

Json search_to_json(const SearchSpec& s) {
  Json bounds = Json::array();
  for (const auto& [lo, hi] : s.bounds) bounds.push_back(Json::array({lo, hi}));
  return Json{{"w_multipliers", s.w_multipliers},
              {"w_offsets", s.w_offsets},
              {"b_offsets", s.b_offsets},
              {"bounds", bounds},
              {"alpha", s.alpha}};
}

SearchSpec search_from_json(const Json& j, SearchSpec s) {
  if (j.contains("w_multipliers")) s.w_multipliers = j.at("w_multipliers").get<std::vector<double>>();
  if (j.contains("w_offsets")) s.w_offsets = j.at("w_offsets").get<std::vector<double>>();
  if (j.contains("b_offsets")) s.b_offsets = j.at("b_offsets").get<std::vector<double>>();
  if (j.contains("bounds")) {
    s.bounds.clear();
    for (const auto& b : j.at("bounds")) s.bounds.emplace_back(b.at(0).get<double>(), b.at(1).get<double>());
  }
  if (j.contains("alpha")) s.alpha = j.at("alpha").get<double>();
  return s;
}

std::vector<double> range(double start, double stop, double step) { return LambdaGrid{start, stop, step}.values(); }

Json grid_to_json(const LambdaGrid& g) { return Json{{"start", g.start}, {"stop", g.stop}, {"step", g.step}}; }

LambdaGrid grid_from_json(const Json& j, LambdaGrid g) {
  if (j.contains("start")) g.start = j.at("start").get<double>();
  if (j.contains("stop")) g.stop = j.at("stop").get<double>();
  if (j.contains("step")) g.step = j.at("step").get<double>();
  return g;
}

Json bounds_to_json(const Bounds& b) { return Json::array({b.lower, b.upper}); }

Bounds bounds_from_json(const Json& j) {
  Bounds b{j.at(0).get<double>(), j.at(1).get<double>()};
  if (b.lower > b.upper) {
    spdlog::warn("clamp bounds [{}, {}] are reversed; swapping", b.lower, b.upper);
    std::swap(b.lower, b.upper);
  }
  return b;
}

PipelineConfig defaults() {
  PipelineConfig c;
  c.search_r.alpha = 1.0;
  c.search_r.w_multipliers = {1.0};
  c.search_r.b_offsets = range(0.0, 0.2, 0.005);
  // The fitted compliance slope is close to flat on the default world, so the
  // search adds slope outright and tries a few ceilings.
  c.search_c.alpha = 0.5;
  c.search_c.w_offsets = {0.0, 1e-4, 2e-4, 4e-4, 8e-4};
  c.search_c.b_offsets = range(-0.04, 0.004, 0.001);
  c.search_c.bounds = {{0.0, 0.003}, {0.0, 0.005}, {0.0, 0.008}};
  c.refine_search_r.alpha = 0.5;
  c.refine_search_r.w_multipliers = {0.9, 1.0, 1.1};
  c.refine_search_r.b_offsets = range(-0.03, 0.03, 0.005);
  return c;
}

void write_json(const std::filesystem::path& path, const Json& j) { io::write_file_atomic(path, j.dump(2) + "\n"); }

Json read_json(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

ToyTransformer model_for(const PipelineConfig& config) {
  if (!config.synthetic) {
    throw Error(ErrorCode::kMissingInput, "this stage needs the synthetic toy model as its behavior oracle");
  }
  SyntheticWorldConfig world = config.world;
  world.seed = config.seed;
  return build_toy_model(world);
}

// Full dual-vector steering of a stored record through the toy model.
SteeredOracle steered_oracle(const ToyTransformer& model, const DirectionSet& dirs) {
  return [&model, &dirs](const ActivationRecord& rec, double lambda_r, double lambda_c) {
    const Vector shift = lambda_r * dirs.v_rd + lambda_c * dirs.v_hd;
    Hook hook = [&shift](int, int, const Vector& h) -> Vector { return h + shift; };
    return decide(resume(model, 0, rec.layer(0), hook).logits);
  };
}

std::pair<ActivationDataset, ActivationDataset> split_probes(const ActivationDataset& ds) {
  std::vector<ActivationRecord> jailbreak, benign;
  for (const auto& rec : ds.records) (rec.is_benign() ? benign : jailbreak).push_back(rec);
  return {with_records(ds, std::move(jailbreak)), with_records(ds, std::move(benign))};
}

}  // namespace

void PipelineConfig::check() const {
  if (bounds_r.lower > bounds_r.upper || bounds_c.lower > bounds_c.upper) {
    throw Error(ErrorCode::kInvalidConfig, "clamp bounds must satisfy lower <= upper");
  }
  if (grid_r.values().empty() || grid_c.values().empty()) throw Error(ErrorCode::kEmptyGrid, "calibration grid is empty");
  for (const SearchSpec* s : {&search_r, &search_c, &refine_search_r}) {
    if (s->alpha < 0.0 || s->alpha > 1.0) throw Error(ErrorCode::kInvalidConfig, "alpha must lie in [0, 1]");
  }
  if (synthetic) world.check();
}

void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::kInvalidConfig, "override '" + assignment + "' is not key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(raw);
  } catch (const nlohmann::json::exception&) {
    value = raw;
  }
  Json* node = &doc;
  std::istringstream parts(key);
  std::string part;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) path.push_back(part);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    Json& child = (*node)[path[i]];
    if (child.is_null()) child = Json::object();
    node = &child;
  }
  (*node)[path.back()] = value;
}

Json to_json(const PipelineConfig& c) {
  Json j{{"synthetic", c.synthetic},
         {"seed", c.seed},
         {"world", to_json(c.world)},
         {"inputs", {{"train", c.train.string()}, {"calib", c.calib.string()}, {"val", c.val.string()},
                     {"test", c.test.string()}}},
         {"layers", {{"rd", c.layer_rd ? Json(*c.layer_rd) : Json(nullptr)},
                     {"hd", c.layer_hd ? Json(*c.layer_hd) : Json(nullptr)}}},
         {"normalized_compliance", c.normalized_compliance},
         {"calibration", {{"grid_r", grid_to_json(c.grid_r)}, {"grid_c", grid_to_json(c.grid_c)}}},
         {"bounds", {{"r", bounds_to_json(c.bounds_r)}, {"c", bounds_to_json(c.bounds_c)}}},
         {"search", {{"r", search_to_json(c.search_r)},
                     {"c", search_to_json(c.search_c)},
                     {"refine_r", c.refine_r},
                     {"refine", search_to_json(c.refine_search_r)}}},
         {"out_dir", c.out_dir.string()}};
  return j;
}

PipelineConfig pipeline_config_from_json(const Json& j) {
  PipelineConfig c = defaults();
  try {
    if (j.contains("synthetic")) c.synthetic = j.at("synthetic").get<bool>();
    if (j.contains("world")) c.world = world_config_from_json(j.at("world"));
    if (j.contains("seed")) {
      c.seed = j.at("seed").get<std::uint64_t>();
    } else if (c.synthetic && !j.contains("world")) {
      spdlog::info("no seed in config; using default {}", c.seed);
    } else if (j.contains("world") && j.at("world").contains("seed")) {
      c.seed = c.world.seed;
    }
    c.world.seed = c.seed;
    if (j.contains("inputs")) {
      const auto& in = j.at("inputs");
      if (in.contains("train")) c.train = in.at("train").get<std::string>();
      if (in.contains("calib")) c.calib = in.at("calib").get<std::string>();
      if (in.contains("val")) c.val = in.at("val").get<std::string>();
      if (in.contains("test")) c.test = in.at("test").get<std::string>();
    }
    if (j.contains("layers")) {
      const auto& l = j.at("layers");
      if (l.contains("rd") && !l.at("rd").is_null()) c.layer_rd = l.at("rd").get<int>();
      if (l.contains("hd") && !l.at("hd").is_null()) c.layer_hd = l.at("hd").get<int>();
    }
    if (j.contains("normalized_compliance")) c.normalized_compliance = j.at("normalized_compliance").get<bool>();
    if (j.contains("calibration")) {
      const auto& cal = j.at("calibration");
      if (cal.contains("grid_r")) c.grid_r = grid_from_json(cal.at("grid_r"), c.grid_r);
      if (cal.contains("grid_c")) c.grid_c = grid_from_json(cal.at("grid_c"), c.grid_c);
    }
    if (j.contains("bounds")) {
      const auto& b = j.at("bounds");
      if (b.contains("r")) c.bounds_r = bounds_from_json(b.at("r"));
      if (b.contains("c")) c.bounds_c = bounds_from_json(b.at("c"));
    }
    if (j.contains("search")) {
      const auto& s = j.at("search");
      if (s.contains("r")) c.search_r = search_from_json(s.at("r"), c.search_r);
      if (s.contains("c")) c.search_c = search_from_json(s.at("c"), c.search_c);
      if (s.contains("refine_r")) c.refine_r = s.at("refine_r").get<bool>();
      if (s.contains("refine")) c.refine_search_r = search_from_json(s.at("refine"), c.refine_search_r);
    }
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("malformed pipeline config: ") + e.what());
  }
  c.check();
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  Json doc = path.empty() ? Json::object() : read_json(path);
  for (const auto& o : overrides) apply_override(doc, o);
  return pipeline_config_from_json(doc);
}

DumpResult cmd_dump_synthetic(const PipelineConfig& config) {
  if (!config.synthetic) throw Error(ErrorCode::kInvalidConfig, "dump-synthetic needs synthetic mode");
  SyntheticWorldConfig wc = config.world;
  wc.seed = config.seed;
  DumpResult result{generate_world(wc), {}};
  std::filesystem::create_directories(config.out_dir);
  const std::pair<const ActivationDataset*, const std::filesystem::path*> outputs[] = {
      {&result.world.train, &config.train},
      {&result.world.calib, &config.calib},
      {&result.world.val, &config.val},
      {&result.world.test, &config.test}};
  for (const auto& [ds, rel] : outputs) {
    const auto path = config.resolve(*rel);
    save_dataset(*ds, path);
    write_manifest(*ds, path);
    result.files.push_back(path);
    spdlog::info("wrote {} ({} records)", path.string(), ds->size());
  }
  return result;
}

IdentifyResult cmd_identify(const PipelineConfig& config) {
  const ActivationDataset train = load_dataset(config.resolve(config.train));
  const auto rejected = partition_by_tag(train, DatasetTag::kRejectedHarmful);
  const auto complied = partition_by_tag(train, DatasetTag::kCompliedHarmful);
  const auto benign = partition_by_tag(train, DatasetTag::kCompliedBenign);

  IdentifyResult result;
  int layer_rd = 0, layer_hd = 0;
  try {
    LayerSelection sel = select_layers(rejected, complied, benign);
    layer_rd = sel.layer_rd;
    layer_hd = sel.layer_hd;
    result.diagnostics = std::move(sel.diagnostics);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoAdmissibleLayer || !(config.layer_rd && config.layer_hd)) throw;
    spdlog::warn("{}; using the configured layers", e.what());
  }
  if (config.layer_rd) layer_rd = *config.layer_rd;
  if (config.layer_hd) layer_hd = *config.layer_hd;
  result.layers_overridden = config.layer_rd.has_value() || config.layer_hd.has_value();

  result.directions =
      identify_directions(rejected, complied, benign, layer_rd, layer_hd, config.normalized_compliance);
  std::filesystem::create_directories(config.out_dir);
  write_json(config.out_dir / "directionset.json", to_json(result.directions));
  if (result.diagnostics) {
    io::write_file_atomic(config.out_dir / "layer_diagnostics.csv", diagnostics_csv(*result.diagnostics));
  }
  spdlog::info("directions identified at layers rd={} hd={}", layer_rd, layer_hd);
  return result;
}

CalibrateResult cmd_calibrate_fit(const PipelineConfig& config) {
  const DirectionSet dirs = direction_set_from_json(read_json(config.out_dir / "directionset.json"));
  const ToyTransformer model = model_for(config);
  const ActivationDataset calib = load_dataset(config.resolve(config.calib));
  const auto [val_jailbreak, val_benign] = split_probes(load_dataset(config.resolve(config.val)));
  const SteeredOracle oracle = steered_oracle(model, dirs);

  CalibrateResult result;

  // Rejection law: jailbreak inputs the unsteered model complies with.
  std::vector<ActivationRecord> complied;
  for (const auto& rec : calib.records) {
    if (!rec.is_benign() && rec.behavior == Behavior::kComply) complied.push_back(rec);
  }
  result.pairs_r = calibrate(
      complied, dirs, LawKind::kRejection, Behavior::kReject,
      [&](const ActivationRecord& rec, double lambda) { return oracle(rec, lambda, 0.0); }, config.grid_r.values());
  result.fitted_r = fit_law(result.pairs_r, config.bounds_r.lower, config.bounds_r.upper, dirs.layer_rd);
  spdlog::debug("fitted R-law w={} b={} from {} pairs", result.fitted_r.w, result.fitted_r.b, result.pairs_r.size());
  SteeringLaw law_r = result.fitted_r;
  const SteeringLaw no_compliance = constant_law(0.0, dirs.layer_hd);
  law_r = grid_search(law_r, no_compliance, LawKind::kRejection, dirs, val_jailbreak, val_benign, oracle,
                      config.search_r)
              .law;
  spdlog::debug("searched R-law w={} b={} [{}, {}]", law_r.w, law_r.b, law_r.lambda_lower, law_r.lambda_upper);

  // Compliance law: benign inputs that the adaptive rejection steering now refuses.
  std::vector<ActivationRecord> refused;
  for (const auto& rec : calib.records) {
    if (!rec.is_benign()) continue;
    const double lambda_r = clamp_lambda(law_r, position_rd(rec.layer(dirs.layer_rd), dirs));
    if (oracle(rec, lambda_r, 0.0) == Behavior::kReject) refused.push_back(rec);
  }
  result.pairs_c = calibrate(
      refused, dirs, LawKind::kCompliance, Behavior::kComply,
      [&](const ActivationRecord& rec, double lambda) {
        return oracle(rec, clamp_lambda(law_r, position_rd(rec.layer(dirs.layer_rd), dirs)), lambda);
      },
      config.grid_c.values());
  result.fitted_c = fit_law(result.pairs_c, config.bounds_c.lower, config.bounds_c.upper, dirs.layer_hd);
  spdlog::debug("fitted C-law w={} b={} from {} pairs", result.fitted_c.w, result.fitted_c.b, result.pairs_c.size());
  SteeringLaw law_c = grid_search(result.fitted_c, law_r, LawKind::kCompliance, dirs, val_jailbreak, val_benign,
                                  oracle, config.search_c)
                          .law;
  if (config.refine_r) {
    law_r = grid_search(law_r, law_c, LawKind::kRejection, dirs, val_jailbreak, val_benign, oracle,
                        config.refine_search_r)
                .law;
  }

  result.policy = SteeringPolicy{dirs, law_r, law_c};
  result.policy.check();
  write_json(config.out_dir / "laws_r.json", to_json(law_r));
  write_json(config.out_dir / "laws_c.json", to_json(law_c));
  io::write_file_atomic(config.out_dir / "calibration_r.csv", calibration_csv(result.pairs_r));
  io::write_file_atomic(config.out_dir / "calibration_c.csv", calibration_csv(result.pairs_c));
  spdlog::info("R-law w={} b={} [{}, {}]; C-law w={} b={} [{}, {}]", law_r.w, law_r.b, law_r.lambda_lower,
               law_r.lambda_upper, law_c.w, law_c.b, law_c.lambda_lower, law_c.lambda_upper);
  return result;
}

EvalResult cmd_eval(const PipelineConfig& config) {
  const auto dir_path = config.out_dir / "directionset.json";
  const auto r_path = config.out_dir / "laws_r.json";
  const auto c_path = config.out_dir / "laws_c.json";
  for (const auto& p : {dir_path, r_path, c_path}) {
    if (!std::filesystem::exists(p)) throw Error(ErrorCode::kMissingInput, "policy file '" + p.string() + "' is missing");
  }
  SteeringPolicy policy{direction_set_from_json(read_json(dir_path)), steering_law_from_json(read_json(r_path)),
                        steering_law_from_json(read_json(c_path))};
  policy.check();
  const ActivationDataset test = load_dataset(config.resolve(config.test));

  EvalResult result;
  std::vector<SteeringDecision> decisions;
  decisions.reserve(test.size());
  for (const auto& rec : test.records) decisions.push_back(compute_coefficients(policy, rec));
  io::write_file_atomic(config.out_dir / "decisions.csv", decisions_csv(decisions));
  io::write_file_atomic(config.out_dir / "scatter.csv", scatter_csv(position_scatter(policy.directions, test)));

  if (!config.synthetic) {
    result.label_metrics = metrics_from_labels(test);
    EvalReport labels{"stored labels", "none", *result.label_metrics, *result.label_metrics, {}};
    result.reports.push_back(labels);
  } else {
    const ToyTransformer model = model_for(config);
    SteeringPolicy without_rd = policy;
    without_rd.law_r = constant_law(0.0, policy.law_r.layer);
    SteeringPolicy without_hd = policy;
    without_hd.law_c = constant_law(0.0, policy.law_c.layer);
    result.reports.push_back(evaluate(nullptr, model, test, "baseline"));
    result.reports.push_back(evaluate(&policy, model, test, "adasteer"));
    result.reports.push_back(evaluate(&without_rd, model, test, "w/o v_RD"));
    result.reports.push_back(evaluate(&without_hd, model, test, "w/o v_HD"));
  }
  result.table = report_table(result.reports);
  io::write_file_atomic(config.out_dir / "report.csv", result.table.csv);
  io::write_file_atomic(config.out_dir / "report.txt", result.table.text);
  return result;
}

std::vector<Stage> parse_stages(const std::string& csv) {
  std::vector<Stage> stages;
  std::istringstream in(csv);
  std::string s;
  while (std::getline(in, s, ',')) {
    if (s == "dump" || s == "dump-synthetic") stages.push_back(Stage::kDump);
    else if (s == "identify") stages.push_back(Stage::kIdentify);
    else if (s == "calibrate") stages.push_back(Stage::kCalibrate);
    else if (s == "eval") stages.push_back(Stage::kEval);
    else throw Error(ErrorCode::kInvalidConfig, "unknown stage '" + s + "'");
  }
  return stages;
}

EvalResult cmd_pipeline(const PipelineConfig& config, const std::vector<Stage>& stages) {
  auto has = [&](Stage s) { return std::find(stages.begin(), stages.end(), s) != stages.end(); };
  if (has(Stage::kDump) && config.synthetic) cmd_dump_synthetic(config);
  if (has(Stage::kIdentify)) cmd_identify(config);
  if (has(Stage::kCalibrate)) cmd_calibrate_fit(config);
  if (has(Stage::kEval)) return cmd_eval(config);
  return {};
}

std::size_t cmd_validate(const std::vector<std::filesystem::path>& files, std::ostream& out) {
  std::size_t total = 0;
  for (const auto& f : files) {
    const ValidationReport report = validate_dataset(load_dataset(f));
    out << f.string() << ": " << (report.ok() ? "ok" : std::to_string(report.violations.size()) + " violation(s)")
        << '\n';
    for (const auto& v : report.violations) {
      out << "  " << (v.prompt_id.empty() ? "<dataset>" : v.prompt_id) << ": " << v.message << '\n';
    }
    total += report.violations.size();
  }
  return total;
}

}  // namespace adasteer
