// adasteer command-line entry point. Exit status is the numeric ErrorCode of
// the first failure, 1 when `validate` finds violations, 0 on success.

#include "adasteer/pipeline.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

namespace {

void configure_logging() {
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("ADASTEER_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off") {
      spdlog::warn("ADASTEER_LOG='{}' is not a level; keeping warn", env);
    } else {
      spdlog::set_level(level);
    }
  }
}

void print_world_summary(const adasteer::DumpResult& r) {
  for (std::size_t i = 0; i < r.files.size(); ++i) {
    const adasteer::ActivationDataset* sets[] = {&r.world.train, &r.world.calib, &r.world.val, &r.world.test};
    std::cout << r.files[i].string() << ": " << sets[i]->size() << " records\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"Adaptive activation steering toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON pipeline config");
    sub->add_option("--set", overrides, "key.path=value override (repeatable)");
    sub->add_option("--out-dir", out_dir, "output directory");
  };

  auto* dump = app.add_subcommand("dump-synthetic", "generate the synthetic world and write ADST dumps");
  auto* identify = app.add_subcommand("identify", "select layers and extract steering directions");
  auto* calibrate = app.add_subcommand("calibrate", "calibrate, fit and tune both steering laws");
  auto* eval = app.add_subcommand("eval", "evaluate the fitted policy against baseline and ablations");
  auto* pipeline = app.add_subcommand("pipeline", "run the selected stages in order");
  auto* validate = app.add_subcommand("validate", "check ADST files against the format contract");
  for (auto* sub : {dump, identify, calibrate, eval, pipeline, validate}) common(sub);

  std::string stages = "dump,identify,calibrate,eval";
  pipeline->add_option("--stages", stages, "comma-separated subset of dump,identify,calibrate,eval");
  std::vector<std::string> files;
  validate->add_option("files", files, "ADST files (default: the config's inputs)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!out_dir.empty()) overrides.push_back("out_dir=\"" + out_dir + "\"");
    const adasteer::PipelineConfig config = adasteer::load_pipeline_config(config_path, overrides);

    if (dump->parsed()) {
      print_world_summary(adasteer::cmd_dump_synthetic(config));
    } else if (identify->parsed()) {
      const auto r = adasteer::cmd_identify(config);
      std::cout << "layer_rd=" << r.directions.layer_rd << " layer_hd=" << r.directions.layer_hd
                << (r.layers_overridden ? " (overridden)" : "") << '\n';
    } else if (calibrate->parsed()) {
      const auto r = adasteer::cmd_calibrate_fit(config);
      std::cout << "pairs_r=" << r.pairs_r.size() << " pairs_c=" << r.pairs_c.size() << '\n';
    } else if (eval->parsed()) {
      std::cout << adasteer::cmd_eval(config).table.text;
    } else if (pipeline->parsed()) {
      std::cout << adasteer::cmd_pipeline(config, adasteer::parse_stages(stages)).table.text;
    } else if (validate->parsed()) {
      std::vector<std::filesystem::path> paths(files.begin(), files.end());
      if (paths.empty()) {
        for (const auto* p : {&config.train, &config.calib, &config.val, &config.test}) paths.push_back(config.resolve(*p));
      }
      if (adasteer::cmd_validate(paths, std::cout) > 0) return 1;
    }
  } catch (const adasteer::Error& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(adasteer::ErrorCode::kIoFailure);
  }
  return 0;
}
