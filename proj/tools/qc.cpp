// qc: batch front end for RCA quality control.
#include <iostream>

#include "CLI11.hpp"

#include "rcaqc/qccli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Segmentation quality control by reverse classification accuracy"};
  app.require_subcommand(1);

  std::string config;
  rcaqc::ConfigOverrides overrides;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--workers", overrides.workers, "cases processed in parallel")->check(CLI::PositiveNumber);
    sub->add_option("--dsc-threshold", overrides.dsc_threshold, "good iff DSC >= threshold (default 0.7)");
    sub->add_option("--msd-threshold", overrides.msd_threshold, "good iff MSD <= threshold in mm (default 2.0)");
    sub->add_option("--seed", overrides.seed, "seed for phantom batteries and reference subsets");
  };
  auto* run = app.add_subcommand("run", "predict quality for every case in the manifest");
  auto* eval = app.add_subcommand("eval", "as run, plus real metrics and summary statistics");
  auto* phantom = app.add_subcommand("phantom", "write a synthetic battery with manifests");
  auto* refsize = app.add_subcommand("refsize", "accuracy against reference-set size");
  for (auto* sub : {run, eval, phantom, refsize}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  rcaqc::RunConfig cfg;
  try {
    cfg = rcaqc::load_config(config);
    rcaqc::apply_overrides(cfg, overrides);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  if (*run) return rcaqc::cmd_run(cfg, std::cerr);
  if (*eval) return rcaqc::cmd_eval(cfg, std::cerr);
  if (*phantom) return rcaqc::cmd_phantom(cfg, std::cerr);
  return rcaqc::cmd_refsize(cfg, std::cerr);
}
