#include "gral/cli.hpp"

#include <ostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gral/error.hpp"
#include "gral/pipeline.hpp"

namespace gral::cli {
namespace {

using nlohmann::json;

struct RunArgs {
  std::string stage;
  std::string config_path;
  bool dry_run = false;
  bool record = false;
};

pipeline::Pipeline make_pipeline(const RunArgs& args) {
  auto cfg = config::PipelineConfig::load(args.config_path, true);
  pipeline::Pipeline p(std::move(cfg));
  p.set_record(args.record);
  return p;
}

int run_one(const RunArgs& args, std::ostream& out) {
  auto p = make_pipeline(args);
  out << p.run(args.stage, args.dry_run).dump(2) << "\n";
  return 0;
}

int run_all(const RunArgs& args, std::ostream& out) {
  auto p = make_pipeline(args);
  for (const auto& stage : pipeline::Pipeline::stage_names()) {
    if (stage == "sweep" && p.config().sweep.empty()) continue;
    out << p.run(stage, args.dry_run).dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"graph-grounded retrieval, alignment and generation pipeline"};
  app.set_version_flag("--version", "gral 0.1.0");
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "run one pipeline stage");
  run_cmd->add_option("stage", run_args.stage, "stage name (see `gral stages`)")
      ->required();
  run_cmd->add_option("--config", run_args.config_path, "pipeline config JSON")
      ->required();
  run_cmd->add_flag("--dry-run", run_args.dry_run,
                    "check prerequisites and report the plan without writing");
  run_cmd->add_flag("--record", run_args.record,
                    "call live services and write fixtures alongside");

  auto* all_cmd = app.add_subcommand("run-all", "run every stage in order");
  all_cmd->add_option("--config", run_args.config_path, "pipeline config JSON")
      ->required();
  all_cmd->add_flag("--dry-run", run_args.dry_run,
                    "check prerequisites and report the plan without writing");
  all_cmd->add_flag("--record", run_args.record,
                    "call live services and write fixtures alongside");

  auto* stages_cmd = app.add_subcommand("stages", "list stages in run order");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& ex) {
    return app.exit(ex, out, err);
  }

  try {
    if (stages_cmd->parsed()) {
      for (const auto& name : pipeline::Pipeline::stage_names()) {
        out << name << "\n";
      }
      return 0;
    }
    if (run_cmd->parsed()) return run_one(run_args, out);
    return run_all(run_args, out);
  } catch (const Error& ex) {
    err << json{{"error", ex.code_name()}, {"message", ex.what()}}.dump()
        << "\n";
    return 1;
  }
}

}  // namespace gral::cli
