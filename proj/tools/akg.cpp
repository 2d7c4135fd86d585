#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "akg/config.hpp"
#include "akg/core.hpp"
#include "akg/pipeline.hpp"
#include "akg/service.hpp"

namespace {

int exit_code(akg::ErrorKind k) {
  switch (k) {
    case akg::ErrorKind::user:
    case akg::ErrorKind::not_found:
    case akg::ErrorKind::parse:
    case akg::ErrorKind::retriable: return 1;
    case akg::ErrorKind::dependency:
    case akg::ErrorKind::consistency: return 2;
    case akg::ErrorKind::internal: return 3;
  }
  return 3;
}

void report(const akg::pipeline::StageOutcome& o) {
  std::cout << akg::pipeline::to_string(o.stage) << ": " << (o.ran ? o.message : "up to date, nothing to do")
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Author knowledge graph pipeline and exploration service", "akg"};
  app.require_subcommand(1);
  std::string config_path;
  std::string data_dir = "data";
  bool force = false;
  app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--data-dir", data_dir, "Directory holding pipeline artifacts")->capture_default_str();
  app.add_flag("--force", force, "Rerun stages even when their inputs are unchanged");

  for (auto stage : akg::pipeline::kAllStages) {
    std::string name(akg::pipeline::to_string(stage));
    app.add_subcommand(name, "Run the " + name + " stage");
  }
  app.add_subcommand("all", "Run every stage in order");
  app.add_subcommand("serve", "Serve the exploration API over the built index");
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const auto config = config_path.empty() ? akg::config_from_json(nlohmann::json::object())
                                            : akg::load_config(config_path);
    const auto* sub = app.get_subcommands().front();
    const auto& cmd = sub->get_name();
    if (cmd == "serve") {
      akg::service::serve(config, data_dir);
      return 0;
    }
    akg::pipeline::Pipeline pipeline(config, data_dir, force);
    if (cmd == "all") {
      for (auto stage : akg::pipeline::kAllStages) report(pipeline.run(stage));
    } else {
      report(pipeline.run(akg::pipeline::stage_from_string(cmd)));
    }
    return 0;
  } catch (const akg::Error& e) {
    std::cerr << "akg: error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "akg: internal error: " << e.what() << "\n";
    return 3;
  }
}
