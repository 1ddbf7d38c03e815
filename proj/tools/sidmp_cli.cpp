// Command-line front end: sidmp simulate|certify|learn|gait <config> [flags]
#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "sidmp/kernels.hpp"
#include "sidmp/scenario.hpp"

namespace {

struct Args {
  std::string config;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> samples;
  bool verbose = false;
};

void add_common(CLI::App* sub, Args& a) {
  sub->add_option("config", a.config, "scenario JSON file")->required();
  sub->add_option("--out-dir", a.out_dir, "directory for output files")->capture_default_str();
  sub->add_option("--seed", a.seed, "seed overriding the config seed");
  sub->add_option("--samples", a.samples, "sample count overriding every certificate region")
      ->check(CLI::PositiveNumber);
  sub->add_flag("--verbose,-v", a.verbose, "progress messages on stderr");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate, certify and fit networks of movement primitives"};
  app.require_subcommand(1);
  Args args;
  const char* commands[][2] = {
      {"simulate", "run the scenario pipeline on the canonical network"},
      {"certify", "run only the certify steps and print a PASS/FAIL table"},
      {"learn", "fit forcing weights to the demonstration named in the config"},
      {"gait", "run the pipeline on the full reference/network/transformation hierarchy"}};
  for (auto& c : commands) add_common(app.add_subcommand(c[0], c[1]), args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return 0;
    nlohmann::json r{{"status", "error"}, {"error", {{"kind", "usage"}, {"message", e.what()}}}};
    std::cerr << r.dump() << "\n";
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    namespace sc = sidmp::scenario;
    const std::filesystem::path config_path(args.config);
    const sc::Json config = sc::load_config(config_path);
    sc::RunOptions opt;
    opt.out_dir = args.out_dir;
    opt.base_dir = config_path.has_parent_path() ? config_path.parent_path() : ".";
    opt.seed = args.seed;
    opt.samples = args.samples;
    opt.verbose = args.verbose;
    opt.out = &std::cout;
    opt.log = &std::cerr;
    if (args.verbose) std::cerr << "kernels: " << sidmp::kernels::isa_name(sidmp::kernels::active().isa) << "\n";
    const auto report = sc::run(sc::parse_command(command), config, opt);
    if (args.verbose) std::cerr << report.files.size() << " files written\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << sidmp::scenario::error_report(e, command, args.config).dump() << "\n";
    return 1;
  }
}
