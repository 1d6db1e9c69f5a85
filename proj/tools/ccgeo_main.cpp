#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "ccgeo/runner.hpp"
#include "ccgeo/verify.hpp"

namespace {

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  return out;
}

std::vector<int> parse_ints(const std::string& s) {
  std::vector<int> out;
  for (double v : parse_doubles(s)) out.push_back(static_cast<int>(v));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ccgeo: Carnot-Caratheodory geometry toolkit"};
  app.require_subcommand(1);

  ccgeo::ExperimentConfig cfg;
  std::string point_s, tuple_s, target_s, arg_s, config_file;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--family", cfg.family, "built-in name, inline JSON or file");
    sub->add_option("--config", config_file, "JSON config file (flags override)");
    sub->add_option("--point", point_s, "base point, comma separated");
    sub->add_option("--tuple", tuple_s, "1-based member indices, comma separated");
    sub->add_option("--target", target_s, "target point, comma separated");
    sub->add_option("--arg", arg_s, "map argument (h / u / omega), comma separated");
    sub->add_option("--radius", cfg.radius, "tuple scaling radius r");
    sub->add_option("--epsilon", cfg.epsilon, "box / ball radius parameter");
    sub->add_option("--time", cfg.time, "flow time");
    sub->add_option("--metric", cfg.metric, "cc or rho")->check(CLI::IsMember({"cc", "rho"}));
    sub->add_option("--samples", cfg.samples, "sample count");
    sub->add_option("--seed", cfg.seed, "RNG seed");
    sub->add_option("--enlarge", cfg.enlarge, "right-hand ball enlargement factor");
    sub->add_option("--out", cfg.out_dir, "output directory for report.json/data.csv");
    sub->add_option("--only", cfg.only, "criterion filter for suite");
  };

  for (const auto& name : ccgeo::known_subcommands()) {
    auto* sub = app.add_subcommand(name, "");
    add_common(sub);
    sub->callback([name, &cfg] { cfg.subcommand = name; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw ccgeo::ArgumentError("cannot read config file " + config_file);
      std::ostringstream ss;
      ss << in.rdbuf();
      ccgeo::ExperimentConfig file_cfg =
          ccgeo::ExperimentConfig::from_json_text(ss.str());
      file_cfg.subcommand = cfg.subcommand;
      // flags given on the command line override the file
      if (!cfg.family.empty()) file_cfg.family = cfg.family;
      if (cfg.radius > 0) file_cfg.radius = cfg.radius;
      if (cfg.epsilon > 0) file_cfg.epsilon = cfg.epsilon;
      if (cfg.time != 0) file_cfg.time = cfg.time;
      if (cfg.metric != "cc") file_cfg.metric = cfg.metric;
      if (cfg.samples > 0) file_cfg.samples = cfg.samples;
      if (cfg.seed != 0) file_cfg.seed = cfg.seed;
      if (cfg.enlarge != 3.0) file_cfg.enlarge = cfg.enlarge;
      if (!cfg.out_dir.empty()) file_cfg.out_dir = cfg.out_dir;
      if (!cfg.only.empty()) file_cfg.only = cfg.only;
      cfg = file_cfg;
    }
    if (!point_s.empty()) cfg.point = parse_doubles(point_s);
    if (!tuple_s.empty()) cfg.tuple = parse_ints(tuple_s);
    if (!target_s.empty()) cfg.target = parse_doubles(target_s);
    if (!arg_s.empty()) cfg.arg = parse_doubles(arg_s);

    if (cfg.subcommand == "suite") {
      // streamed pass/fail lines, then the JSON report
      ccgeo::RunResult rr = ccgeo::run(cfg, [](const ccgeo::CriterionResult& cr) {
        std::cout << (cr.pass ? "[PASS] " : "[FAIL] ") << cr.id << " " << cr.name
                  << ": " << cr.details << " (" << cr.seconds << "s)" << std::endl;
      });
      std::cout << (rr.exit_code == 0 ? "ALL PASS" : "FAILURES PRESENT") << std::endl;
      return rr.exit_code;
    }

    ccgeo::RunResult rr = ccgeo::run(cfg);
    std::cout << rr.report_json;
    return rr.exit_code;
  } catch (const ccgeo::ArgumentError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
