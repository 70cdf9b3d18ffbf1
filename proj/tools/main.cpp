#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "communityfish/error.hpp"
#include "run_config.hpp"

namespace {

struct NullBuffer : std::streambuf {
  int overflow(int c) override { return c; }
};

}  // namespace

int main(int argc, char** argv) {
  using cfish::cli::RunConfig;

  CLI::App app{"CommunityFish: community-feature Poisson scaling of documents"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> config_path;
  bool quiet = false;
  // Flag overrides, applied after the config file in this order.
  std::vector<std::pair<std::string, std::string>> overrides;
  auto add = [&](const std::string& key) {
    return [&overrides, key](const std::string& value) { overrides.emplace_back(key, value); };
  };

  app.add_option("--config", config_path, "Flat key = value settings file");
  app.add_option_function<std::string>("--seed", add("seed"), "Random seed");
  app.add_option_function<std::string>("--out", add("out"), "Output directory");
  app.add_flag("--quiet", quiet, "Suppress progress messages");
  app.add_option_function<std::string>("--input", add("input"), "Corpus path");
  app.add_option_function<std::string>("--format", add("format"), "jsonl, text-directory or csv");
  app.add_option_function<std::string>("--min-bigram-count", add("min_bigram_count"), "Bigram threshold");
  app.add_option_function<std::string>("--clustering", add("clustering"), "louvain or leiden");
  app.add_option_function<std::string>("--se", add("se"), "bootstrap, analytic or none");
  app.add_option_function<std::string>("--replicates", add("replicates"), "Bootstrap replicates");
  app.add_flag_callback("--no-bootstrap", [&] { overrides.emplace_back("se", "none"); },
                        "Skip uncertainty estimation");
  app.add_flag_callback("--baseline", [&] { overrides.emplace_back("baseline", "true"); },
                        "Scale with unigram features instead of communities");
  app.add_option_function<std::vector<std::string>>(
         "--set",
         [&](const std::vector<std::string>& items) {
           for (const auto& item : items) {
             const auto eq = item.find('=');
             overrides.emplace_back(item.substr(0, eq), eq == std::string::npos ? "" : item.substr(eq + 1));
           }
         },
         "Override any config key (key=value)")
      ->take_all()
      ->allow_extra_args(false);

  app.add_subcommand("communities", "Detect word communities; writes communities.csv, graph_stats.json");
  app.add_subcommand("scale", "Full pipeline; writes positions.csv, features.csv, fit_report.json");
  app.add_subcommand("compare", "Community vs unigram scaling; writes comparison.csv, report.json");
  app.add_subcommand("simulate", "Recovery on synthetic matrices; writes report.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  RunConfig config;
  cfish::cli::Command command;
  try {
    command = cfish::cli::parse_command(app.get_subcommands().front()->get_name());
    if (config_path) {
      for (const auto& [key, value] : cfish::cli::read_config_file(*config_path)) config.set(key, value);
    }
    for (const auto& [key, value] : overrides) config.set(key, value);
  } catch (const cfish::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  NullBuffer null_buffer;
  std::ostream null_stream(&null_buffer);
  return cfish::cli::run_command(command, config, quiet ? null_stream : std::clog, std::cerr);
}
