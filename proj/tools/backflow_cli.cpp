// Copyright 2026 The backflow authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "backflow/errors.hpp"
#include "backflow/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "run configuration file")
      ->required();
  cmd->add_option("--seed", args.seed, "override the config seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_option("--out", args.out_dir, "override the output directory");
}

backflow::RunConfig resolve(const CommonArgs& args) {
  backflow::RunConfig config = backflow::parse_config_file(args.config_path);
  if (args.seed_set) config.seed = static_cast<std::uint64_t>(args.seed);
  if (const char* env_out = std::getenv("BACKFLOW_OUT")) {
    config.out_dir = env_out;
  }
  if (!args.out_dir.empty()) config.out_dir = args.out_dir;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum-control backflow toolkit"};
  app.require_subcommand(1);

  CommonArgs gamma_args, baseline_args, oct_args, train_args, eval_args;
  std::string checkpoint;
  std::vector<std::string> report_dirs;
  std::string report_out = "report";

  add_common(app.add_subcommand("gamma", "decay-rate profile and windows"),
             gamma_args);
  add_common(app.add_subcommand("baseline", "uncontrolled trajectory"),
             baseline_args);
  add_common(app.add_subcommand("oct", "Powell or L-BFGS-B optimization"),
             oct_args);
  add_common(app.add_subcommand("train", "PPO or SAC training"), train_args);
  auto* eval_cmd =
      app.add_subcommand("eval", "re-evaluate a policy checkpoint");
  add_common(eval_cmd, eval_args);
  eval_cmd->add_option("--checkpoint", checkpoint, "policy checkpoint file")
      ->required();
  auto* report_cmd = app.add_subcommand("report", "aggregate run directories");
  report_cmd->add_option("dirs", report_dirs, "run directories")->required();
  report_cmd->add_option("--out", report_out, "report output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const auto started = std::chrono::steady_clock::now();
  std::string name;
  try {
    if (app.got_subcommand("gamma")) {
      name = "gamma";
      backflow::cmd_gamma(resolve(gamma_args));
    } else if (app.got_subcommand("baseline")) {
      name = "baseline";
      backflow::cmd_baseline(resolve(baseline_args));
    } else if (app.got_subcommand("oct")) {
      name = "oct";
      backflow::cmd_oct(resolve(oct_args));
    } else if (app.got_subcommand("train")) {
      name = "train";
      backflow::cmd_train(resolve(train_args));
    } else if (app.got_subcommand("eval")) {
      name = "eval";
      backflow::cmd_eval(resolve(eval_args), checkpoint);
    } else if (app.got_subcommand("report")) {
      name = "report";
      if (const char* env_out = std::getenv("BACKFLOW_OUT")) {
        if (report_cmd->count("--out") == 0) report_out = env_out;
      }
      backflow::cmd_report(report_dirs, report_out);
    }
  } catch (const backflow::ConfigError& err) {
    std::fprintf(stderr, "config error: %s\n", err.what());
    return kExitConfig;
  } catch (const std::invalid_argument& err) {
    std::fprintf(stderr, "config error: %s\n", err.what());
    return kExitConfig;
  } catch (const backflow::NumericError& err) {
    std::fprintf(stderr, "numeric failure: %s\n", err.what());
    return kExitNumeric;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "failure: %s\n", err.what());
    return kExitNumeric;
  }

  const std::chrono::duration<double> elapsed =
      std::chrono::steady_clock::now() - started;
  // Timing stays out of the artifacts so reruns are byte-identical.
  std::fprintf(stderr, "[backflow] %s finished in %.2f s\n", name.c_str(),
               elapsed.count());
  return kExitOk;
}
