// SPDX-License-Identifier: Apache-2.0
//
// dlw: experiment runs, single matches, the environment server and frame
// export.
#include <csignal>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "dlw/dlw.hpp"

namespace {

dlw::TcpServer* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

dlw::ExperimentConfig load_or_default(const std::string& path) {
  return path.empty() ? dlw::ExperimentConfig{} : dlw::load_experiment(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep Line Wars environment, baselines and Q-learning harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::string agent1 = "random";
  std::string agent2 = "random";
  std::uint64_t seed = 0;

  // run
  auto* run = app.add_subcommand("run", "Run N seeded episodes and write episodes.csv");
  std::int64_t episodes = 1;
  std::string out_dir;
  run->add_option("--config", config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
  run->add_option("--agent1", agent1, "random | rule_based | dqn | dqn_reward");
  run->add_option("--agent2", agent2, "random | rule_based | dqn | dqn_reward");
  run->add_option("--episodes", episodes)->check(CLI::PositiveNumber);
  run->add_option("--seed", seed);
  run->add_option("--out", out_dir, "Output directory")->required();
  bool log_rewards = false;
  run->add_flag("--log-rewards", log_rewards, "Log per-episode reward component sums of learning agents");

  // play
  auto* play = app.add_subcommand("play", "Play one verbose match");
  std::int64_t every = 100;
  std::string record_path;
  play->add_option("--config", config_path)->check(CLI::ExistingFile);
  play->add_option("--agent1", agent1);
  play->add_option("--agent2", agent2);
  play->add_option("--seed", seed);
  play->add_option("--every", every, "Status line interval in ticks")->check(CLI::PositiveNumber);
  play->add_option("--record", record_path, "Write the action log (replay JSON) here");

  // serve
  auto* serve = app.add_subcommand("serve", "Start the newline-delimited JSON environment server");
  std::string host = "127.0.0.1";
  std::uint16_t port = dlw::kDefaultPort;
  bool stdio = false;
  serve->add_option("--config", config_path)->check(CLI::ExistingFile);
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_flag("--stdio", stdio, "Serve one session over stdin/stdout");

  // export-frames
  auto* frames = app.add_subcommand("export-frames", "Replay an action log and write PPM/PGM frames");
  std::string replay_path;
  std::string frames_dir;
  int perspective = 0;
  frames->add_option("--replay", replay_path)->required()->check(CLI::ExistingFile);
  frames->add_option("--every", every, "Frame interval in ticks")->check(CLI::PositiveNumber);
  frames->add_option("--out", frames_dir)->required();
  frames->add_option("--perspective", perspective)->check(CLI::Range(0, 1));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto x = load_or_default(config_path);
      dlw::RunOptions opt{agent1, agent2, episodes, seed, out_dir, log_rewards};
      const auto summary = dlw::run_experiment(x, opt, &std::cerr);
      dlw::print_summary(std::cout, summary);
    } else if (*play) {
      const auto x = load_or_default(config_path);
      dlw::Replay rec;
      const auto st = dlw::play_match(x, agent1, agent2, seed, &std::cout, every,
                                      record_path.empty() ? nullptr : &rec);
      std::cout << "winner: " << dlw::winner_column(st.outcome) << " after " << st.ticks << " ticks\n";
      if (!record_path.empty()) {
        std::ofstream out(record_path);
        if (!out) throw std::runtime_error("cannot write " + record_path);
        out << dlw::replay_to_json(rec).dump() << '\n';
      }
    } else if (*serve) {
      const auto x = load_or_default(config_path);
      auto factory = [x] { return dlw::Session(x.game, x.reward); };
      if (stdio) {
        dlw::serve_stdio(std::cin, std::cout, factory());
      } else {
        dlw::TcpServer server(factory, host, port);
        const auto bound = server.bind();
        g_server = &server;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        std::cerr << "listening on " << host << ':' << bound << '\n';
        server.run();
        g_server = nullptr;
      }
    } else if (*frames) {
      const auto r = dlw::replay_from_json(dlw::read_json_file(replay_path));
      const auto n = dlw::export_frames(r, every, frames_dir, perspective);
      std::cout << "wrote " << n << " frames to " << frames_dir << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
