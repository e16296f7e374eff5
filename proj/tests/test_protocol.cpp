// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "dlw/protocol.hpp"
#include "dlw/server.hpp"
#include "test_support.hpp"

namespace dlw {
namespace {

const std::vector<std::string> kScript = {
    R"({"op":"reset","seed":7,"opponent":"random"})",
    R"({"op":"step","action":8})",
    R"({"op":"step","action":1})",
};

const std::string kGolden = std::string(DLW_GOLDEN_DIR) + "/protocol_transcript.txt";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Request and response lines interleaved, newline-terminated.
template <class Send>
std::string transcript(Send&& send) {
  std::string out;
  for (const auto& req : kScript) out += req + '\n' + send(req) + '\n';
  return out;
}

json parse(const std::string& line) { return json::parse(line); }

TEST(Session, ResetAndStep) {
  Session s;
  const auto r = parse(s.handle(R"({"op":"reset","seed":7})"));
  EXPECT_EQ(r["ok"], true);
  EXPECT_EQ(r["done"], false);
  EXPECT_EQ(r["info"]["tick"], 0);
  EXPECT_EQ(r["info"]["healths"], json::array({50, 50}));
  EXPECT_EQ(r["observation"]["gray"].size(), 330u);
  EXPECT_EQ(r["observation"]["aux"].size(), 6u);
  EXPECT_FALSE(r["observation"].contains("tensor"));
  const auto st = parse(s.handle(R"({"op":"step","actions":[11,0]})"));
  EXPECT_EQ(st["info"]["tick"], 1);
  EXPECT_EQ(st["info"]["golds"], json::array({0, 100}));
  EXPECT_EQ(st["info"]["incomes"], json::array({40, 20}));
  EXPECT_DOUBLE_EQ(st["reward"].get<double>(), 0.01);  // income_delta 1.0 at weight 0.01
}

TEST(Session, ErrorsKeepSessionAlive) {
  Session s;
  EXPECT_EQ(s.handle(R"({"op":"step","action":0})"), R"({"ok":false,"error":"no-session"})");
  EXPECT_EQ(s.handle("{not json"), R"({"ok":false,"error":"malformed-json"})");
  EXPECT_EQ(s.handle(R"({"op":"jump"})"), R"({"ok":false,"error":"unknown-op"})");
  EXPECT_EQ(s.handle(R"({"seed":1})"), R"({"ok":false,"error":"missing-op"})");
  EXPECT_EQ(s.handle(R"({"op":"reset","opponent":"ghost"})"), R"({"ok":false,"error":"unknown-opponent"})");
  EXPECT_EQ(parse(s.handle(R"({"op":"reset","seed":1})"))["ok"], true);
  EXPECT_EQ(s.handle(R"({"op":"step","action":3})"), R"({"ok":false,"error":"need-two-actions"})");
  EXPECT_EQ(s.handle(R"({"op":"step","actions":[0,12]})"), R"({"ok":false,"error":"invalid-action"})");
  EXPECT_EQ(s.handle(R"({"op":"step"})"), R"({"ok":false,"error":"missing-action"})");
  EXPECT_EQ(s.handle(R"({"op":"step","actions":"x"})"), R"({"ok":false,"error":"need-two-actions"})");
  EXPECT_EQ(parse(s.handle(R"({"op":"step","actions":[0,0]})"))["info"]["tick"], 1);
  EXPECT_EQ(parse(s.handle(R"({"op":"reset","seed":1,"opponent":"random"})"))["ok"], true);
  EXPECT_EQ(s.handle(R"({"op":"step","actions":[0,0]})"), R"({"ok":false,"error":"opponent-controls-seat-1"})");
  EXPECT_EQ(s.handle(R"({"op":"config","observation":"pixels"})"), R"({"ok":false,"error":"unknown-observation"})");
  EXPECT_FALSE(s.closed());
  EXPECT_EQ(s.handle(R"({"op":"close"})"), R"({"ok":true})");
  EXPECT_TRUE(s.closed());
}

TEST(Session, EpisodeDone) {
  Session s;
  s.handle(R"({"op":"config","game":{"max_episode_seconds":1}})");
  s.handle(R"({"op":"reset","seed":2})");
  json last;
  for (int i = 0; i < 10; ++i) last = parse(s.handle(R"({"op":"step","actions":[0,0]})"));
  EXPECT_EQ(last["done"], true);
  EXPECT_EQ(s.handle(R"({"op":"step","actions":[0,0]})"), R"({"ok":false,"error":"episode-done"})");
}

TEST(Session, TensorObservation) {
  Session s;
  EXPECT_EQ(s.handle(R"({"op":"config","observation":"tensor"})"), R"({"ok":true})");
  const auto r = parse(s.handle(R"({"op":"reset","seed":3})"));
  EXPECT_EQ(r["observation"]["tensor"].size(), 5u * 30 * 11);
}

TEST(Session, MatchesInProcessRun) {
  const SimConfig c;
  Session sess;
  sess.handle(R"({"op":"reset","seed":7,"opponent":"random"})");
  auto game = new_game(c, 7);
  RandomAgent opp;
  opp.begin_episode(agent_seed(7, 1));
  Rng rng(70);
  for (int t = 0; t < 300; ++t) {
    const int a = static_cast<int>(rng.below(12));
    const auto r = parse(sess.handle(R"({"op":"step","action":)" + std::to_string(a) + "}"));
    const auto b = opp.act(game, 1);
    const auto& ev = step(game, {Action{static_cast<std::uint8_t>(a)}, b});
    const auto gray = encode_gray_heatmap(game, 0);
    ASSERT_EQ(r["observation"]["gray"].get<std::vector<double>>(),
              std::vector<double>(gray.values().begin(), gray.values().end()));
    const auto aux = encode_aux(game, 0);
    ASSERT_EQ(r["observation"]["aux"].get<std::vector<double>>(), std::vector<double>(aux.begin(), aux.end()));
    ASSERT_EQ(r["reward"].get<double>(), compose(RewardSpec::composite(), {ev, nullptr, game, 0}).total);
    ASSERT_EQ(r["info"]["tick"], game.tick);
  }
  EXPECT_EQ(state_hash(*sess.game()), state_hash(game));
}

TEST(GoldenTranscript, InProcess) {
  Session s;
  const auto got = transcript([&](const std::string& req) { return s.handle(req); });
  if (std::getenv("DLW_RECORD_GOLDEN") != nullptr) {
    std::ofstream(kGolden, std::ios::binary) << got;
  }
  const auto want = read_file(kGolden);
  ASSERT_FALSE(want.empty()) << "missing " << kGolden;
  EXPECT_EQ(got, want);
}

TEST(GoldenTranscript, OverTcp) {
  TcpServer server([] { return Session(); }, "127.0.0.1", 0);
  const auto port = server.bind();
  std::thread loop([&] { server.run(); });
  std::string got;
  {
    LineClient client("127.0.0.1", port);
    got = transcript([&](const std::string& req) { return client.request(req); });
  }
  server.stop();
  loop.join();
  EXPECT_EQ(got, read_file(kGolden));
}

TEST(Server, MalformedLineOverTcpKeepsConnection) {
  TcpServer server([] { return Session(); }, "127.0.0.1", 0);
  const auto port = server.bind();
  std::thread loop([&] { server.run(); });
  {
    LineClient client("127.0.0.1", port);
    EXPECT_EQ(client.request("garbage"), R"({"ok":false,"error":"malformed-json"})");
    EXPECT_EQ(client.request(R"({"op":"step","action":1})"), R"({"ok":false,"error":"no-session"})");
    EXPECT_EQ(parse(client.request(R"({"op":"reset","seed":1})"))["ok"], true);
    // Two requests in one write still get two responses.
    client.send_raw("{\"op\":\"step\",\"actions\":[0,0]}\n{\"op\":\"step\",\"actions\":[0,0]}\n");
    EXPECT_EQ(parse(client.request(R"({"op":"close"})"))["ok"], true);
  }
  server.stop();
  loop.join();
}

TEST(Server, ConcurrentSessionsAreIndependent) {
  TcpServer server([] { return Session(); }, "127.0.0.1", 0);
  const auto port = server.bind();
  std::thread loop([&] { server.run(); });
  std::array<std::string, 2> got;
  {
    LineClient a("127.0.0.1", port), b("127.0.0.1", port);
    std::string ta, tb;
    // Interleave two sessions on different seeds.
    a.request(R"({"op":"reset","seed":7,"opponent":"random"})");
    b.request(R"({"op":"reset","seed":8,"opponent":"random"})");
    for (int i = 0; i < 50; ++i) {
      ta = a.request(R"({"op":"step","action":9})");
      tb = b.request(R"({"op":"step","action":9})");
    }
    got = {ta, tb};
  }
  server.stop();
  loop.join();

  std::array<std::string, 2> want;
  for (int k = 0; k < 2; ++k) {
    Session s;
    s.handle(std::string(R"({"op":"reset","opponent":"random","seed":)") + (k == 0 ? "7" : "8") + "}");
    for (int i = 0; i < 50; ++i) want[k] = s.handle(R"({"op":"step","action":9})");
  }
  EXPECT_EQ(got, want);
  EXPECT_NE(got[0], got[1]);
}

TEST(Stdio, ServesOneSession) {
  std::istringstream in(kScript[0] + "\n\n" + kScript[1] + "\r\n" + kScript[2] + "\n{\"op\":\"close\"}\n" + kScript[0] + "\n");
  std::ostringstream out;
  serve_stdio(in, out, Session());
  std::istringstream lines(out.str());
  std::string line;
  std::vector<std::string> replies;
  while (std::getline(lines, line)) replies.push_back(line);
  ASSERT_EQ(replies.size(), 4u);  // nothing after close
  Session ref;
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(replies[i], ref.handle(kScript[i]));
}

TEST(Stdio, CliMatchesGolden) {
  const std::string cmd = std::string("printf '%s\\n%s\\n%s\\n' '") + kScript[0] + "' '" + kScript[1] + "' '" +
                          kScript[2] + "' | " + DLW_CLI_PATH + " serve --stdio";
  FILE* p = ::popen(cmd.c_str(), "r");
  ASSERT_NE(p, nullptr);
  std::string out;
  char buf[4096];
  while (const auto n = std::fread(buf, 1, sizeof buf, p)) out.append(buf, n);
  EXPECT_EQ(::pclose(p), 0);
  std::string want;
  std::istringstream golden(read_file(kGolden));
  std::string line;
  for (int i = 0; std::getline(golden, line); ++i) {
    if (i % 2 == 1) want += line + '\n';
  }
  EXPECT_EQ(out, want);
}

}  // namespace
}  // namespace dlw
