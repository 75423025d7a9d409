// Standalone stub model server for trying `tqre run` without credentials.
//   stub_server --port 8080 --reply 1
//   stub_server --reply-row 0 --reply-col 2
//   stub_server --uniform --seed 3

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>

#include "stub/stub_model.hpp"

namespace {
std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop = true; }
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scripted chat-completion server on 127.0.0.1"};
  int port = 0;
  std::string port_file;
  stub::Script script;
  std::vector<std::string> any, row, col;
  app.add_option("--port", port, "Port (0 picks a free one)");
  app.add_option("--port-file", port_file, "Write the bound port here");
  app.add_option("--reply", any, "Replies cycled for every role");
  app.add_option("--reply-row", row, "Replies cycled for the row player");
  app.add_option("--reply-col", col, "Replies cycled for the column player");
  app.add_flag("--uniform", script.uniform, "Answer a uniformly random legal action");
  app.add_option("--seed", script.seed, "Seed for --uniform");
  app.add_option("--status", script.status, "HTTP status for every reply (200 = normal)");
  CLI11_PARSE(app, argc, argv);
  if (!any.empty()) script.replies["any"] = any;
  if (!row.empty()) script.replies["row"] = row;
  if (!col.empty()) script.replies["col"] = col;

  stub::Server server(script);
  const int bound = server.bind(port);
  if (!port_file.empty()) std::ofstream(port_file) << bound << '\n';
  std::cout << server.url() << std::endl;

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::thread watcher([&] {
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    server.stop();
  });
  server.run();
  g_stop = true;
  watcher.join();
  return 0;
}
