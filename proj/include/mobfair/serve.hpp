#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace mobfair {

// Read-only HTTP service for an exported bundle. GET /bundle.json returns the
// file exactly as it was on disk at startup; other paths are served from the
// optional static directory.
class BundleServer {
 public:
  // Throws InputError when the bundle or the static directory is missing.
  BundleServer(const std::filesystem::path& bundle, std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~BundleServer();
  BundleServer(const BundleServer&) = delete;
  BundleServer& operator=(const BundleServer&) = delete;

  // Binds to host:port (port 0 picks a free port) and returns the bound
  // port. Throws Error when the port cannot be bound.
  int bind(const std::string& host, int port);
  // Serves until stop() is called.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

inline constexpr int kDefaultPort = 8080;

}  // namespace mobfair
