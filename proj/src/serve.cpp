#include "mobfair/serve.hpp"

#include <httplib.h>

#include "mobfair/error.hpp"
#include "mobfair/io.hpp"

namespace mobfair {

struct BundleServer::Impl {
  httplib::Server server;
  std::string bundle;
};

BundleServer::BundleServer(const std::filesystem::path& bundle, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>()) {
  if (!std::filesystem::is_regular_file(bundle)) throw InputError("bundle not found: " + bundle.string());
  impl_->bundle = io::read_file(bundle);
  if (static_dir) {
    if (!std::filesystem::is_directory(*static_dir)) {
      throw InputError("static directory not found: " + static_dir->string());
    }
    impl_->server.set_mount_point("/", static_dir->string());
  }
  impl_->server.Get("/bundle.json", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(impl_->bundle, "application/json");
  });
  if (!static_dir) {
    impl_->server.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("bundle available at /bundle.json\n", "text/plain");
    });
  }
}

BundleServer::~BundleServer() { stop(); }

int BundleServer::bind(const std::string& host, int port) {
  if (port < 0 || port > 65535) throw ConfigError("port must lie in [0, 65535]");
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound <= 0) throw Error("cannot bind " + host + ":" + std::to_string(port) + " (port busy or unavailable)");
  return bound;
}

void BundleServer::listen() { impl_->server.listen_after_bind(); }

void BundleServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace mobfair
