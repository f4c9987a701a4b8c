#include "mtrail/service.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <iostream>

using namespace mtrail;

namespace {

HttpFrontend* g_frontend = nullptr;

void on_signal(int) {
    if (g_frontend != nullptr) {
        g_frontend->stop();
    }
}

int env_port() {
    const char* value = std::getenv("HF_PORT");
    if (value == nullptr || *value == '\0') {
        return 8475;
    }
    try {
        return std::stoi(value);
    } catch (const std::exception&) {
        return 8475;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HTTP trace service."};
    app.name("mtrail-serve");

    auto config = service_config_from_env();
    std::string host = "127.0.0.1";
    int port = env_port();
    std::string static_dir;
    app.add_option("--host", host, "Address to listen on")->capture_default_str();
    app.add_option("--port", port, "Port (HF_PORT); 0 picks a free one")->capture_default_str();
    app.add_option("--workers", config.workers, "Concurrent traces (HF_WORKERS)")->capture_default_str();
    app.add_option("--queue-cap", config.queue_capacity, "Jobs allowed in flight (HF_QUEUE_CAP)")
        ->capture_default_str();
    app.add_option("--cache-dir", config.cache_dir, "Clone cache (HF_CACHE_DIR)");
    app.add_option("--static", static_dir, "Directory served at /");
    CLI11_PARSE(app, argc, argv);

    TraceService service(config);
    HttpFrontend frontend(service, static_dir);
    const int bound = frontend.bind(host, port);
    if (bound < 0) {
        std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
        return 1;
    }
    g_frontend = &frontend;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    // Tests read this line to learn the port.
    std::cout << "listening on " << host << ":" << bound << std::endl;
    frontend.serve();
    g_frontend = nullptr;
    return 0;
}
