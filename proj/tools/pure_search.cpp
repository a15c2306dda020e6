// pure-search: local re-ranking search service.

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <pthread.h>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "pure/search_gateway.hpp"
#include "pure/service.hpp"
#include "pure/source_sync.hpp"

namespace {

std::filesystem::path default_data_dir() {
    if (const char* xdg = std::getenv("XDG_DATA_HOME"); xdg && *xdg) return std::filesystem::path(xdg) / "puresearch";
    if (const char* home = std::getenv("HOME"); home && *home) {
        return std::filesystem::path(home) / ".local" / "share" / "puresearch";
    }
    return "puresearch-data";
}

std::pair<std::string, int> split_listen(const std::string& listen) {
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw CLI::ValidationError("--listen", "expected host:port");
    std::string host = listen.substr(0, colon);
    if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
    int port = 0;
    try {
        port = std::stoi(listen.substr(colon + 1));
    } catch (const std::exception&) {
        throw CLI::ValidationError("--listen", "port must be a number");
    }
    if (port < 0 || port > 65535) throw CLI::ValidationError("--listen", "port out of range");
    return {host, port};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Local search service that re-ranks upstream results using tiered label sources"};

    std::string listen = "127.0.0.1:8437";
    std::string data_dir = default_data_dir().string();
    std::string sources;
    std::string upstream;
    std::string refresh_interval = "15m";
    std::string mock_fixture;
    std::string ui_dir;
    std::string log_level = "info";
    bool allow_remote = false;

    app.add_option("--listen", listen, "host:port to listen on")->envname("PURE_LISTEN")->capture_default_str();
    app.add_option("--data-dir", data_dir, "directory for stored labels and policy")
        ->envname("PURE_DATA_DIR")
        ->capture_default_str();
    app.add_option("--sources", sources, "label sources config (tier<TAB>id<TAB>url per line)")
        ->envname("PURE_SOURCES");
    app.add_option("--upstream", upstream, "base URL of the upstream metasearch engine")->envname("PURE_UPSTREAM");
    app.add_option("--refresh-interval", refresh_interval, "source polling interval (e.g. 900, 30s, 15m)")
        ->envname("PURE_REFRESH_INTERVAL")
        ->capture_default_str();
    app.add_option("--mock-upstream", mock_fixture, "serve upstream results from a fixture file instead")
        ->envname("PURE_MOCK_UPSTREAM");
    app.add_option("--ui-dir", ui_dir, "directory of static UI assets served at /")->envname("PURE_UI_DIR");
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error")->envname("PURE_LOG_LEVEL");
    app.add_flag("--allow-remote", allow_remote, "permit listening on a non-loopback address (no authentication!)")
        ->envname("PURE_ALLOW_REMOTE");

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        const auto [host, port] = split_listen(listen);
        if (!pure::is_loopback_host(host) && !allow_remote) {
            std::cerr << "refusing to listen on non-loopback address '" << host
                      << "' without --allow-remote (the API has no authentication)\n";
            return 2;
        }
        const auto interval = pure::parse_duration(refresh_interval);

        std::unique_ptr<pure::MockUpstreamServer> mock;
        if (!mock_fixture.empty()) {
            mock = std::make_unique<pure::MockUpstreamServer>(pure::MockUpstream::from_file(mock_fixture));
            upstream = mock->base_url();
            spdlog::info("mock upstream from {} at {}", mock_fixture, upstream);
        }
        if (upstream.empty()) {
            std::cerr << "one of --upstream or --mock-upstream is required\n";
            return 2;
        }

        std::vector<pure::ConfigWarning> warnings;
        pure::Registry registry =
            sources.empty() ? pure::Registry{} : pure::load_sources_config(sources, warnings);
        for (const auto& w : warnings) spdlog::warn("{}:{}: {}", sources, w.line, w.message);

        auto fetcher = pure::make_http_fetcher();
        auto sync = std::make_shared<pure::SourceSync>(std::move(registry), data_dir, fetcher);
        auto gateway = std::make_shared<const pure::SearchGateway>(upstream, fetcher);
        pure::Service service(sync, gateway, std::filesystem::path(data_dir) / "policy.json");

        pure::ApiServer server(service, ui_dir.empty() ? std::nullopt
                                                       : std::optional<std::filesystem::path>(ui_dir));
        const int bound = server.bind(host, port);

        // Signals are handled on a dedicated thread; block them everywhere else.
        sigset_t signals;
        sigemptyset(&signals);
        sigaddset(&signals, SIGINT);
        sigaddset(&signals, SIGTERM);
        pthread_sigmask(SIG_BLOCK, &signals, nullptr);
        std::jthread signal_waiter([&] {
            int sig = 0;
            sigwait(&signals, &sig);
            spdlog::info("signal {} received, shutting down", sig);
            server.wait_until_ready();
            server.stop();
        });

        pure::SourcePoller poller(sync, interval);
        spdlog::info("listening on http://{}:{} (data in {})", host, bound, data_dir);
        server.run();
        signal_waiter.detach();
    } catch (const pure::ConfigError& e) {
        std::cerr << sources << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
