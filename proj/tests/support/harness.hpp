#pragma once

#include <memory>
#include <string>

#include "pure/service.hpp"
#include "support/fetchers.hpp"
#include "support/temp_dir.hpp"

namespace pure::testing {

/// A complete service over a temporary data directory. All outbound HTTP
/// goes to a FakeFetcher; upstream responses are registered per query.
struct Harness {
    static constexpr const char* kUpstream = "http://upstream.test";

    explicit Harness(std::string_view sources_config = "") {
        std::vector<ConfigWarning> warnings;
        fetcher = std::make_shared<FakeFetcher>();
        sync = std::make_shared<SourceSync>(parse_sources_config(sources_config, warnings), dir.path(), fetcher);
        gateway = std::make_shared<SearchGateway>(kUpstream, fetcher);
        service = std::make_unique<Service>(sync, gateway, dir.path() / "policy.json");
    }

    void upstream_results(std::string_view query, const std::string& wire_json) {
        fetcher->set_body(gateway->request_url(query), wire_json);
    }

    TempDir dir;
    std::shared_ptr<FakeFetcher> fetcher;
    std::shared_ptr<SourceSync> sync;
    std::shared_ptr<SearchGateway> gateway;
    std::unique_ptr<Service> service;
};

}  // namespace pure::testing
