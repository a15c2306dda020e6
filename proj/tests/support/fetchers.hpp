#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <variant>
#include <vector>

#include "pure/http_fetch.hpp"

namespace pure::testing {

/// Canned responses keyed by exact URL. Unknown URLs fail as network errors.
class FakeFetcher final : public HttpFetcher {
public:
    void set_body(const std::string& url, std::string body) {
        std::lock_guard lock(mutex_);
        responses_[url] = std::move(body);
    }
    void set_error(const std::string& url, FetchError::Kind kind, std::string what) {
        std::lock_guard lock(mutex_);
        responses_[url] = FetchError(kind, what);
    }

    std::string get(const std::string& url, const FetchLimits& limits) override {
        std::lock_guard lock(mutex_);
        requests_.push_back(url);
        auto it = responses_.find(url);
        if (it == responses_.end()) throw FetchError(FetchError::Kind::Network, "connection refused: " + url);
        if (auto* err = std::get_if<FetchError>(&it->second)) throw *err;
        const auto& body = std::get<std::string>(it->second);
        if (body.size() > limits.max_body_bytes) throw FetchError(FetchError::Kind::Oversize, "too large");
        return body;
    }

    std::vector<std::string> requests() const {
        std::lock_guard lock(mutex_);
        return requests_;
    }

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::variant<std::string, FetchError>> responses_;
    std::vector<std::string> requests_;
};

/// Passes requests through to another fetcher and records every URL.
class RecordingFetcher final : public HttpFetcher {
public:
    explicit RecordingFetcher(std::shared_ptr<HttpFetcher> inner) : inner_(std::move(inner)) {}

    std::string get(const std::string& url, const FetchLimits& limits) override {
        {
            std::lock_guard lock(mutex_);
            urls_.push_back(url);
        }
        return inner_->get(url, limits);
    }

    std::vector<std::string> urls() const {
        std::lock_guard lock(mutex_);
        return urls_;
    }

private:
    std::shared_ptr<HttpFetcher> inner_;
    mutable std::mutex mutex_;
    std::vector<std::string> urls_;
};

}  // namespace pure::testing
