#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "peerreview/harvester.hpp"
#include "peerreview/influence.hpp"
#include "peerreview/pr_metadata.hpp"

namespace peerreview {

/// Service configuration, read from a JSON file. Every key is optional except
/// where validate() says otherwise; see README for the full list.
struct ServiceConfig {
    std::vector<std::string> upstreams;
    HarvestFilter filter;
    HttpRetryPolicy retry;
    std::chrono::seconds harvest_interval{0};  // 0 disables background harvesting

    DiffusionConfig diffusion;
    std::size_t top_k = 25;

    bool blind = false;
    std::string secret_key;
    MergePolicy merge_policy = MergePolicy::full;

    std::string bind_address = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::string base_url;  // advertised in Identify; derived from bind/port when empty
    std::string repository_name = "Peer Review Service";
    std::string admin_email = "admin@localhost";
    std::size_t page_size = 100;
    std::chrono::seconds token_ttl{3600};

    std::string store_dir = "store";
    std::string graph_path;
    std::string webhook_url;  // solicitation notifications are POSTed here when set
    std::string console_dir;  // static files served under /console/ when set

    /// Throws ConfigurationError on inconsistent settings.
    void validate() const;
};

ServiceConfig parse_config(const std::string& json_text);
ServiceConfig load_config(const std::string& path);

} // namespace peerreview
