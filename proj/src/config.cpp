#include "peerreview/config.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "peerreview/errors.hpp"

namespace peerreview {

namespace {

using nlohmann::json;

template <typename T>
void read(const json& j, const char* key, T& target) {
    if (j.contains(key) && !j.at(key).is_null()) target = j.at(key).get<T>();
}

DiffusionMode parse_mode(const std::string& s) {
    if (s == "monte_carlo" || s == "monte-carlo") return DiffusionMode::monte_carlo;
    if (s == "expected") return DiffusionMode::expected;
    throw ConfigurationError("unknown diffusion mode '" + s + "'");
}

} // namespace

void ServiceConfig::validate() const {
    if (blind && secret_key.empty()) throw ConfigurationError("blind mode requires secret_key");
    if (port < 0 || port > 65535) throw ConfigurationError("port out of range");
    if (page_size == 0) throw ConfigurationError("page_size must be positive");
    if (top_k == 0) throw ConfigurationError("top_k must be positive");
    if (!upstreams.empty()) {
        try {
            filter.validate();
        } catch (const ValidationError& e) {
            throw ConfigurationError(e.what());
        }
    }
    try {
        diffusion.validate();
    } catch (const ValidationError& e) {
        throw ConfigurationError(e.what());
    }
}

ServiceConfig parse_config(const std::string& json_text) {
    ServiceConfig cfg;
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigurationError(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        read(j, "upstreams", cfg.upstreams);
        if (j.contains("filter")) {
            const auto& f = j.at("filter");
            read(f, "require_no_journal_ref", cfg.filter.require_no_journal_ref);
            if (f.contains("set_spec")) cfg.filter.set_spec = f.at("set_spec").get<std::string>();
            if (f.contains("explicit_ids")) cfg.filter.explicit_ids = f.at("explicit_ids").get<std::vector<std::string>>();
            if (f.contains("min_reference_count")) cfg.filter.min_reference_count = f.at("min_reference_count").get<std::size_t>();
        }
        if (j.contains("retry")) {
            const auto& r = j.at("retry");
            read(r, "attempts", cfg.retry.attempts);
            if (r.contains("backoff_ms")) cfg.retry.backoff = std::chrono::milliseconds(r.at("backoff_ms").get<long>());
            if (r.contains("timeout_s")) cfg.retry.timeout = std::chrono::seconds(r.at("timeout_s").get<long>());
        }
        if (j.contains("harvest_interval_s")) cfg.harvest_interval = std::chrono::seconds(j.at("harvest_interval_s").get<long>());
        if (j.contains("diffusion")) {
            const auto& d = j.at("diffusion");
            read(d, "particles_per_mention", cfg.diffusion.particles_per_mention);
            read(d, "initial_energy", cfg.diffusion.initial_energy);
            read(d, "decay", cfg.diffusion.decay);
            read(d, "energy_floor", cfg.diffusion.energy_floor);
            read(d, "rng_seed", cfg.diffusion.rng_seed);
            read(d, "author_penalty_enabled", cfg.diffusion.author_penalty_enabled);
            read(d, "author_penalty_energy", cfg.diffusion.author_penalty_energy);
            read(d, "threads", cfg.diffusion.threads);
            if (d.contains("mode")) cfg.diffusion.mode = parse_mode(d.at("mode").get<std::string>());
        }
        read(j, "top_k", cfg.top_k);
        read(j, "blind", cfg.blind);
        read(j, "secret_key", cfg.secret_key);
        if (j.contains("merge_policy")) cfg.merge_policy = parse_merge_policy(j.at("merge_policy").get<std::string>());
        read(j, "bind_address", cfg.bind_address);
        read(j, "port", cfg.port);
        read(j, "base_url", cfg.base_url);
        read(j, "repository_name", cfg.repository_name);
        read(j, "admin_email", cfg.admin_email);
        read(j, "page_size", cfg.page_size);
        if (j.contains("token_ttl_s")) cfg.token_ttl = std::chrono::seconds(j.at("token_ttl_s").get<long>());
        read(j, "store_dir", cfg.store_dir);
        read(j, "graph_path", cfg.graph_path);
        read(j, "webhook_url", cfg.webhook_url);
        read(j, "console_dir", cfg.console_dir);
    } catch (const json::exception& e) {
        throw ConfigurationError(std::string("bad config value: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ServiceConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot read config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

} // namespace peerreview
