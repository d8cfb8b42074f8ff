#include "peerreview/http_frontend.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <sstream>

#include "peerreview/errors.hpp"

namespace peerreview {

namespace {

using nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, json{{"error", message}});
}

// Maps service exceptions to HTTP statuses.
template <typename F>
void guarded(httplib::Response& res, F&& f) {
    try {
        f();
    } catch (const NotFoundError& e) {
        send_error(res, 404, e.what());
    } catch (const AuthorizationError& e) {
        send_error(res, 403, e.what());
    } catch (const ValidationError& e) {
        send_error(res, 400, e.what());
    } catch (const SolicitationError& e) {
        send_error(res, 409, e.what());
    } catch (const std::exception& e) {
        spdlog::error("request failed: {}", e.what());
        send_error(res, 500, e.what());
    }
}

std::string schema_text() {
    std::ifstream in(std::string(PEERREVIEW_SCHEMA_DIR) + "/pr.xsd");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Submission {
    std::string referee;
    double score = 0.0;
    std::optional<std::string> comment;
    std::string token;
};

Submission read_submission(const httplib::Request& req) {
    Submission s;
    if (req.get_header_value("Content-Type").find("application/json") != std::string::npos) {
        json body;
        try {
            body = json::parse(req.body);
            s.referee = body.at("referee").get<std::string>();
            const auto& score = body.at("score");
            if (!score.is_number()) throw ValidationError("score must be a number in the range [0,1]");
            s.score = score.get<double>();
            if (body.contains("comment") && !body.at("comment").is_null()) s.comment = body.at("comment").get<std::string>();
            if (body.contains("token")) s.token = body.at("token").get<std::string>();
        } catch (const json::exception& e) {
            throw ValidationError(std::string("bad submission body: ") + e.what());
        }
    } else {
        if (!req.has_param("referee") || !req.has_param("score")) throw ValidationError("referee and score are required");
        s.referee = req.get_param_value("referee");
        const auto text = req.get_param_value("score");
        try {
            std::size_t used = 0;
            s.score = std::stod(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
        } catch (const std::logic_error&) {
            throw ValidationError("score '" + text + "' is not a number in the range [0,1]");
        }
        if (req.has_param("comment")) s.comment = req.get_param_value("comment");
        if (req.has_param("token")) s.token = req.get_param_value("token");
    }
    if (s.token.empty() && req.has_param("token")) s.token = req.get_param_value("token");
    if (s.referee.empty()) throw ValidationError("referee is required");
    return s;
}

} // namespace

HttpFrontend::HttpFrontend(PeerReviewService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
    install_routes();
}

HttpFrontend::~HttpFrontend() { stop(); }

void HttpFrontend::install_routes() {
    auto oai = [this](const httplib::Request& req, httplib::Response& res) {
        OaiArguments args(req.params.begin(), req.params.end());
        res.set_content(service_.handle_oai(args), "text/xml; charset=utf-8");
    };
    server_->Get("/oai", oai);
    server_->Post("/oai", oai);

    server_->Get("/schema/pr.xsd", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(schema_text(), "application/xml");
    });

    server_->Get(R"(/api/review/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, service_.review_json(req.matches[1])); });
    });

    server_->Post(R"(/api/review/(.+)/evaluation)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto s = read_submission(req);
            const auto result = service_.submit_evaluation(req.matches[1], s.referee, s.score, s.comment, s.token);
            send_json(res, 200,
                      json{{"record_id", std::string(req.matches[1])},
                           {"evaluation", result.evaluation ? json(*result.evaluation) : json(nullptr)},
                           {"stability", result.stability},
                           {"referee", result.referee},
                           {"influence", result.influence}});
        });
    });

    const auto& console = service_.config().console_dir;
    if (!console.empty() && !server_->set_mount_point("/console", console)) {
        spdlog::warn("console directory {} not found; /console is disabled", console);
    }
}

int HttpFrontend::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = server_->bind_to_any_port(host);
        if (bound < 0) throw Error("cannot bind " + host);
    } else if (!server_->bind_to_port(host, port)) {
        throw Error("cannot bind " + host + ":" + std::to_string(port));
    }
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound;
}

void HttpFrontend::run(const std::string& host, int port) {
    if (!server_->listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

void HttpFrontend::stop() {
    server_->stop();
    if (thread_.joinable()) thread_.join();
}

} // namespace peerreview
