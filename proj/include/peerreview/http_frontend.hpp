#pragma once

#include <memory>
#include <string>
#include <thread>

#include "peerreview/service.hpp"

namespace httplib {
class Server;
}

namespace peerreview {

/// HTTP face of the service:
///   GET|POST /oai                        OAI-PMH
///   GET  /api/review/{id}                review summary (JSON)
///   POST /api/review/{id}/evaluation     JSON or form body: referee, score, comment, token
///   GET  /schema/pr.xsd                  the pr schema
///   /console/                            static files, when console_dir is set
class HttpFrontend {
public:
    explicit HttpFrontend(PeerReviewService& service);
    ~HttpFrontend();

    /// Binds and starts serving on a background thread; returns the bound port.
    int start(const std::string& host, int port);
    /// Serves on the calling thread until stop().
    void run(const std::string& host, int port);
    void stop();

private:
    void install_routes();

    PeerReviewService& service_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
};

} // namespace peerreview
