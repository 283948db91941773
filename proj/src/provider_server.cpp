#include "authfeed/provider_server.hpp"

#include <condition_variable>
#include <iostream>
#include <mutex>
#include <thread>

#include <httplib.h>

namespace authfeed {

namespace {

void reply_json(httplib::Response &res, const std::string &body, int status = 200) {
    res.status = status;
    res.set_content(body, "application/json");
}

void reply_error(httplib::Response &res, int status, const std::string &message) {
    reply_json(res, nlohmann::json{{"error", message}}.dump(), status);
}

} // namespace

struct ProviderServer::Impl {
    Provider &provider;
    ProviderServerOptions options;
    httplib::Server server;
    std::thread listener;
    std::thread responder;
    std::mutex mutex;
    std::condition_variable wake;
    bool stopping = false;

    Impl(Provider &p, ProviderServerOptions o) : provider{p}, options{o} {
        server.set_exception_handler([](const httplib::Request &, httplib::Response &res, std::exception_ptr ep) {
            try {
                std::rethrow_exception(ep);
            } catch (const ProviderError &e) {
                reply_error(res, e.http_status(), e.what());
            } catch (const TransportError &e) {
                reply_error(res, 503, std::string{"ledger unreachable: "} + e.what());
            } catch (const std::exception &e) {
                reply_error(res, 500, e.what());
            }
        });

        server.Get("/manifest", [this](const httplib::Request &, httplib::Response &res) {
            reply_json(res, provider.manifest_bytes());
        });

        server.Get(R"(/entries/(\d+))", [this](const httplib::Request &req, httplib::Response &res) {
            std::size_t index = 0;
            try {
                index = std::stoull(req.matches[1].str());
            } catch (const std::exception &) {
                return reply_error(res, 404, "no such entry");
            }
            reply_json(res, provider.serve_entry(index).serialize());
        });

        server.Get("/entries", [this](const httplib::Request &req, httplib::Response &res) {
            if (!req.has_param("id")) {
                return reply_error(res, 400, "expected ?id=<value>");
            }
            reply_json(res, provider.serve_entry_by_id(req.get_param_value("id")).serialize());
        });

        server.Get("/root", [this](const httplib::Request &, httplib::Response &res) {
            auto info = provider.root_info();
            reply_json(res, nlohmann::json{{"size", info.size}, {"root", info.root.hex()}, {"timestamp", info.timestamp}}
                                .dump());
        });

        server.Post("/admin/publish", [this](const httplib::Request &req, httplib::Response &res) {
            if (!authorized(req, res)) {
                return;
            }
            nlohmann::ordered_json body;
            try {
                body = nlohmann::ordered_json::parse(req.body);
            } catch (const std::exception &e) {
                return reply_error(res, 400, std::string{"body must be a JSON array: "} + e.what());
            }
            if (!body.is_array()) {
                return reply_error(res, 400, "body must be a JSON array");
            }
            std::vector<std::string> batch;
            for (const auto &doc : body) {
                batch.push_back(doc.dump());
            }
            auto result = provider.publish_entries(batch);
            nlohmann::json out{{"size", result.size}, {"root", result.root.hex()}};
            if (result.receipt) {
                out["receipt"] = result.receipt->to_json();
            }
            reply_json(res, out.dump());
        });

        server.Post("/admin/lock", [this](const httplib::Request &req, httplib::Response &res) {
            if (!authorized(req, res)) {
                return;
            }
            provider.lock_service();
            reply_json(res, R"({"locked":true})");
        });

        server.Post("/admin/respond", [this](const httplib::Request &req, httplib::Response &res) {
            if (!authorized(req, res)) {
                return;
            }
            auto sent = provider.respond_to_queries();
            reply_json(res, nlohmann::json{{"responses", sent}}.dump());
        });
    }

    bool authorized(const httplib::Request &req, httplib::Response &res) {
        if (req.get_header_value("Authorization") != "Bearer " + provider.admin_token()) {
            reply_error(res, 401, "admin token required");
            return false;
        }
        return true;
    }

    void start_responder() {
        if (!options.responder) {
            return;
        }
        responder = std::thread{[this] {
            std::unique_lock lock{mutex};
            while (!stopping) {
                lock.unlock();
                try {
                    provider.respond_to_queries();
                } catch (const std::exception &e) {
                    std::cerr << "[provider] responder: " << e.what() << std::endl;
                }
                lock.lock();
                wake.wait_for(lock, options.poll_interval, [this] { return stopping; });
            }
        }};
    }
};

ProviderServer::ProviderServer(Provider &provider, ProviderServerOptions options)
    : impl_{std::make_unique<Impl>(provider, options)} {}

ProviderServer::~ProviderServer() {
    stop();
}

int ProviderServer::start(const std::string &host, int port) {
    int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (bound < 0) {
        throw std::runtime_error{"cannot bind provider server to " + host + ":" + std::to_string(port)};
    }
    impl_->listener = std::thread{[this] { impl_->server.listen_after_bind(); }};
    impl_->server.wait_until_ready();
    impl_->start_responder();
    return bound;
}

void ProviderServer::run(const std::string &host, int port) {
    impl_->start_responder();
    if (!impl_->server.listen(host, port)) {
        throw std::runtime_error{"cannot listen on " + host + ":" + std::to_string(port)};
    }
}

void ProviderServer::stop() {
    {
        std::lock_guard lock{impl_->mutex};
        impl_->stopping = true;
    }
    impl_->wake.notify_all();
    impl_->server.stop();
    if (impl_->listener.joinable()) {
        impl_->listener.join();
    }
    if (impl_->responder.joinable()) {
        impl_->responder.join();
    }
}

} // namespace authfeed
