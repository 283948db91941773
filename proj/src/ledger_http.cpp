#include "authfeed/ledger_http.hpp"

#include <sstream>
#include <thread>

#include <httplib.h>

namespace authfeed {

namespace {

void reply_json(httplib::Response &res, const nlohmann::json &body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response &res, int status, const std::string &message) {
    reply_json(res, nlohmann::json{{"error", message}}, status);
}

} // namespace

struct LedgerServer::Impl {
    Ledger &ledger;
    httplib::Server server;
    std::thread thread;

    explicit Impl(Ledger &l) : ledger{l} {
        server.Post("/tx", [this](const httplib::Request &req, httplib::Response &res) {
            Transaction tx;
            try {
                tx = Transaction::from_json(nlohmann::json::parse(req.body));
            } catch (const std::exception &e) {
                return reply_error(res, 400, std::string{"malformed transaction: "} + e.what());
            }
            reply_json(res, ledger.submit(tx).to_json());
        });

        server.Post("/view", [this](const httplib::Request &req, httplib::Response &res) {
            try {
                auto j = nlohmann::json::parse(req.body);
                auto args = from_hex(j.at("args_hex").get<std::string>());
                auto r = ledger.view(Address::parse(j.at("caller").get<std::string>()),
                                     Address::parse(j.at("target").get<std::string>()),
                                     j.at("function").get<std::string>(), args, j.value("value", std::uint64_t{0}));
                reply_json(res, {{"ok", r.ok}, {"return_hex", to_hex(r.ret)}, {"error", r.error},
                                 {"hash_ops", r.hash_ops}});
            } catch (const std::exception &e) {
                reply_error(res, 400, std::string{"malformed view: "} + e.what());
            }
        });

        server.Get(R"(/accounts/(0x[0-9a-fA-F]{40}))", [this](const httplib::Request &req, httplib::Response &res) {
            auto a = Address::parse(req.matches[1].str());
            reply_json(res, {{"balance", ledger.balance(a)}, {"nonce", ledger.nonce(a)}});
        });

        server.Get("/trace", [this](const httplib::Request &req, httplib::Response &res) {
            std::uint64_t from = 0;
            if (req.has_param("from")) {
                from = std::stoull(req.get_param_value("from"));
            }
            std::string body;
            for (const auto &r : ledger.trace(from)) {
                body += r.to_jsonl();
                body += '\n';
            }
            res.set_content(body, "application/x-ndjson");
        });

        server.Get("/trace.txt", [this](const httplib::Request &, httplib::Response &res) {
            res.set_content(ledger.dump_text(), "text/plain");
        });

        server.Get(R"(/contracts/(0x[0-9a-fA-F]{40}))", [this](const httplib::Request &req, httplib::Response &res) {
            auto c = ledger.contract(Address::parse(req.matches[1].str()));
            if (!c) {
                return reply_error(res, 404, "no contract at address");
            }
            reply_json(res, {{"code_id", std::string{c->code_id()}}, {"state", c->state_json()}});
        });

        server.Get("/digest", [this](const httplib::Request &, httplib::Response &res) {
            reply_json(res, {{"digest", ledger.state_digest().hex()}, {"transactions", ledger.trace_size()}});
        });
    }
};

LedgerServer::LedgerServer(Ledger &ledger) : impl_{std::make_unique<Impl>(ledger)} {}

LedgerServer::~LedgerServer() {
    stop();
}

int LedgerServer::start(const std::string &host, int port) {
    int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (bound < 0) {
        throw std::runtime_error{"cannot bind ledger server to " + host + ":" + std::to_string(port)};
    }
    impl_->thread = std::thread{[this] { impl_->server.listen_after_bind(); }};
    impl_->server.wait_until_ready();
    return bound;
}

void LedgerServer::run(const std::string &host, int port) {
    if (!impl_->server.listen(host, port)) {
        throw std::runtime_error{"cannot listen on " + host + ":" + std::to_string(port)};
    }
}

void LedgerServer::stop() {
    impl_->server.stop();
    if (impl_->thread.joinable()) {
        impl_->thread.join();
    }
}

// ---------------------------------------------------------------------------

struct HttpLedgerClient::Impl {
    httplib::Client client;

    explicit Impl(const std::string &url) : client{url} {
        client.set_connection_timeout(5);
        client.set_read_timeout(30);
    }

    nlohmann::json json_or_throw(const httplib::Result &res, const char *what) {
        if (!res) {
            throw TransportError{std::string{what} + ": " + httplib::to_string(res.error())};
        }
        if (res->status != 200) {
            throw TransportError{std::string{what} + ": HTTP " + std::to_string(res->status) + " " + res->body};
        }
        try {
            return nlohmann::json::parse(res->body);
        } catch (const std::exception &e) {
            throw TransportError{std::string{what} + ": bad JSON: " + e.what()};
        }
    }
};

HttpLedgerClient::HttpLedgerClient(std::string base_url) : impl_{std::make_unique<Impl>(base_url)} {}

HttpLedgerClient::~HttpLedgerClient() = default;

Receipt HttpLedgerClient::submit(const Transaction &tx) {
    auto res = impl_->client.Post("/tx", tx.to_json().dump(), "application/json");
    return Receipt::from_json(impl_->json_or_throw(res, "submit"));
}

ViewResult HttpLedgerClient::view(const Address &caller, const Address &target, std::string_view function,
                                  ByteView args, std::uint64_t value) {
    nlohmann::json body{{"caller", caller.str()},
                        {"target", target.str()},
                        {"function", std::string{function}},
                        {"args_hex", to_hex(args)},
                        {"value", value}};
    auto j = impl_->json_or_throw(impl_->client.Post("/view", body.dump(), "application/json"), "view");
    ViewResult r;
    r.ok = j.at("ok").get<bool>();
    r.ret = from_hex(j.at("return_hex").get<std::string>());
    r.error = j.at("error").get<std::string>();
    r.hash_ops = j.at("hash_ops").get<std::uint64_t>();
    return r;
}

AccountInfo HttpLedgerClient::account(const Address &address) {
    auto j = impl_->json_or_throw(impl_->client.Get("/accounts/" + address.str()), "account");
    return {j.at("balance").get<std::uint64_t>(), j.at("nonce").get<std::uint64_t>()};
}

std::vector<TraceRecord> HttpLedgerClient::trace(std::uint64_t from_position) {
    auto res = impl_->client.Get("/trace?from=" + std::to_string(from_position));
    if (!res || res->status != 200) {
        throw TransportError{"trace: ledger unreachable"};
    }
    std::vector<TraceRecord> out;
    std::istringstream in{res->body};
    for (std::string line; std::getline(in, line);) {
        if (!line.empty()) {
            out.push_back(TraceRecord::from_json(nlohmann::json::parse(line)));
        }
    }
    return out;
}

std::string HttpLedgerClient::trace_text() {
    auto res = impl_->client.Get("/trace.txt");
    if (!res || res->status != 200) {
        throw TransportError{"trace: ledger unreachable"};
    }
    return res->body;
}

nlohmann::json HttpLedgerClient::contract_state(const Address &address) {
    return impl_->json_or_throw(impl_->client.Get("/contracts/" + address.str()), "contract state");
}

} // namespace authfeed
