#pragma once

// In-process /fill-mask server on a free localhost port.

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <functional>
#include <string>
#include <thread>

namespace testsupport {

class MockServer {
public:
    // handler gets the parsed request body and fills the response
    using Handler = std::function<void(const nlohmann::json&, httplib::Response&)>;

    explicit MockServer(Handler handler) : handler_(std::move(handler)) {
        server_.Post("/fill-mask", [this](const httplib::Request& req, httplib::Response& res) {
            ++requests_;
            nlohmann::json body;
            try {
                body = nlohmann::json::parse(req.body);
            } catch (...) {
                res.status = 400;
                return;
            }
            handler_(body, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockServer() {
        server_.stop();
        thread_.join();
    }
    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    [[nodiscard]] std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    [[nodiscard]] int requests() const { return requests_; }

    // answers every sentinel with `token`
    static Handler constant(std::string token) {
        return [token](const nlohmann::json& body, httplib::Response& res) {
            const std::string text = body.at("text");
            const std::string mask = body.at("mask_token");
            nlohmann::json preds = nlohmann::json::array();
            for (auto p = text.find(mask); p != std::string::npos; p = text.find(mask, p + mask.size())) {
                preds.push_back({{{"token", token}, {"score", 0.5}}});
            }
            res.set_content(nlohmann::json{{"predictions", preds}}.dump(), "application/json");
        };
    }

private:
    Handler handler_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    std::atomic<int> requests_{0};
};

}  // namespace testsupport
