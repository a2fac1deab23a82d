#include "syntaxeval/backend.hpp"

#include "syntaxeval/error.hpp"

#include <httplib.h>

#include <fmt/format.h>

#include <thread>

namespace syntaxeval::backend {

HttpBackend::HttpBackend(HttpOptions options) : options_(std::move(options)) {
    std::string url = options_.base_url;
    while (!url.empty() && url.back() == '/') url.pop_back();
    if (url.rfind("https://", 0) == 0) throw FormatError("https backend URLs are not supported; use http://");
    if (url.rfind("http://", 0) != 0) url = "http://" + url;
    const auto slash = url.find('/', 7);
    scheme_host_port_ = url.substr(0, slash);
    path_ = (slash == std::string::npos ? std::string() : url.substr(slash)) + "/fill-mask";
    if (options_.max_in_flight == 0) options_.max_in_flight = 1;
}

std::size_t HttpBackend::peak_in_flight() const {
    std::lock_guard lock(mutex_);
    return peak_;
}

FillResponse HttpBackend::fill(const FillRequest& request, const masking::MaskedSample*) {
    {
        std::unique_lock lock(mutex_);
        slot_free_.wait(lock, [&] { return in_flight_ < options_.max_in_flight; });
        ++in_flight_;
        peak_ = std::max(peak_, in_flight_);
    }
    struct Release {
        HttpBackend* self;
        ~Release() {
            {
                std::lock_guard lock(self->mutex_);
                --self->in_flight_;
            }
            self->slot_free_.notify_one();
        }
    } release{this};

    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    client.set_write_timeout(options_.timeout);
    const auto body = to_json(request).dump();

    std::string last_error;
    const int attempts = 1 + std::max(options_.retries, 0);
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        if (attempt > 1) std::this_thread::sleep_for(options_.backoff * (1 << (attempt - 2)));
        auto res = client.Post(path_, body, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500 || res->status == 429) {
            last_error = fmt::format("HTTP {}", res->status);
            continue;
        }
        if (res->status != 200) {
            throw BackendError(fmt::format("{}{}: HTTP {}: {}", scheme_host_port_, path_, res->status, res->body), attempt);
        }
        auto j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded()) throw BackendError(fmt::format("{}{}: response is not JSON", scheme_host_port_, path_), attempt);
        try {
            return response_from_json(j);
        } catch (const ProtocolError& e) {
            throw BackendError(fmt::format("{}{}: malformed body: {}", scheme_host_port_, path_, e.what()), attempt);
        }
    }
    throw BackendError(fmt::format("{}{} unreachable after {} attempts: {}", scheme_host_port_, path_, attempts, last_error),
                       attempts);
}

}  // namespace syntaxeval::backend
