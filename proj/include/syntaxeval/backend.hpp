#pragma once

// Fill-mask backends: deterministic stubs plus an HTTP client for a model
// server speaking the /fill-mask protocol (docs/fill_mask_protocol.md).

#include "syntaxeval/masking.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace syntaxeval::backend {

inline constexpr const char* kUrlEnv = "SYNTAXEVAL_BACKEND_URL";

struct Candidate {
    std::string token;
    double score = 0.0;
    friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct FillRequest {
    std::string text;
    std::string mask_sentinel{masking::kDefaultSentinel};
    int top_k = 1;
};

struct FillResponse {
    std::vector<std::vector<Candidate>> predictions;  // one list per sentinel, document order
    friend bool operator==(const FillResponse&, const FillResponse&) = default;
};

[[nodiscard]] FillRequest make_request(const masking::MaskedSample& sample, int top_k = 1);

[[nodiscard]] nlohmann::json to_json(const FillRequest& r);
[[nodiscard]] nlohmann::json to_json(const FillResponse& r);
// throws ProtocolError on anything that is not {"predictions": [[{token, score}...]...]}
[[nodiscard]] FillResponse response_from_json(const nlohmann::json& j);

// Arity, non-empty lists, scores in [0,1] and non-increasing. Throws ProtocolError.
void validate(const FillRequest& request, const FillResponse& response);

class Backend {
public:
    virtual ~Backend() = default;
    [[nodiscard]] virtual std::string id() const = 0;
    // `context` is the sample the request was built from; only the test stubs
    // (oracle, corruptor) read it. Must be safe to call concurrently.
    [[nodiscard]] virtual FillResponse fill(const FillRequest& request, const masking::MaskedSample* context) = 0;
};

// fill + validate
[[nodiscard]] FillResponse fill_masks(Backend& backend, const FillRequest& request,
                                      const masking::MaskedSample* context = nullptr);

// Top-1 token per sentinel. Throws ProtocolError on a count mismatch.
[[nodiscard]] std::string reconstruct(const masking::MaskedSample& sample, const FillResponse& response);

class OracleBackend final : public Backend {
public:
    [[nodiscard]] std::string id() const override { return "oracle"; }
    [[nodiscard]] FillResponse fill(const FillRequest& request, const masking::MaskedSample* context) override;
};

class ConstantBackend final : public Backend {
public:
    explicit ConstantBackend(std::string token) : token_(std::move(token)) {}
    [[nodiscard]] std::string id() const override { return "constant:" + token_; }
    [[nodiscard]] FillResponse fill(const FillRequest& request, const masking::MaskedSample* context) override;

private:
    std::string token_;
};

// tokens drawn from a small Python vocabulary, keyed by (seed, text, position)
class RandomBackend final : public Backend {
public:
    explicit RandomBackend(std::uint64_t seed) : seed_(seed) {}
    [[nodiscard]] std::string id() const override { return "random:" + std::to_string(seed_); }
    [[nodiscard]] FillResponse fill(const FillRequest& request, const masking::MaskedSample* context) override;
    [[nodiscard]] static const std::vector<std::string>& vocabulary();

private:
    std::uint64_t seed_;
};

// ground truth for controls, junk for treatments
class CorruptorBackend final : public Backend {
public:
    explicit CorruptorBackend(std::string junk = "$$") : junk_(std::move(junk)) {}
    [[nodiscard]] std::string id() const override { return "corruptor"; }
    [[nodiscard]] FillResponse fill(const FillRequest& request, const masking::MaskedSample* context) override;

private:
    std::string junk_;
};

struct HttpOptions {
    std::string base_url;
    int retries = 3;
    std::chrono::milliseconds backoff{250};  // doubles per retry
    std::chrono::milliseconds timeout{30000};
    std::size_t max_in_flight = 4;
};

class HttpBackend final : public Backend {
public:
    explicit HttpBackend(HttpOptions options);
    [[nodiscard]] std::string id() const override { return "http:" + options_.base_url; }
    [[nodiscard]] FillResponse fill(const FillRequest& request, const masking::MaskedSample* context) override;
    [[nodiscard]] std::size_t peak_in_flight() const;

private:
    HttpOptions options_;
    std::string scheme_host_port_;
    std::string path_;
    mutable std::mutex mutex_;
    std::condition_variable slot_free_;
    std::size_t in_flight_ = 0;
    std::size_t peak_ = 0;
};

// Responses persisted as JSON lines under `dir`, keyed by (backend id, request hash).
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);
    [[nodiscard]] std::optional<FillResponse> find(const std::string& backend_id, const FillRequest& request) const;
    void store(const std::string& backend_id, const FillRequest& request, const FillResponse& response);
    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] static std::string key(const std::string& backend_id, const FillRequest& request);

private:
    std::filesystem::path file_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, FillResponse> entries_;
};

class CachedBackend final : public Backend {
public:
    CachedBackend(std::unique_ptr<Backend> inner, std::shared_ptr<ResponseCache> cache)
        : inner_(std::move(inner)), cache_(std::move(cache)) {}
    [[nodiscard]] std::string id() const override { return inner_->id(); }
    [[nodiscard]] FillResponse fill(const FillRequest& request, const masking::MaskedSample* context) override;
    [[nodiscard]] std::size_t hits() const { return hits_; }
    [[nodiscard]] std::size_t misses() const { return misses_; }

private:
    std::unique_ptr<Backend> inner_;
    std::shared_ptr<ResponseCache> cache_;
    std::atomic<std::size_t> hits_{0};
    std::atomic<std::size_t> misses_{0};
};

struct BackendOptions {
    HttpOptions http;                           // base_url falls back to $SYNTAXEVAL_BACKEND_URL
    std::optional<std::filesystem::path> cache_dir;  // http responses only
    std::string junk_token = "$$";
};

// "oracle", "constant:<tok>", "random:<seed>", "corruptor", "http"
[[nodiscard]] std::unique_ptr<Backend> make_backend(const std::string& spec, const BackendOptions& options = {});

}  // namespace syntaxeval::backend
