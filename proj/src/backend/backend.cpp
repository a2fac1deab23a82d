#include "syntaxeval/backend.hpp"

#include "syntaxeval/error.hpp"
#include "syntaxeval/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>

namespace syntaxeval::backend {

using nlohmann::json;

FillRequest make_request(const masking::MaskedSample& sample, int top_k) {
    return FillRequest{sample.masked_text, sample.mask_sentinel, top_k};
}

json to_json(const FillRequest& r) {
    return json{{"text", r.text}, {"mask_token", r.mask_sentinel}, {"top_k", r.top_k}};
}

json to_json(const FillResponse& r) {
    json preds = json::array();
    for (const auto& list : r.predictions) {
        json l = json::array();
        for (const auto& c : list) l.push_back({{"token", c.token}, {"score", c.score}});
        preds.push_back(std::move(l));
    }
    return json{{"predictions", std::move(preds)}};
}

FillResponse response_from_json(const json& j) {
    if (!j.is_object() || !j.contains("predictions") || !j["predictions"].is_array()) {
        throw ProtocolError("response has no \"predictions\" array");
    }
    FillResponse r;
    for (const auto& list : j["predictions"]) {
        if (!list.is_array()) throw ProtocolError("prediction entry is not a list");
        auto& out = r.predictions.emplace_back();
        for (const auto& c : list) {
            if (!c.is_object() || !c.contains("token") || !c["token"].is_string() || !c.contains("score") ||
                !c["score"].is_number()) {
                throw ProtocolError("candidate needs a string \"token\" and a numeric \"score\"");
            }
            out.push_back({c["token"].get<std::string>(), c["score"].get<double>()});
        }
    }
    return r;
}

void validate(const FillRequest& request, const FillResponse& response) {
    const auto expected = masking::count_occurrences(request.text, request.mask_sentinel);
    if (response.predictions.size() != expected) {
        throw ProtocolError(fmt::format("{} prediction lists for {} sentinels", response.predictions.size(), expected));
    }
    for (std::size_t i = 0; i < response.predictions.size(); ++i) {
        const auto& list = response.predictions[i];
        if (list.empty()) throw ProtocolError(fmt::format("prediction list {} is empty", i));
        for (std::size_t c = 0; c < list.size(); ++c) {
            const double s = list[c].score;
            if (!(s >= 0.0 && s <= 1.0)) throw ProtocolError(fmt::format("score {} outside [0, 1] at position {}", s, i));
            if (c > 0 && s > list[c - 1].score) throw ProtocolError(fmt::format("scores increase at position {}", i));
        }
    }
}

FillResponse fill_masks(Backend& backend, const FillRequest& request, const masking::MaskedSample* context) {
    if (masking::count_occurrences(request.text, request.mask_sentinel) == 0) {
        throw ProtocolError("request text holds no sentinel");
    }
    FillResponse r = backend.fill(request, context);
    validate(request, r);
    return r;
}

std::string reconstruct(const masking::MaskedSample& sample, const FillResponse& response) {
    if (response.predictions.size() != sample.mask_count) {
        throw ProtocolError(fmt::format("snippet {}: {} predictions for {} masks", sample.snippet_id,
                                        response.predictions.size(), sample.mask_count));
    }
    std::vector<std::string> tokens;
    tokens.reserve(sample.mask_count);
    for (const auto& list : response.predictions) {
        if (list.empty()) throw ProtocolError(fmt::format("snippet {}: empty prediction list", sample.snippet_id));
        tokens.push_back(list.front().token);
    }
    return masking::fill(sample, tokens);
}

namespace {

std::size_t sentinels(const FillRequest& r) { return masking::count_occurrences(r.text, r.mask_sentinel); }

const masking::MaskedSample& need_context(const char* who, const FillRequest& request,
                                          const masking::MaskedSample* context) {
    if (context == nullptr) throw Error(fmt::format("the {} backend needs the masked sample", who));
    if (context->masked_text != request.text) throw Error(fmt::format("{} backend: request does not match its sample", who));
    return *context;
}

FillResponse certain(const std::vector<std::string>& tokens) {
    FillResponse r;
    for (const auto& t : tokens) r.predictions.push_back({{t, 1.0}});
    return r;
}

}  // namespace

FillResponse OracleBackend::fill(const FillRequest& request, const masking::MaskedSample* context) {
    return certain(need_context("oracle", request, context).ground_truth_tokens);
}

FillResponse ConstantBackend::fill(const FillRequest& request, const masking::MaskedSample*) {
    return certain(std::vector<std::string>(sentinels(request), token_));
}

const std::vector<std::string>& RandomBackend::vocabulary() {
    static const std::vector<std::string> v = {
        "(", ")", ":", ",", ".", "=", "[", "]", "self", "return", "if", "for", "in", "not", "None", "def",
        "x", "i", "0", "1", "+", "-", "==", "and", "or", "else", "import", "True", "False", "'", "\"", "name",
        "value", "len", "print", "while", "is", "*", "{", "}"};
    return v;
}

FillResponse RandomBackend::fill(const FillRequest& request, const masking::MaskedSample*) {
    const auto& vocab = vocabulary();
    const std::size_t n = sentinels(request);
    const std::size_t k = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(request.top_k, 1)), 1, vocab.size());
    FillResponse r;
    const std::uint64_t text_key = hash_string(request.text);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(derive_seed(seed_, {text_key, i}));
        std::vector<std::size_t> idx(vocab.size());
        for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = j;
        auto& list = r.predictions.emplace_back();
        double score = 1.0;
        for (std::size_t j = 0; j < k; ++j) {
            std::swap(idx[j], idx[j + uniform_index(rng, idx.size() - j)]);
            score *= uniform01(rng);
            list.push_back({vocab[idx[j]], score});
        }
    }
    return r;
}

FillResponse CorruptorBackend::fill(const FillRequest& request, const masking::MaskedSample* context) {
    const auto& sample = need_context("corruptor", request, context);
    if (sample.arm == masking::Arm::Control) return certain(sample.ground_truth_tokens);
    return certain(std::vector<std::string>(sample.mask_count, junk_));
}

std::unique_ptr<Backend> make_backend(const std::string& spec, const BackendOptions& options) {
    if (spec == "oracle") return std::make_unique<OracleBackend>();
    if (spec == "corruptor") return std::make_unique<CorruptorBackend>(options.junk_token);
    if (spec.rfind("constant:", 0) == 0) {
        auto tok = spec.substr(9);
        if (tok.empty()) throw FormatError("constant backend needs a token: constant:<tok>");
        return std::make_unique<ConstantBackend>(tok);
    }
    if (spec.rfind("random:", 0) == 0) {
        const auto digits = spec.substr(7);
        char* end = nullptr;
        const auto seed = std::strtoull(digits.c_str(), &end, 10);
        if (digits.empty() || *end != '\0') throw FormatError(fmt::format("bad random backend seed \"{}\"", digits));
        return std::make_unique<RandomBackend>(seed);
    }
    if (spec == "http") {
        HttpOptions http = options.http;
        if (http.base_url.empty()) {
            if (const char* env = std::getenv(kUrlEnv)) http.base_url = env;
        }
        if (http.base_url.empty()) throw FormatError(fmt::format("http backend needs a base URL (config or ${})", kUrlEnv));
        std::unique_ptr<Backend> b = std::make_unique<HttpBackend>(std::move(http));
        if (options.cache_dir) {
            b = std::make_unique<CachedBackend>(std::move(b), std::make_shared<ResponseCache>(*options.cache_dir));
        }
        return b;
    }
    throw FormatError(fmt::format("unknown backend \"{}\" (http|oracle|constant:<tok>|random:<seed>|corruptor)", spec));
}

// ---------------------------------------------------------------------------
// cache

ResponseCache::ResponseCache(std::filesystem::path dir) : file_(dir / "responses.jsonl") {
    std::filesystem::create_directories(dir);
    std::ifstream in(file_);
    std::string line;
    while (std::getline(in, line)) {
        // a torn last line from an interrupted run is dropped
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("key") || !j.contains("response")) continue;
        try {
            entries_[j["key"].get<std::string>()] = response_from_json(j["response"]);
        } catch (const std::exception&) {
        }
    }
    in.close();
    // so the next append does not glue onto a torn line
    if (std::filesystem::exists(file_) && std::filesystem::file_size(file_) > 0) {
        std::ifstream tail(file_, std::ios::binary);
        tail.seekg(-1, std::ios::end);
        if (tail.get() != '\n') std::ofstream(file_, std::ios::app) << '\n';
    }
}

std::string ResponseCache::key(const std::string& backend_id, const FillRequest& request) {
    // json objects dump with sorted keys
    const auto canonical = to_json(request).dump();
    return fmt::format("{:016x}{:016x}", hash_string(backend_id), hash_string(canonical));
}

std::optional<FillResponse> ResponseCache::find(const std::string& backend_id, const FillRequest& request) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key(backend_id, request));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ResponseCache::store(const std::string& backend_id, const FillRequest& request, const FillResponse& response) {
    const auto k = key(backend_id, request);
    json line{{"key", k}, {"backend", backend_id}, {"request", to_json(request)}, {"response", to_json(response)}};
    std::lock_guard lock(mutex_);
    if (!entries_.emplace(k, response).second) return;
    std::ofstream out(file_, std::ios::app);
    out << line.dump() << '\n';
    out.flush();
    if (!out) throw IoError(fmt::format("cannot append to {}", file_.string()));
}

std::size_t ResponseCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

FillResponse CachedBackend::fill(const FillRequest& request, const masking::MaskedSample* context) {
    if (auto hit = cache_->find(inner_->id(), request)) {
        ++hits_;
        return *hit;
    }
    ++misses_;
    FillResponse r = inner_->fill(request, context);
    validate(request, r);
    cache_->store(inner_->id(), request, r);
    return r;
}

}  // namespace syntaxeval::backend
