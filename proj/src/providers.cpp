// Copyright 2026 The dist-align Authors
// SPDX-License-Identifier: Apache-2.0

#include "distalign/providers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "distalign/rng.hpp"
#include "distalign/tomlite.hpp"
#include "ioutil.hpp"

namespace distalign {

using nlohmann::json;

void MockDistortion::validate() const {
  if (!(gamma > 0.0)) raise(Errc::InvalidArgument, "gamma must be > 0");
  if (noise_scale < 0.0) raise(Errc::InvalidArgument, "noise_scale must be >= 0");
  if (!(group_exaggerate > 0.0)) {
    raise(Errc::InvalidArgument, "group_exaggerate must be > 0");
  }
  if (verbalized_decimals < 0 || verbalized_decimals > 12) {
    raise(Errc::InvalidArgument, "verbalized_decimals outside [0,12]");
  }
}

void ProviderConfig::validate() const {
  if (temperature < 0.0) raise(Errc::InvalidArgument, "temperature must be >= 0");
  if (max_retries < 0) raise(Errc::InvalidArgument, "max_retries must be >= 0");
  if (requests_per_minute < 1) {
    raise(Errc::InvalidArgument, "requests_per_minute must be >= 1");
  }
  if (model_id.empty()) raise(Errc::InvalidArgument, "model_id is required");
  if (kind == ProviderKind::HttpChat && endpoint_url.empty()) {
    raise(Errc::InvalidArgument, "http-chat provider needs an endpoint");
  }
  if (kind == ProviderKind::Mock) {
    if (mock_gold_path.empty()) {
      raise(Errc::InvalidArgument, "mock provider needs a gold table path");
    }
    mock.validate();
  }
}

ProviderConfig loadProviderConfig(const std::string& path) {
  TomlTable t = TomlTable::parseFile(path);
  ProviderConfig config;
  std::string kind = t.getStringOr("provider.kind", "mock");
  if (kind == "mock") {
    config.kind = ProviderKind::Mock;
  } else if (kind == "http-chat") {
    config.kind = ProviderKind::HttpChat;
  } else {
    raise(Errc::SchemaError, path + ": unknown provider kind '" + kind + "'");
  }
  config.endpoint_url = t.getStringOr("provider.endpoint", "");
  config.model_id = t.getStringOr("provider.model_id", "");
  config.api_key_env = t.getStringOr("provider.api_key_env", "");
  config.temperature = t.getFloatOr("provider.temperature", 0.7);
  config.max_retries = static_cast<int>(t.getIntOr("provider.max_retries", 3));
  config.requests_per_minute =
      static_cast<int>(t.getIntOr("provider.requests_per_minute", 600));
  config.supports_logprobs = t.getBoolOr("provider.supports_logprobs",
                                         config.kind == ProviderKind::Mock);
  config.cache_dir = t.getStringOr("provider.cache_dir", "");
  config.mock_gold_path = t.getStringOr("mock.gold", "");
  config.mock.gamma = t.getFloatOr("mock.gamma", 1.0);
  config.mock.noise_scale = t.getFloatOr("mock.noise_scale", 0.0);
  config.mock.affine_a = t.getFloatOr("mock.affine_a", 1.0);
  config.mock.affine_b = t.getFloatOr("mock.affine_b", 0.0);
  config.mock.group_exaggerate = t.getFloatOr("mock.group_exaggerate", 1.0);
  config.mock.seed = static_cast<uint64_t>(t.getIntOr("mock.seed", 0));
  config.mock.verbalized_decimals =
      static_cast<int>(t.getIntOr("mock.verbalized_decimals", 0));
  config.validate();
  return config;
}

RateLimiter::RateLimiter(int per_minute, Clock clock, Sleeper sleeper)
    : per_minute_(per_minute),
      clock_(std::move(clock)),
      sleeper_(std::move(sleeper)) {
  if (!clock_) {
    clock_ = [] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(
                 std::chrono::steady_clock::now().time_since_epoch())
          .count();
    };
  }
  if (!sleeper_) {
    sleeper_ = [](int64_t ms) {
      std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    };
  }
}

void RateLimiter::acquire() {
  std::lock_guard<std::mutex> lock(mu_);
  for (;;) {
    int64_t now = clock_();
    while (!window_.empty() && window_.front() <= now - 60000) {
      window_.pop_front();
    }
    if (window_.size() < static_cast<size_t>(per_minute_)) {
      window_.push_back(now);
      return;
    }
    sleeper_(window_.front() + 60000 - now);
  }
}

std::string cacheKeyHash(const std::string& model_id,
                         const CompletionRequest& request) {
  json key;
  key["model_id"] = model_id;
  key["prompt"] = request.prompt;
  key["temperature"] = request.temperature;
  key["sample_index"] = request.sample_index;
  key["logprobs_for"] = request.logprobs_for;
  std::string data = key.dump();

  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

namespace {

std::string sanitizeForPath(const std::string& s) {
  std::string out;
  for (char c : s) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
            c == '_' || c == '.')
               ? c
               : '_';
  }
  return out.empty() ? "_" : out;
}

/// Content-addressed directory of JSON files, one per completion.
class ResponseCache {
 public:
  ResponseCache(std::string dir, std::string model_id)
      : dir_(std::move(dir)), model_(sanitizeForPath(model_id)) {}

  bool enabled() const { return !dir_.empty(); }

  std::optional<CompletionResponse> lookup(const std::string& hash) const {
    std::string path = filePath(hash);
    if (!std::filesystem::exists(path)) return std::nullopt;
    json j = json::parse(readFile(path), nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    CompletionResponse response;
    response.text = j.value("text", std::string{});
    if (j.contains("logprobs")) {
      for (const auto& [k, v] : j.at("logprobs").items()) {
        response.logprobs[k] = v.get<double>();
      }
    }
    response.from_cache = true;
    return response;
  }

  void store(const std::string& hash, const CompletionRequest& request,
             const CompletionResponse& response) const {
    json j;
    j["text"] = response.text;
    if (!response.logprobs.empty()) j["logprobs"] = response.logprobs;
    j["prompt"] = request.prompt;
    j["temperature"] = request.temperature;
    j["sample_index"] = request.sample_index;
    writeFileAtomic(filePath(hash), j.dump(1) + "\n");
  }

 private:
  std::string filePath(const std::string& hash) const {
    return dir_ + "/" + model_ + "/" + hash + ".json";
  }

  std::string dir_;
  std::string model_;
};

class ProviderBase : public Provider {
 public:
  ProviderBase(ProviderConfig config, const ProviderHooks& hooks)
      : config_(std::move(config)),
        cache_(config_.cache_dir, config_.model_id),
        limiter_(config_.requests_per_minute, hooks.clock, hooks.sleeper) {}

  const ProviderConfig& config() const override { return config_; }

  CompletionResponse complete(const CompletionRequest& request) override {
    if (!request.logprobs_for.empty() && !config_.supports_logprobs) {
      raise(Errc::LogprobsUnsupported,
            "provider '" + config_.model_id + "' cannot score continuations");
    }
    std::string hash;
    if (cache_.enabled()) {
      hash = cacheKeyHash(config_.model_id, request);
      if (auto hit = cache_.lookup(hash)) return *hit;
    }
    CompletionResponse response = perform(request);
    if (cache_.enabled()) cache_.store(hash, request, response);
    return response;
  }

 protected:
  virtual CompletionResponse perform(const CompletionRequest& request) = 0;

  ProviderConfig config_;
  ResponseCache cache_;
  RateLimiter limiter_;
};

class MockProvider : public ProviderBase {
 public:
  MockProvider(ProviderConfig config, const ProviderHooks& hooks)
      : ProviderBase(std::move(config), hooks),
        world_(loadGold(config_.mock_gold_path)) {}

 protected:
  CompletionResponse perform(const CompletionRequest& request) override {
    const GoldEntry* entry = world_.gold.find(request.question_id, request.group);
    const GoldEntry* all =
        world_.gold.find(request.question_id, GroupKey::allRespondents());
    if (!entry || !all) {
      raise(Errc::ProviderError,
            "mock gold table has no entry for question '" +
                request.question_id + "', group (" + request.group.attribute +
                "=" + request.group.value + ")");
    }
    OpinionDistribution d =
        mockDistort(entry->distribution, all->distribution, config_.mock,
                    request.question_id, request.group, request.sample_index);

    CompletionResponse response;
    if (!request.logprobs_for.empty()) {
      for (const auto& candidate : request.logprobs_for) {
        int idx = 0;
        try {
          idx = std::stoi(candidate);
        } catch (const std::exception&) {
          idx = 0;
        }
        double p = (idx >= 1 && static_cast<size_t>(idx) <= d.size())
                       ? std::max(d[static_cast<size_t>(idx) - 1], 1e-300)
                       : 1e-300;
        response.logprobs[candidate] = std::log(p);
      }
      return response;
    }
    if (request.answer_shape == AnswerShape::Verbalized) {
      response.text = renderPercentages(d);
      return response;
    }
    response.text = std::to_string(sampleChoice(d, request));
    return response;
  }

 private:
  std::string renderPercentages(const OpinionDistribution& d) const {
    std::string out = "[";
    char buf[64];
    for (size_t i = 0; i < d.size(); ++i) {
      if (i) out += ", ";
      if (config_.mock.verbalized_decimals == 0) {
        std::snprintf(buf, sizeof(buf), "%lld",
                      static_cast<long long>(std::llround(d[i] * 100.0)));
      } else {
        std::snprintf(buf, sizeof(buf), "%.*f", config_.mock.verbalized_decimals,
                      d[i] * 100.0);
      }
      out += buf;
    }
    out += "]";
    return out;
  }

  int sampleChoice(const OpinionDistribution& d,
                   const CompletionRequest& request) const {
    uint64_t seed = config_.mock.seed;
    seed = Rng::mix(seed, Rng::hashString(request.question_id));
    seed = Rng::mix(seed, Rng::hashString(request.group.attribute));
    seed = Rng::mix(seed, Rng::hashString(request.group.value));
    seed = Rng::mix(seed, static_cast<uint64_t>(request.sample_index));
    seed = Rng::mix(seed, Rng::hashString("choice"));
    Rng rng(seed);
    double u = rng.nextDouble();
    double cum = 0.0;
    for (size_t i = 0; i < d.size(); ++i) {
      cum += d[i];
      if (u < cum) return static_cast<int>(i) + 1;
    }
    return static_cast<int>(d.size());
  }

  Dataset world_;
};

std::pair<std::string, std::string> splitUrl(const std::string& url) {
  size_t scheme = url.find("://");
  if (scheme == std::string::npos) {
    raise(Errc::InvalidArgument, "endpoint '" + url + "' has no scheme");
  }
  size_t path_start = url.find('/', scheme + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::pair<int, std::string> realHttpPost(
    const std::string& url, const std::string& body,
    const std::vector<std::pair<std::string, std::string>>& headers) {
  auto [base, path] = splitUrl(url);
  httplib::Client client(base);
  client.set_connection_timeout(10, 0);
  client.set_read_timeout(120, 0);
  httplib::Headers hs;
  for (const auto& [k, v] : headers) hs.emplace(k, v);
  auto res = client.Post(path, hs, body, "application/json");
  if (!res) return {0, ""};
  return {res->status, res->body};
}

class HttpChatProvider : public ProviderBase {
 public:
  HttpChatProvider(ProviderConfig config, const ProviderHooks& hooks)
      : ProviderBase(std::move(config), hooks),
        post_(hooks.http_post ? hooks.http_post : realHttpPost),
        sleeper_(hooks.sleeper ? hooks.sleeper : [](int64_t ms) {
          std::this_thread::sleep_for(std::chrono::milliseconds(ms));
        }) {
    if (!config_.api_key_env.empty()) {
      const char* key = std::getenv(config_.api_key_env.c_str());
      if (!key || !*key) {
        raise(Errc::AuthError, "environment variable '" + config_.api_key_env +
                                   "' is not set");
      }
      api_key_ = key;
    }
  }

 protected:
  CompletionResponse perform(const CompletionRequest& request) override {
    json body;
    body["model"] = config_.model_id;
    body["messages"] = json::array(
        {json{{"role", "user"}, {"content", request.prompt}}});
    body["temperature"] = request.temperature;
    if (!request.logprobs_for.empty()) {
      body["logprobs_for"] = request.logprobs_for;
    }
    std::vector<std::pair<std::string, std::string>> headers;
    if (!api_key_.empty()) {
      headers.emplace_back("Authorization", "Bearer " + api_key_);
    }

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) sleeper_(250ll << (attempt - 1));
      limiter_.acquire();
      auto [status, text] = post_(config_.endpoint_url, body.dump(), headers);
      if (status == 200) return parseResponse(text);
      last_error = "status " + std::to_string(status);
      bool retryable = status == 0 || status == 429 || status >= 500;
      if (!retryable) break;
    }
    raise(Errc::ProviderError, "request to '" + config_.endpoint_url +
                                   "' failed after retries (" + last_error +
                                   ")");
  }

 private:
  CompletionResponse parseResponse(const std::string& text) const {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) {
      raise(Errc::ProviderError, "endpoint returned invalid JSON");
    }
    CompletionResponse response;
    try {
      if (j.contains("choices") && !j.at("choices").empty()) {
        response.text = j.at("choices")[0].at("message").at("content")
                            .get<std::string>();
      }
      if (j.contains("logprobs")) {
        for (const auto& [k, v] : j.at("logprobs").items()) {
          response.logprobs[k] = v.get<double>();
        }
      }
    } catch (const json::exception& e) {
      raise(Errc::ProviderError, std::string("unexpected response shape: ") +
                                     e.what());
    }
    return response;
  }

  HttpPostFn post_;
  RateLimiter::Sleeper sleeper_;
  std::string api_key_;
};

}  // namespace

OpinionDistribution mockDistort(const OpinionDistribution& gold,
                                const OpinionDistribution& all,
                                const MockDistortion& distortion,
                                const std::string& question_id,
                                const GroupKey& group, int sample_index) {
  distortion.validate();
  // Identity configuration passes gold through untouched.
  if (distortion.gamma == 1.0 && distortion.noise_scale == 0.0 &&
      distortion.affine_a == 1.0 && distortion.affine_b == 0.0 &&
      distortion.group_exaggerate == 1.0) {
    return gold;
  }
  if (all.size() != gold.size()) {
    raise(Errc::LengthMismatch, "gold/all distributions of differing length");
  }

  const size_t k = gold.size();
  std::vector<double> pre(k);
  for (size_t i = 0; i < k; ++i) {
    double base = all[i] + distortion.group_exaggerate * (gold[i] - all[i]);
    pre[i] = distortion.affine_a * base + distortion.affine_b;
  }
  if (distortion.noise_scale > 0.0) {
    uint64_t seed = distortion.seed;
    seed = Rng::mix(seed, Rng::hashString(question_id));
    seed = Rng::mix(seed, Rng::hashString(group.attribute));
    seed = Rng::mix(seed, Rng::hashString(group.value));
    seed = Rng::mix(seed, static_cast<uint64_t>(sample_index));
    Rng rng(seed);
    for (size_t i = 0; i < k; ++i) {
      pre[i] += distortion.noise_scale * rng.nextNormal();
    }
  }
  for (size_t i = 0; i < k; ++i) {
    pre[i] = std::pow(std::max(pre[i], 1e-6), distortion.gamma);
  }
  return OpinionDistribution::renormalized(pre, NegativePolicy::ClipToZero);
}

std::unique_ptr<Provider> makeProviderWithHooks(const ProviderConfig& config,
                                                const ProviderHooks& hooks) {
  config.validate();
  if (config.kind == ProviderKind::Mock) {
    return std::make_unique<MockProvider>(config, hooks);
  }
  return std::make_unique<HttpChatProvider>(config, hooks);
}

std::unique_ptr<Provider> makeProvider(const ProviderConfig& config) {
  return makeProviderWithHooks(config, ProviderHooks{});
}

}  // namespace distalign
