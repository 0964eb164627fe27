// Copyright 2026 The dist-align Authors
// SPDX-License-Identifier: Apache-2.0
//
// Uniform client abstraction over chat-completion endpoints plus a
// deterministic mock provider that answers from a distorted gold table, so
// the whole pipeline runs without network access. Completions are cached
// on disk, retried with exponential backoff, and rate limited.

#ifndef DISTALIGN_PROVIDERS_HPP
#define DISTALIGN_PROVIDERS_HPP

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "distalign/core.hpp"
#include "distalign/ingest.hpp"

namespace distalign {

enum class ProviderKind { HttpChat, Mock };

/// Synthetic response-distortion model: the mock provider answers with
///
///   D = renormalize( (a * g_i + b + eps_i) ^ gamma )
///
/// where g is the (optionally group-exaggerated) gold distribution, eps is
/// zero-mean seeded noise of scale noise_scale, and every pre-power entry
/// is clipped to at least 1e-6. Noise draws are a pure function of
/// (seed, question_id, group, sample_index).
struct MockDistortion {
  double gamma = 1.0;
  double noise_scale = 0.0;
  double affine_a = 1.0;
  double affine_b = 0.0;
  // Scales each group's deviation from the question's all-respondents
  // distribution before distorting; > 1 widens group differences.
  double group_exaggerate = 1.0;
  uint64_t seed = 0;
  // Verbalized answers are rendered as integer percentages by default;
  // > 0 switches to fixed-point percentages with that many decimals.
  int verbalized_decimals = 0;

  void validate() const;
};

struct ProviderConfig {
  ProviderKind kind = ProviderKind::Mock;
  std::string endpoint_url;  // e.g. http://host:port/v1/chat/completions
  std::string model_id;
  std::string api_key_env;  // name of the env var holding the key
  double temperature = 0.7;
  int max_retries = 3;
  int requests_per_minute = 600;
  bool supports_logprobs = false;
  std::string cache_dir;  // empty disables caching

  // Mock-only.
  std::string mock_gold_path;
  MockDistortion mock;

  void validate() const;
};

/// Loads a provider description from a TOML file ([provider] table plus an
/// optional [mock] table).
ProviderConfig loadProviderConfig(const std::string& path);

/// What the mock should produce for a prompt. Real providers ignore it.
enum class AnswerShape { Verbalized, SingleChoice };

struct CompletionRequest {
  std::string prompt;
  double temperature = 0.7;
  int sample_index = 0;  // distinguishes repeated samples in the cache key
  std::vector<std::string> logprobs_for;  // candidate continuations

  // Routing metadata for the mock provider; not part of the cache key
  // (the prompt already determines them) and never sent over the wire.
  std::string question_id;
  GroupKey group = GroupKey::allRespondents();
  AnswerShape answer_shape = AnswerShape::SingleChoice;
};

struct CompletionResponse {
  std::string text;
  std::map<std::string, double> logprobs;  // candidate -> log probability
  bool from_cache = false;
};

/// Sliding-window limiter: never admits more than `per_minute` calls in
/// any 60 s window. Clock and sleeper are injectable for tests.
class RateLimiter {
 public:
  using Clock = std::function<int64_t()>;          // milliseconds
  using Sleeper = std::function<void(int64_t)>;    // milliseconds

  RateLimiter(int per_minute, Clock clock = nullptr, Sleeper sleeper = nullptr);

  /// Blocks until a call may proceed, then records it.
  void acquire();

 private:
  int per_minute_;
  Clock clock_;
  Sleeper sleeper_;
  std::mutex mu_;
  std::deque<int64_t> window_;
};

class Provider {
 public:
  virtual ~Provider() = default;

  /// Serves from the cache when possible; otherwise performs the call
  /// (with retries, under the rate cap), persists it, and returns.
  /// Safe to call from multiple worker threads.
  virtual CompletionResponse complete(const CompletionRequest& request) = 0;

  virtual const ProviderConfig& config() const = 0;
};

/// Builds the configured provider. Throws AuthError immediately when an
/// HTTP provider's key env var is configured but unset.
std::unique_ptr<Provider> makeProvider(const ProviderConfig& config);

/// Applies the distortion model to a gold distribution. `all` is the
/// question's all-respondents distribution (used by group exaggeration;
/// pass gold itself for the all-respondents group).
OpinionDistribution mockDistort(const OpinionDistribution& gold,
                                const OpinionDistribution& all,
                                const MockDistortion& distortion,
                                const std::string& question_id,
                                const GroupKey& group, int sample_index);

/// Cache key for a completion request under a given model.
std::string cacheKeyHash(const std::string& model_id,
                         const CompletionRequest& request);

/// Raw POST hook so tests can fake the transport. Returns (status, body);
/// status 0 means the connection itself failed.
using HttpPostFn = std::function<std::pair<int, std::string>(
    const std::string& url, const std::string& body,
    const std::vector<std::pair<std::string, std::string>>& headers)>;

struct ProviderHooks {
  HttpPostFn http_post;                  // default: real HTTP client
  RateLimiter::Clock clock;              // default: steady clock
  RateLimiter::Sleeper sleeper;          // default: std::this_thread
};

std::unique_ptr<Provider> makeProviderWithHooks(const ProviderConfig& config,
                                                const ProviderHooks& hooks);

}  // namespace distalign

#endif  // DISTALIGN_PROVIDERS_HPP
