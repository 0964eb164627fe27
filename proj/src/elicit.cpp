// Copyright 2026 The dist-align Authors
// SPDX-License-Identifier: Apache-2.0

#include "distalign/elicit.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ioutil.hpp"

namespace distalign {

using nlohmann::json;

namespace {

struct Placeholder {
  const char* token;
  size_t length;
};

constexpr Placeholder kPlaceholders[] = {
    {"{q}", 3},
    {"{answer choices}", 16},
    {"{l}", 3},
    {"{att}", 5},
    {"{c}", 3},
    {"{answer}", 8},
};

std::string joinChoices(const std::vector<std::string>& choices) {
  std::string out;
  for (size_t i = 0; i < choices.size(); ++i) {
    if (i) out += ", ";
    out += choices[i];
  }
  return out;
}

}  // namespace

std::string renderPrompt(const std::string& templ,
                         const SurveyQuestion& question,
                         const GroupKey& group) {
  const std::string choices = joinChoices(question.choices);
  const std::string l = std::to_string(question.k());

  std::string out;
  out.reserve(templ.size() + question.text.size() + choices.size());
  size_t i = 0;
  while (i < templ.size()) {
    if (templ[i] != '{') {
      out += templ[i++];
      continue;
    }
    bool matched = false;
    for (const auto& ph : kPlaceholders) {
      if (templ.compare(i, ph.length, ph.token) != 0) continue;
      matched = true;
      std::string_view token(ph.token);
      if (token == "{q}") {
        out += question.text;
      } else if (token == "{answer choices}") {
        out += choices;
      } else if (token == "{l}") {
        out += l;
      } else if (token == "{att}") {
        if (group.isAll()) {
          raise(Errc::InvalidArgument,
                "template needs a demographic group but got all-respondents");
        }
        out += group.attribute;
      } else if (token == "{c}") {
        if (group.isAll()) {
          raise(Errc::InvalidArgument,
                "template needs a demographic group but got all-respondents");
        }
        out += group.value;
      }  // {answer} marks the scored continuation; renders as empty
      i += ph.length;
      break;
    }
    if (!matched) {
      raise(Errc::InvalidArgument,
            "template holds an unknown placeholder near '" +
                templ.substr(i, 16) + "'");
    }
  }
  return out;
}

const std::string& selectTemplate(const PromptTemplates& templates,
                                  Method method, PromptKind kind,
                                  const GroupKey& group,
                                  int paraphrase_index) {
  const PromptSet& set = (kind == PromptKind::SD && !group.isAll())
                             ? templates.sd
                             : templates.base;
  switch (method) {
    case Method::Verbalized:
      return set.verbalized;
    case Method::SelfRandom:
      return set.self_random;
    case Method::Logprob:
      return set.logprob;
    case Method::Paraphrase:
      if (paraphrase_index < 0 || paraphrase_index >= 5) {
        raise(Errc::InvalidArgument, "paraphrase index outside [0,5)");
      }
      return set.paraphrase[static_cast<size_t>(paraphrase_index)];
  }
  raise(Errc::Internal, "unhandled method");
}

namespace {

/// Parses one bracketed chunk into numbers; false if any token is not
/// fully numeric (an optional trailing % is allowed).
bool parseNumberList(const std::string& inner, std::vector<double>* out) {
  out->clear();
  std::string token;
  std::istringstream in(inner);
  while (std::getline(in, token, ',')) {
    size_t b = token.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return false;
    size_t e = token.find_last_not_of(" \t\r\n");
    std::string body = token.substr(b, e - b + 1);
    if (!body.empty() && body.back() == '%') body.pop_back();
    if (body.empty()) return false;
    const char* begin = body.c_str();
    char* end = nullptr;
    double value = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || !std::isfinite(value)) return false;
    out->push_back(value);
  }
  return !out->empty();
}

}  // namespace

std::optional<ParsedVerbalized> parseVerbalized(const std::string& text,
                                                size_t k) {
  std::vector<double> numbers;
  bool found = false;
  size_t pos = 0;
  while ((pos = text.find('[', pos)) != std::string::npos) {
    size_t close = text.find(']', pos + 1);
    if (close == std::string::npos) break;
    if (parseNumberList(text.substr(pos + 1, close - pos - 1), &numbers)) {
      found = true;
      break;
    }
    ++pos;
  }
  if (!found || numbers.size() != k) return std::nullopt;

  ParsedVerbalized parsed;
  parsed.raw = numbers;
  double sum = 0.0;
  for (double v : numbers) sum += v;
  if (sum >= 90.0 && sum <= 110.0) {
    for (double& v : numbers) v /= 100.0;
  }
  try {
    parsed.distribution =
        OpinionDistribution::renormalized(numbers, NegativePolicy::ClipToZero);
  } catch (const Error&) {
    return std::nullopt;
  }
  return parsed;
}

std::optional<int> parseChoice(const std::string& text, size_t k) {
  for (size_t i = 0; i < text.size(); ++i) {
    bool digit = std::isdigit(static_cast<unsigned char>(text[i]));
    bool negative = text[i] == '-' && i + 1 < text.size() &&
                    std::isdigit(static_cast<unsigned char>(text[i + 1]));
    if (!digit && !negative) continue;
    long value = std::strtol(text.c_str() + i, nullptr, 10);
    if (value >= 1 && static_cast<size_t>(value) <= k) {
      return static_cast<int>(value);
    }
    return std::nullopt;  // first integer is authoritative
  }
  return std::nullopt;
}

namespace {

ElicitationRecord makeRecord(Provider& provider, const SurveyQuestion& question,
                             const GroupKey& group, Method method,
                             PromptKind kind) {
  ElicitationRecord record;
  record.key.question_id = question.id;
  record.key.group = group;
  record.key.source = Source::Elicited;
  record.key.setting =
      Setting{provider.config().model_id, method, kind};
  record.key.validate();
  record.dataset = question.dataset;
  return record;
}

CompletionRequest makeRequest(Provider& provider,
                              const SurveyQuestion& question,
                              const GroupKey& group, const std::string& prompt,
                              int sample_index, AnswerShape shape) {
  CompletionRequest request;
  request.prompt = prompt;
  request.temperature = provider.config().temperature;
  request.sample_index = sample_index;
  request.question_id = question.id;
  request.group = group;
  request.answer_shape = shape;
  return request;
}

/// Shared flow for the single-choice protocols: render one prompt per
/// (template, sample) pair, parse each reply as a choice index, and build
/// the empirical distribution over the survivors.
/// The group whose perspective the provider is actually asked to take: a
/// base prompt carries no demographic wording, so it elicits (and caches)
/// the all-respondents view no matter which group the record is keyed by.
GroupKey promptedGroup(PromptKind kind, const GroupKey& group) {
  return (kind == PromptKind::SD && !group.isAll())
             ? group
             : GroupKey::allRespondents();
}

ElicitationRecord elicitSingleChoice(Provider& provider,
                                     const SurveyQuestion& question,
                                     const GroupKey& group, Method method,
                                     PromptKind kind,
                                     const PromptTemplates& templates,
                                     int n_samples, bool vary_template) {
  ElicitationRecord record = makeRecord(provider, question, group, method, kind);
  const GroupKey prompted = promptedGroup(kind, group);
  std::vector<int> choices;
  for (int s = 0; s < n_samples; ++s) {
    const std::string& templ =
        selectTemplate(templates, method, kind, group, vary_template ? s : -1);
    std::string prompt = renderPrompt(templ, question, prompted);
    CompletionResponse response = provider.complete(makeRequest(
        provider, question, prompted, prompt, s, AnswerShape::SingleChoice));
    record.raw_outputs.push_back(response.text);
    if (auto choice = parseChoice(response.text, question.k())) {
      choices.push_back(*choice);
    } else {
      record.n_discarded += 1;
    }
  }
  if (choices.empty()) {
    raise(Errc::AllSamplesDiscarded,
          "no parsable single-choice answers for question '" + question.id +
              "'");
  }
  record.n_samples_used = static_cast<int>(choices.size());
  record.distribution = OpinionDistribution::fromSamples(choices, question.k());
  return record;
}

}  // namespace

ElicitationRecord elicitVerbalized(Provider& provider,
                                   const SurveyQuestion& question,
                                   const GroupKey& group, PromptKind kind,
                                   const PromptTemplates& templates) {
  ElicitationRecord record =
      makeRecord(provider, question, group, Method::Verbalized, kind);
  const GroupKey prompted = promptedGroup(kind, group);
  const std::string& templ =
      selectTemplate(templates, Method::Verbalized, kind, group, -1);
  std::string prompt = renderPrompt(templ, question, prompted);

  std::vector<OpinionDistribution> parsed;
  for (int s = 0; s < kVerbalizedSamples; ++s) {
    CompletionResponse response = provider.complete(makeRequest(
        provider, question, prompted, prompt, s, AnswerShape::Verbalized));
    record.raw_outputs.push_back(response.text);
    if (auto p = parseVerbalized(response.text, question.k())) {
      parsed.push_back(std::move(p->distribution));
    } else {
      record.n_discarded += 1;
    }
  }
  if (parsed.empty()) {
    raise(Errc::AllSamplesDiscarded,
          "no parsable verbalized answers for question '" + question.id + "'");
  }
  record.n_samples_used = static_cast<int>(parsed.size());
  record.distribution = OpinionDistribution::average(parsed);
  return record;
}

ElicitationRecord elicitSelfRandom(Provider& provider,
                                   const SurveyQuestion& question,
                                   const GroupKey& group, PromptKind kind,
                                   const PromptTemplates& templates) {
  return elicitSingleChoice(provider, question, group, Method::SelfRandom,
                            kind, templates, kSelfRandomSamples,
                            /*vary_template=*/false);
}

ElicitationRecord elicitParaphrase(Provider& provider,
                                   const SurveyQuestion& question,
                                   const GroupKey& group, PromptKind kind,
                                   const PromptTemplates& templates) {
  return elicitSingleChoice(provider, question, group, Method::Paraphrase,
                            kind, templates, 5, /*vary_template=*/true);
}

ElicitationRecord elicitLogprob(Provider& provider,
                                const SurveyQuestion& question,
                                const GroupKey& group, PromptKind kind,
                                const PromptTemplates& templates) {
  if (!provider.config().supports_logprobs) {
    raise(Errc::LogprobsUnsupported, "provider '" +
                                         provider.config().model_id +
                                         "' cannot score continuations");
  }
  ElicitationRecord record =
      makeRecord(provider, question, group, Method::Logprob, kind);
  const GroupKey prompted = promptedGroup(kind, group);
  const std::string& templ =
      selectTemplate(templates, Method::Logprob, kind, group, -1);
  std::string prompt = renderPrompt(templ, question, prompted);

  CompletionRequest request = makeRequest(provider, question, prompted, prompt,
                                          0, AnswerShape::SingleChoice);
  for (size_t i = 1; i <= question.k(); ++i) {
    request.logprobs_for.push_back(std::to_string(i));
  }
  CompletionResponse response = provider.complete(request);

  std::vector<double> logprobs(question.k());
  double max_lp = -std::numeric_limits<double>::infinity();
  size_t present = 0;
  for (size_t i = 0; i < question.k(); ++i) {
    auto it = response.logprobs.find(request.logprobs_for[i]);
    if (it == response.logprobs.end()) {
      logprobs[i] = -std::numeric_limits<double>::infinity();
      continue;
    }
    logprobs[i] = it->second;
    max_lp = std::max(max_lp, it->second);
    ++present;
  }
  if (present == 0) {
    raise(Errc::AllSamplesDiscarded,
          "endpoint returned no usable log probabilities for question '" +
              question.id + "'");
  }
  std::vector<double> weights(question.k());
  for (size_t i = 0; i < question.k(); ++i) {
    weights[i] = std::isinf(logprobs[i]) ? 0.0 : std::exp(logprobs[i] - max_lp);
  }
  record.distribution =
      OpinionDistribution::renormalized(weights, NegativePolicy::ClipToZero);
  record.n_samples_used = 1;
  json raw;
  for (size_t i = 0; i < question.k(); ++i) {
    if (!std::isinf(logprobs[i])) {
      raw[request.logprobs_for[i]] = logprobs[i];
    }
  }
  record.raw_outputs.push_back(raw.dump());
  return record;
}

ElicitationRecord elicit(Provider& provider, const SurveyQuestion& question,
                         const GroupKey& group, Method method, PromptKind kind,
                         const PromptTemplates& templates) {
  switch (method) {
    case Method::Verbalized:
      return elicitVerbalized(provider, question, group, kind, templates);
    case Method::SelfRandom:
      return elicitSelfRandom(provider, question, group, kind, templates);
    case Method::Paraphrase:
      return elicitParaphrase(provider, question, group, kind, templates);
    case Method::Logprob:
      return elicitLogprob(provider, question, group, kind, templates);
  }
  raise(Errc::Internal, "unhandled method");
}

std::string recordToJsonLine(const ElicitationRecord& record) {
  json j;
  j["question_id"] = record.key.question_id;
  j["dataset"] = record.dataset;
  j["attribute"] = record.key.group.attribute;
  j["value"] = record.key.group.value;
  j["model_id"] = record.key.setting->model_id;
  j["method"] = methodName(record.key.setting->method);
  j["prompt_kind"] = promptKindName(record.key.setting->kind);
  j["n_samples_used"] = record.n_samples_used;
  j["n_discarded"] = record.n_discarded;
  j["probs"] = record.distribution.probs();
  j["raw_outputs"] = record.raw_outputs;
  return j.dump();
}

ElicitationRecord recordFromJsonLine(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) raise(Errc::SchemaError, "bad elicited record JSON");
  ElicitationRecord record;
  try {
    record.key.question_id = j.at("question_id").get<std::string>();
    record.dataset = j.value("dataset", std::string{});
    record.key.group =
        GroupKey{j.at("attribute").get<std::string>(),
                 j.at("value").get<std::string>()};
    record.key.source = Source::Elicited;
    Setting setting;
    setting.model_id = j.at("model_id").get<std::string>();
    auto method = methodFromName(j.at("method").get<std::string>());
    auto kind = promptKindFromName(j.at("prompt_kind").get<std::string>());
    if (!method || !kind) raise(Errc::SchemaError, "bad method/prompt_kind");
    setting.method = *method;
    setting.kind = *kind;
    record.key.setting = setting;
    record.n_samples_used = j.at("n_samples_used").get<int>();
    record.n_discarded = j.at("n_discarded").get<int>();
    record.distribution = OpinionDistribution::fromProbs(
        j.at("probs").get<std::vector<double>>());
    if (j.contains("raw_outputs")) {
      record.raw_outputs = j.at("raw_outputs").get<std::vector<std::string>>();
    }
    record.key.validate();
  } catch (const json::exception& e) {
    raise(Errc::SchemaError, std::string("elicited record: ") + e.what());
  }
  return record;
}

void saveRecords(const std::vector<ElicitationRecord>& records,
                 const std::string& path) {
  std::string out;
  for (const auto& record : records) {
    out += recordToJsonLine(record);
    out += '\n';
  }
  writeFile(path, out);
}

std::vector<ElicitationRecord> loadRecords(const std::string& path) {
  std::istringstream in(readFile(path));
  std::vector<ElicitationRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(recordFromJsonLine(line));
  }
  return records;
}

}  // namespace distalign
