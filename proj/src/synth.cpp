// Copyright 2026 The dist-align Authors
// SPDX-License-Identifier: Apache-2.0

#include "distalign/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "distalign/rng.hpp"
#include "distalign/tomlite.hpp"
#include "ioutil.hpp"

namespace distalign {

using nlohmann::json;

void SyntheticSpec::validate() const {
  if (n_datasets < 1 || n_questions < 1 || respondents_per_group < 1) {
    raise(Errc::InvalidArgument, "world counts must be >= 1");
  }
  if (k_min < 2 || k_max > 7 || k_min > k_max) {
    raise(Errc::InvalidArgument, "k range must satisfy 2 <= k_min <= k_max <= 7");
  }
  if (group_effect < 0.0) {
    raise(Errc::InvalidArgument, "group_effect must be >= 0");
  }
  for (const auto& attr : attributes) {
    if (attr.name.empty() || attr.values.size() < 2) {
      raise(Errc::InvalidArgument,
            "attributes need a name and at least 2 values");
    }
  }
}

SyntheticSpec SyntheticSpec::defaults() {
  SyntheticSpec spec;
  spec.attributes = {
      {"age", {"15-29", "30-49", "50+"}},
      {"education", {"primary", "secondary", "tertiary"}},
      {"area", {"city", "town", "rural"}},
  };
  return spec;
}

SyntheticSpec SyntheticSpec::fromTomlFile(const std::string& path) {
  TomlTable t = TomlTable::parseFile(path);
  SyntheticSpec spec = defaults();
  spec.n_datasets = static_cast<int>(t.getIntOr("synth.n_datasets", 3));
  spec.n_questions = static_cast<int>(t.getIntOr("synth.n_questions", 40));
  spec.k_min = static_cast<int>(t.getIntOr("synth.k_min", 4));
  spec.k_max = static_cast<int>(t.getIntOr("synth.k_max", 4));
  spec.group_effect = t.getFloatOr("synth.group_effect", 1.0);
  spec.respondents_per_group =
      static_cast<int>(t.getIntOr("synth.respondents_per_group", 500));
  spec.seed = static_cast<uint64_t>(t.getIntOr("synth.seed", 42));
  spec.dataset_prefix = t.getStringOr("synth.dataset_prefix", "synth");
  std::vector<std::string> raw = t.getStringArrayOr("synth.attributes");
  if (!raw.empty()) {
    spec.attributes.clear();
    for (const auto& entry : raw) {
      size_t colon = entry.find(':');
      if (colon == std::string::npos) {
        raise(Errc::SchemaError,
              path + ": attribute '" + entry + "' is not name:v1|v2|...");
      }
      AttributeSpec attr;
      attr.name = entry.substr(0, colon);
      std::istringstream values(entry.substr(colon + 1));
      std::string value;
      while (std::getline(values, value, '|')) {
        if (!value.empty()) attr.values.push_back(value);
      }
      spec.attributes.push_back(std::move(attr));
    }
  }
  spec.validate();
  return spec;
}

namespace {

double logisticCdf(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Ordinal distribution over 1..k: logistic mass between the half-integer
/// cutpoints, tails absorbed into the extreme choices.
std::vector<double> ordinalLogistic(double location, double scale, size_t k) {
  std::vector<double> probs(k);
  double prev = 0.0;
  for (size_t i = 0; i + 1 < k; ++i) {
    double cut = static_cast<double>(i) + 1.5;
    double cdf = logisticCdf((cut - location) / scale);
    probs[i] = cdf - prev;
    prev = cdf;
  }
  probs[k - 1] = 1.0 - prev;
  return probs;
}

struct QuestionModel {
  double location = 0.0;
  double scale = 1.0;
  size_t k = 4;
};

// Walks every combination of attribute values, calling fn with the value
// index per attribute.
void forEachProfile(const std::vector<AttributeSpec>& attributes,
                    const std::function<void(const std::vector<size_t>&)>& fn) {
  std::vector<size_t> profile(attributes.size(), 0);
  for (;;) {
    fn(profile);
    size_t level = 0;
    while (level < attributes.size()) {
      if (++profile[level] < attributes[level].values.size()) break;
      profile[level] = 0;
      ++level;
    }
    if (level == attributes.size()) break;
  }
}

}  // namespace

SyntheticWorld generateWorld(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticWorld world;

  for (int d = 0; d < spec.n_datasets; ++d) {
    const std::string dataset = spec.dataset_prefix + std::to_string(d);

    // Demographic shifts are fixed per dataset so every question of the
    // dataset sees the same group structure.
    std::map<std::pair<std::string, std::string>, double> shifts;
    for (const auto& attr : spec.attributes) {
      for (const auto& value : attr.values) {
        Rng rng(Rng::mix(Rng::mix(spec.seed, Rng::hashString(dataset)),
                         Rng::mix(Rng::hashString(attr.name),
                                  Rng::hashString(value))));
        shifts[{attr.name, value}] = spec.group_effect * rng.nextNormal();
      }
    }

    for (int qn = 0; qn < spec.n_questions; ++qn) {
      char idbuf[64];
      std::snprintf(idbuf, sizeof(idbuf), "%s-q%03d", dataset.c_str(), qn);
      SurveyQuestion question;
      question.id = idbuf;
      question.dataset = dataset;
      question.category = "topic" + std::to_string(qn % 4);

      Rng qrng(Rng::mix(Rng::mix(spec.seed, Rng::hashString(dataset)),
                        static_cast<uint64_t>(qn) + 101));
      QuestionModel model;
      model.k = static_cast<size_t>(spec.k_min) +
                (spec.k_max > spec.k_min
                     ? static_cast<size_t>(qrng.nextBelow(
                           static_cast<uint64_t>(spec.k_max - spec.k_min + 1)))
                     : 0);
      model.location =
          1.0 + qrng.nextDouble() * (static_cast<double>(model.k) - 1.0);
      model.scale = 0.6 + qrng.nextDouble() * 0.9;

      question.text = "Where do you stand on statement " + std::to_string(qn) +
                      " about " + question.category + "?";
      for (size_t c = 1; c <= model.k; ++c) {
        question.choices.push_back("level " + std::to_string(c));
      }
      question.validate();
      world.questions.push_back(question);
      world.hidden.questions.push_back(question);

      // Exact marginal gold per group: average the profile-conditional
      // distributions over the other attributes. The all-respondents gold
      // averages over every full profile.
      std::vector<double> all_gold(model.k, 0.0);
      size_t n_profiles = 0;
      std::map<std::pair<std::string, std::string>, std::vector<double>>
          group_gold;
      std::map<std::pair<std::string, std::string>, size_t> group_profiles;
      forEachProfile(spec.attributes, [&](const std::vector<size_t>& profile) {
        double shift = 0.0;
        for (size_t a = 0; a < spec.attributes.size(); ++a) {
          shift += shifts[{spec.attributes[a].name,
                           spec.attributes[a].values[profile[a]]}];
        }
        std::vector<double> dist =
            ordinalLogistic(model.location + shift, model.scale, model.k);
        for (size_t i = 0; i < model.k; ++i) all_gold[i] += dist[i];
        ++n_profiles;
        for (size_t a = 0; a < spec.attributes.size(); ++a) {
          auto key = std::make_pair(spec.attributes[a].name,
                                    spec.attributes[a].values[profile[a]]);
          auto [slot, inserted] =
              group_gold.try_emplace(key, std::vector<double>(model.k, 0.0));
          for (size_t i = 0; i < model.k; ++i) slot->second[i] += dist[i];
          group_profiles[key] += 1;
        }
      });
      for (double& v : all_gold) v /= static_cast<double>(n_profiles);
      world.hidden.gold.put(question.id, GroupKey::allRespondents(),
                            OpinionDistribution::fromProbs(all_gold), 0);
      for (auto& [key, sum] : group_gold) {
        for (double& v : sum) v /= static_cast<double>(group_profiles[key]);
        world.hidden.gold.put(question.id, GroupKey{key.first, key.second},
                              OpinionDistribution::fromProbs(sum), 0);
      }

      // Respondents: uniform profiles, answers sampled from the
      // profile-conditional distribution.
      size_t max_values = 0;
      for (const auto& attr : spec.attributes) {
        max_values = std::max(max_values, attr.values.size());
      }
      if (spec.attributes.empty()) max_values = 1;
      const int n_respondents =
          spec.respondents_per_group * static_cast<int>(max_values);
      Rng rrng(Rng::mix(Rng::mix(spec.seed, Rng::hashString(question.id)),
                        Rng::hashString("respondents")));
      for (int r = 0; r < n_respondents; ++r) {
        RespondentRecord record;
        record.question_id = question.id;
        double shift = 0.0;
        for (const auto& attr : spec.attributes) {
          size_t v = static_cast<size_t>(
              rrng.nextBelow(static_cast<uint64_t>(attr.values.size())));
          record.demographics[attr.name] = attr.values[v];
          shift += shifts[{attr.name, attr.values[v]}];
        }
        std::vector<double> dist =
            ordinalLogistic(model.location + shift, model.scale, model.k);
        double u = rrng.nextDouble();
        double cum = 0.0;
        record.choice_index = static_cast<int>(model.k);
        for (size_t i = 0; i < model.k; ++i) {
          cum += dist[i];
          if (u < cum) {
            record.choice_index = static_cast<int>(i) + 1;
            break;
          }
        }
        world.respondents.push_back(std::move(record));
      }
    }
  }
  return world;
}

void writeWorld(const SyntheticWorld& world, const std::string& out_dir) {
  json questions = json::array();
  for (const auto& q : world.questions) {
    questions.push_back({{"id", q.id},
                         {"dataset", q.dataset},
                         {"category", q.category},
                         {"text", q.text},
                         {"choices", q.choices}});
  }
  writeFile(out_dir + "/questions.json", questions.dump(1) + "\n");

  std::string lines;
  for (const auto& r : world.respondents) {
    json row;
    row["question_id"] = r.question_id;
    row["choice_index"] = r.choice_index;
    row["demographics"] = r.demographics;
    lines += row.dump();
    lines += '\n';
  }
  writeFile(out_dir + "/respondents.jsonl", lines);

  saveGold(world.hidden, out_dir + "/hidden_gold.json");
}

namespace {

std::vector<double> parseArgs(const std::string& text, size_t expected,
                              const std::string& token) {
  std::vector<double> args;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      args.push_back(std::stod(item));
    } catch (const std::exception&) {
      raise(Errc::UnknownCase, "bad argument in benchmark case '" + token + "'");
    }
  }
  if (args.size() != expected) {
    raise(Errc::UnknownCase, "benchmark case '" + token + "' needs " +
                                 std::to_string(expected) + " argument(s)");
  }
  return args;
}

}  // namespace

BenchmarkCase benchmarkCase(const std::string& name) {
  BenchmarkCase result;
  result.name = name;

  std::istringstream in(name);
  std::string token;
  bool any = false;
  while (std::getline(in, token, '+')) {
    if (token.empty()) continue;
    any = true;
    size_t colon = token.find(':');
    std::string head = token.substr(0, colon);
    std::string args =
        colon == std::string::npos ? std::string{} : token.substr(colon + 1);
    if (head == "identity") {
      result.expected.has_improvement_within = true;
      result.expected.improvement_within = 0.005;  // half an alignment point
    } else if (head == "sharpen") {
      result.distortion.gamma = parseArgs(args, 1, token)[0];
      result.expected.has_min_improvement = true;
      result.expected.min_improvement = 0.05;  // five alignment points
    } else if (head == "affine-noise") {
      std::vector<double> v = parseArgs(args, 3, token);
      result.distortion.affine_a = v[0];
      result.distortion.affine_b = v[1];
      result.distortion.noise_scale = v[2];
      if (!result.expected.has_improvement_within) {
        result.expected.has_min_improvement = true;
        result.expected.min_improvement =
            std::max(result.expected.min_improvement, 0.0);
      }
    } else if (head == "group-exaggerate") {
      result.distortion.group_exaggerate = parseArgs(args, 1, token)[0];
      result.expected.expect_group_std_reduction = true;
    } else {
      raise(Errc::UnknownCase, "unknown benchmark case '" + token + "'");
    }
  }
  if (!any) raise(Errc::UnknownCase, "empty benchmark case name");
  result.distortion.validate();
  return result;
}

}  // namespace distalign
