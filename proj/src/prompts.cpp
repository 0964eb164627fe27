// Copyright 2026 The dist-align Authors
// SPDX-License-Identifier: Apache-2.0
//
// Default prompt templates. These double as the shipped data files under
// data/prompts/ (a test keeps the two in sync), so any edit here must be
// mirrored there.

#include "distalign/elicit.hpp"

#include "ioutil.hpp"

namespace distalign {

namespace {

const char* kBaseVerbalized =
    "What percentage of people would respond with {answer choices} to the "
    "following question?\n"
    "Question: '{q}'\n"
    "Respond with a list of {l} numbers which represent the percentages for "
    "{answer choices} in that order.\n"
    "Expected response format: [, , , ,]\n"
    "Response:";

const char* kBaseSingleChoice =
    "Would you respond with {answer choices} to the following question?\n"
    "Question: '{q}'\n"
    "Respond with only a single integer number in the inclusive range "
    "[1,{l}], representing the index of your selected answer choice in "
    "{answer choices}.\n"
    "Response:";

const char* kBaseLogprob =
    "Would you respond with {answer choices} to the following question?\n"
    "Question: '{q}'\n"
    "Respond with only a single integer number in the inclusive range "
    "[1,{l}], representing the index of your selected answer choice in "
    "{answer choices}.\n"
    "Response: {answer}";

const char* kBaseParaphrase2 =
    "How might someone respond to the following question?\n"
    "Question: '{q}'\n"
    "Possible responses are {answer choices}.\n"
    "Respond with only a single integer number in the inclusive range "
    "[1,{l}], representing the index of your selected answer choice in "
    "{answer choices}.\n"
    "Response:";

const char* kBaseParaphrase3 =
    "Question: '{q}'\n"
    "Response options: {answer choices}.\n"
    "Respond with only a single integer number in the inclusive range "
    "[1,{l}], representing the index of your selected answer choice in "
    "{answer choices}.\n"
    "Response:";

const char* kBaseParaphrase4 =
    "Below you will be asked to answer some questions.\n"
    "Question: '{q}'\n"
    "Response options: {answer choices}.\n"
    "Respond with only a single integer number in the inclusive range "
    "[1,{l}], representing the index of your selected answer choice in "
    "{answer choices}.\n"
    "Response:";

const char* kBaseParaphrase5 =
    "Answer the following question.\n"
    "Question: '{q}'\n"
    "Response options: {answer choices}.\n"
    "Respond with only a single integer number in the inclusive range "
    "[1,{l}], representing the index of your selected answer choice in "
    "{answer choices}.\n"
    "Response:";

const char* kSdVerbalized =
    "What percentage of people whose {att} is {c} would respond with "
    "{answer choices} to the following question?\n"
    "Question: '{q}'\n"
    "Respond with a list of {l} numbers which represent the percentages for "
    "{answer choices} in that order.\n"
    "Expected response format: [, , , ,]\n"
    "Response:";

const char* kSdSingleChoice =
    "Imagine your {att} is {c}. Would you respond with {answer choices} to "
    "the following question?\n"
    "Question: '{q}'\n"
    "Respond with only a single integer number in the inclusive range "
    "[1,{l}], representing the index of your selected answer choice in "
    "{answer choices}.\n"
    "Response:";

const char* kSdLogprob =
    "Imagine your {att} is {c}. Would you respond with {answer choices} to "
    "the following question?\n"
    "Question: '{q}'\n"
    "Respond with only a single integer number in the inclusive range "
    "[1,{l}], representing the index of your selected answer choice in "
    "{answer choices}.\n"
    "Response: {answer}";

const char* kSdParaphrase2 =
    "How would a person whose {att} is {c} respond to the following "
    "question?\n"
    "Question: '{q}'\n"
    "Possible responses are {answer choices}\n"
    "Respond with only a single integer number in the inclusive range "
    "[1,{l}], representing the index of your selected answer choice in "
    "{answer choices}.\n"
    "Response:";

const char* kSdParaphrase3 =
    "Person: {c} {att}\n"
    "Question: '{q}'\n"
    "Response options: {answer choices}\n"
    "Respond with only a single integer number in the inclusive range "
    "[1,{l}], representing the index of your selected answer choice in "
    "{answer choices}.\n"
    "Response:";

const char* kSdParaphrase4 =
    "Below you will be asked to provide a short description of your {att} "
    "and then answer some questions.\n"
    "Description: I am {c}\n"
    "Question: '{q}'\n"
    "Respond with only a single integer number in the inclusive range "
    "[1,{l}], representing the index of your selected answer choice in "
    "{answer choices}.\n"
    "Response:";

const char* kSdParaphrase5 =
    "Answer the following question as if your {att} is {c}. Would you "
    "respond with {answer choices} to the following question?\n"
    "Question: '{q}'\n"
    "Respond with only a single integer number in the inclusive range "
    "[1,{l}], representing the index of your selected answer choice in "
    "{answer choices}.\n"
    "Response:";

PromptTemplates buildDefaults() {
  PromptTemplates t;
  t.base.verbalized = kBaseVerbalized;
  t.base.self_random = kBaseSingleChoice;
  t.base.logprob = kBaseLogprob;
  t.base.paraphrase = {kBaseSingleChoice, kBaseParaphrase2, kBaseParaphrase3,
                       kBaseParaphrase4, kBaseParaphrase5};
  t.sd.verbalized = kSdVerbalized;
  t.sd.self_random = kSdSingleChoice;
  t.sd.logprob = kSdLogprob;
  t.sd.paraphrase = {kSdSingleChoice, kSdParaphrase2, kSdParaphrase3,
                     kSdParaphrase4, kSdParaphrase5};
  return t;
}

struct NamedSlot {
  const char* name;
  std::string PromptSet::*field;
  int paraphrase_index;  // -1 for the scalar fields
};

constexpr NamedSlot kSlots[] = {
    {"verbalized", &PromptSet::verbalized, -1},
    {"self_random", &PromptSet::self_random, -1},
    {"logprob", &PromptSet::logprob, -1},
    {"paraphrase_1", nullptr, 0},
    {"paraphrase_2", nullptr, 1},
    {"paraphrase_3", nullptr, 2},
    {"paraphrase_4", nullptr, 3},
    {"paraphrase_5", nullptr, 4},
};

std::string slotPath(const std::string& dir, const char* kind,
                     const NamedSlot& slot) {
  return dir + "/" + kind + "_" + slot.name + ".txt";
}

std::string& slotRef(PromptSet& set, const NamedSlot& slot) {
  if (slot.field) return set.*(slot.field);
  return set.paraphrase[static_cast<size_t>(slot.paraphrase_index)];
}

}  // namespace

const PromptTemplates& PromptTemplates::defaults() {
  static const PromptTemplates instance = buildDefaults();
  return instance;
}

PromptTemplates PromptTemplates::loadDir(const std::string& dir) {
  PromptTemplates t;
  for (const auto& slot : kSlots) {
    std::string base = readFile(slotPath(dir, "base", slot));
    std::string sd = readFile(slotPath(dir, "sd", slot));
    // Trailing newline from text editors is not part of the template.
    while (!base.empty() && base.back() == '\n') base.pop_back();
    while (!sd.empty() && sd.back() == '\n') sd.pop_back();
    slotRef(t.base, slot) = base;
    slotRef(t.sd, slot) = sd;
  }
  return t;
}

void PromptTemplates::writeDir(const std::string& dir) {
  PromptTemplates t = buildDefaults();
  for (const auto& slot : kSlots) {
    writeFile(slotPath(dir, "base", slot), slotRef(t.base, slot) + "\n");
    writeFile(slotPath(dir, "sd", slot), slotRef(t.sd, slot) + "\n");
  }
}

}  // namespace distalign
