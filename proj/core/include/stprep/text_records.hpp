#pragma once

#include <string>

namespace stprep {

// Monolingual text unit. lang is a tag like en|de|ja|zh|other.
struct SentenceRecord {
  std::string id;
  std::string lang;
  std::string text;
};

// Sentence-aligned parallel text unit.
struct BitextRecord {
  std::string id;
  std::string src_lang;
  std::string src_text;
  std::string tgt_lang;
  std::string tgt_text;
};

}  // namespace stprep
