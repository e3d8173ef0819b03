// aratts/phonetizer.h

// Copyright 2026  The aratts authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ARATTS_PHONETIZER_H_
#define ARATTS_PHONETIZER_H_

#include <string>
#include <vector>

#include "aratts/error.h"

namespace aratts {

// Deterministic transliteration of diacritized Arabic into a closed table of
// Latin phoneme symbols, so the encoder can index an English-character style
// embedding.
//
// Accepted alphabet:
//   letters     U+0621..U+063A, U+0641..U+064A (the 36 standard Arabic
//               letters; U+063B..U+0640 are not Arabic-language letters /
//               tatweel and are rejected)
//   diacritics  U+064B..U+0652 (fathatan dammatan kasratan fatha damma kasra
//               shadda sukun)
//   space, and sentence punctuation . , ? !
//
// Letter mapping (Buckwalter-flavoured; emphatics and long vowels are
// doubled-letter symbols, "c" is the ain by Somali-orthography precedent,
// "e" the glottal stop):
//
//   hamza group (0621..0626)  e        alef 0627      aa
//   beh  b      teh marbuta t          teh  t         theh th
//   jeem j      hah  hh                khah kh        dal  d
//   thal dh     reh  r                 zain z         seen s
//   sheen sh    sad  ss                dad  dd        tah  tt
//   zah  zz     ain  c                 ghain gh       feh  f
//   qaf  q      kaf  k                 lam  l         meem m
//   noon n      heh  h                 waw  w         alef maksura aa
//   yeh  y      (alef madda 0622      e aa)
//
// Diacritic mapping: fatha a, damma u, kasra i, sukun nothing, tanween
// short vowel + n, shadda re-emits the preceding letter's symbols
// (gemination).  Orthographic long vowels are realized as single symbols:
// fatha+bare alef/maksura -> aa, damma+bare waw -> uu, kasra+bare yeh -> ii
// ("bare" = the glide itself carries no diacritic).  An alef or maksura
// seat directly after fathatan is silent.
//
// A space becomes the explicit separator symbol "sp"; . , ? ! map to
// symbols of the same spelling.

// Validated codepoint sequence.  Parse() rejects out-of-alphabet input
// (kRejectedCodepoint) and diacritics with no preceding carrier letter or an
// illegal diacritic pair (kOrphanDiacritic); positions in messages are
// codepoint indices.
struct DiacriticText {
  std::vector<char32_t> codepoints;

  static DiacriticText Parse(const std::string &utf8);
};

struct PhonemeSequence {
  std::vector<int> ids;  // indices into SymbolTable()

  std::vector<std::string> Symbols() const;
  bool operator==(const PhonemeSequence &o) const { return ids == o.ids; }
};

struct PhonetizeResult {
  PhonemeSequence sequence;
  int undiacritized = 0;  // consonants carrying no vowel mark / sukun / shadda
};

// The closed symbol table: index = id, id 0 is the padding symbol.
const std::vector<std::string> &SymbolTable();

// Id of `symbol`, or throws kUnknownSymbolId.
int SymbolId(const std::string &symbol);

inline constexpr int kPadId = 0;
inline constexpr const char *kPadSymbol = "pad";
inline constexpr const char *kSeparatorSymbol = "sp";

PhonetizeResult Phonetize(const DiacriticText &text);

// Convenience: Parse + Phonetize.
PhonetizeResult PhonetizeUtf8(const std::string &utf8);

// Minimal UTF-8 codec used by the text pipeline.  Decode throws
// kRejectedCodepoint on malformed bytes.
std::vector<char32_t> DecodeUtf8(const std::string &s);
std::string EncodeUtf8(const std::vector<char32_t> &cps);

}  // namespace aratts

#endif  // ARATTS_PHONETIZER_H_
