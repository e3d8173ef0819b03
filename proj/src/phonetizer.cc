// aratts/phonetizer.cc

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

#include "aratts/phonetizer.h"

#include <array>
#include <map>
#include <sstream>
#include <unordered_map>

namespace aratts {

namespace {

constexpr char32_t kFathatan = 0x064B;
constexpr char32_t kDammatan = 0x064C;
constexpr char32_t kKasratan = 0x064D;
constexpr char32_t kFatha = 0x064E;
constexpr char32_t kDamma = 0x064F;
constexpr char32_t kKasra = 0x0650;
constexpr char32_t kShadda = 0x0651;
constexpr char32_t kSukun = 0x0652;

constexpr char32_t kAlef = 0x0627;
constexpr char32_t kAlefMaksura = 0x0649;
constexpr char32_t kWaw = 0x0648;
constexpr char32_t kYeh = 0x064A;

bool IsDiacritic(char32_t c) { return c >= 0x064B && c <= 0x0652; }
bool IsLetter(char32_t c) {
  return (c >= 0x0621 && c <= 0x063A) || (c >= 0x0641 && c <= 0x064A);
}
bool IsPunct(char32_t c) {
  return c == U'.' || c == U',' || c == U'?' || c == U'!';
}
bool IsShortVowelOrTanween(char32_t c) { return c >= 0x064B && c <= 0x0650; }

struct LetterInfo {
  std::vector<int> symbol_ids;
  bool consonant;  // counts toward the undiacritized warning
};

struct Tables {
  std::vector<std::string> symbols;
  std::unordered_map<std::string, int> symbol_id;
  std::unordered_map<char32_t, LetterInfo> letters;
  std::unordered_map<char32_t, std::vector<int>> diacritic_syms;
  int aa, ii, uu;

  int Id(const std::string &s) const { return symbol_id.at(s); }

  Tables() {
    const char *ordered[] = {
        "pad", "sp", ".", ",", "?", "!",
        // consonants
        "e", "b", "t", "th", "j", "hh", "kh", "d", "dh", "r", "z", "s", "sh",
        "ss", "dd", "tt", "zz", "c", "gh", "f", "q", "k", "l", "m", "n", "h",
        "w", "y",
        // vowels
        "a", "u", "i", "aa", "ii", "uu"};
    for (const char *s : ordered) {
      symbol_id.emplace(s, static_cast<int>(symbols.size()));
      symbols.emplace_back(s);
    }
    aa = Id("aa");
    ii = Id("ii");
    uu = Id("uu");

    auto L = [&](char32_t cp, std::initializer_list<const char *> syms,
                 bool consonant = true) {
      LetterInfo info;
      for (const char *s : syms) info.symbol_ids.push_back(Id(s));
      info.consonant = consonant;
      letters.emplace(cp, std::move(info));
    };
    L(0x0621, {"e"});        // hamza
    L(0x0622, {"e", "aa"});  // alef madda
    L(0x0623, {"e"});        // alef hamza above
    L(0x0624, {"e"});        // waw hamza
    L(0x0625, {"e"});        // alef hamza below
    L(0x0626, {"e"});        // yeh hamza
    L(kAlef, {"aa"}, false);
    L(0x0628, {"b"});
    L(0x0629, {"t"});  // teh marbuta
    L(0x062A, {"t"});
    L(0x062B, {"th"});
    L(0x062C, {"j"});
    L(0x062D, {"hh"});
    L(0x062E, {"kh"});
    L(0x062F, {"d"});
    L(0x0630, {"dh"});
    L(0x0631, {"r"});
    L(0x0632, {"z"});
    L(0x0633, {"s"});
    L(0x0634, {"sh"});
    L(0x0635, {"ss"});
    L(0x0636, {"dd"});
    L(0x0637, {"tt"});
    L(0x0638, {"zz"});
    L(0x0639, {"c"});  // ain
    L(0x063A, {"gh"});
    L(0x0641, {"f"});
    L(0x0642, {"q"});
    L(0x0643, {"k"});
    L(0x0644, {"l"});
    L(0x0645, {"m"});
    L(0x0646, {"n"});
    L(0x0647, {"h"});
    L(kWaw, {"w"});
    L(kAlefMaksura, {"aa"}, false);
    L(kYeh, {"y"});

    auto D = [&](char32_t cp, std::initializer_list<const char *> syms) {
      std::vector<int> ids;
      for (const char *s : syms) ids.push_back(Id(s));
      diacritic_syms.emplace(cp, std::move(ids));
    };
    D(kFathatan, {"a", "n"});
    D(kDammatan, {"u", "n"});
    D(kKasratan, {"i", "n"});
    D(kFatha, {"a"});
    D(kDamma, {"u"});
    D(kKasra, {"i"});
    D(kShadda, {});
    D(kSukun, {});
  }
};

const Tables &T() {
  static const Tables tables;
  return tables;
}

std::string CpStr(char32_t c) {
  std::ostringstream os;
  os << "U+" << std::hex << std::uppercase << static_cast<uint32_t>(c);
  return os.str();
}

// Shared validation walk.  Positions in errors are codepoint indices.
// A diacritic must follow a letter, except that one short vowel or tanween
// mark may follow a shadda.
void Validate(const std::vector<char32_t> &cps) {
  enum class Prev { kOther, kLetter, kShadda };
  Prev state = Prev::kOther;
  for (size_t i = 0; i < cps.size(); ++i) {
    char32_t c = cps[i];
    if (c == U' ' || IsPunct(c)) {
      state = Prev::kOther;
    } else if (IsLetter(c)) {
      state = Prev::kLetter;
    } else if (IsDiacritic(c)) {
      bool ok = state == Prev::kLetter ||
                (state == Prev::kShadda && IsShortVowelOrTanween(c));
      if (!ok)
        Throw(ErrorKind::kOrphanDiacritic,
              "diacritic " + CpStr(c) + " at position " + std::to_string(i) +
                  " has no preceding consonant");
      state = c == kShadda ? Prev::kShadda : Prev::kOther;
    } else {
      Throw(ErrorKind::kRejectedCodepoint,
            "codepoint " + CpStr(c) + " at position " + std::to_string(i) +
                " is outside the accepted alphabet");
    }
  }
}

}  // namespace

const std::vector<std::string> &SymbolTable() { return T().symbols; }

int SymbolId(const std::string &symbol) {
  auto it = T().symbol_id.find(symbol);
  if (it == T().symbol_id.end())
    Throw(ErrorKind::kUnknownSymbolId, "unknown symbol \"" + symbol + "\"");
  return it->second;
}

std::vector<std::string> PhonemeSequence::Symbols() const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(T().symbols[static_cast<size_t>(id)]);
  return out;
}

DiacriticText DiacriticText::Parse(const std::string &utf8) {
  DiacriticText t;
  t.codepoints = DecodeUtf8(utf8);
  Validate(t.codepoints);
  return t;
}

PhonetizeResult Phonetize(const DiacriticText &text) {
  const Tables &tb = T();
  const auto &cps = text.codepoints;
  Validate(cps);

  PhonetizeResult out;
  auto &ids = out.sequence.ids;
  ids.reserve(cps.size() * 2);

  // Symbols of the letter most recently emitted, for shadda gemination.
  const std::vector<int> *prev_letter = nullptr;

  auto bare = [&](size_t i) {  // letter at i carries no diacritic of its own
    return i + 1 >= cps.size() || !IsDiacritic(cps[i + 1]);
  };

  size_t i = 0;
  while (i < cps.size()) {
    char32_t c = cps[i];
    if (c == U' ') {
      ids.push_back(tb.Id(kSeparatorSymbol));
      prev_letter = nullptr;
      ++i;
    } else if (IsPunct(c)) {
      ids.push_back(tb.Id(std::string(1, static_cast<char>(c))));
      prev_letter = nullptr;
      ++i;
    } else if (IsLetter(c)) {
      const LetterInfo &info = tb.letters.at(c);
      ids.insert(ids.end(), info.symbol_ids.begin(), info.symbol_ids.end());
      prev_letter = &info.symbol_ids;
      if (info.consonant && bare(i)) ++out.undiacritized;
      ++i;
    } else {  // diacritic
      switch (c) {
        case kShadda:
          if (prev_letter)
            ids.insert(ids.end(), prev_letter->begin(), prev_letter->end());
          ++i;
          break;
        case kFatha:
          if (i + 1 < cps.size() &&
              (cps[i + 1] == kAlef || cps[i + 1] == kAlefMaksura) &&
              bare(i + 1)) {
            ids.push_back(tb.aa);
            prev_letter = nullptr;
            i += 2;
          } else {
            ids.push_back(tb.Id("a"));
            ++i;
          }
          break;
        case kDamma:
          if (i + 1 < cps.size() && cps[i + 1] == kWaw && bare(i + 1)) {
            ids.push_back(tb.uu);
            prev_letter = nullptr;
            i += 2;
          } else {
            ids.push_back(tb.Id("u"));
            ++i;
          }
          break;
        case kKasra:
          if (i + 1 < cps.size() && cps[i + 1] == kYeh && bare(i + 1)) {
            ids.push_back(tb.ii);
            prev_letter = nullptr;
            i += 2;
          } else {
            ids.push_back(tb.Id("i"));
            ++i;
          }
          break;
        case kFathatan: {
          const auto &syms = tb.diacritic_syms.at(c);
          ids.insert(ids.end(), syms.begin(), syms.end());
          // silent alef/maksura seat
          if (i + 1 < cps.size() &&
              (cps[i + 1] == kAlef || cps[i + 1] == kAlefMaksura) &&
              bare(i + 1)) {
            prev_letter = nullptr;
            i += 2;
          } else {
            ++i;
          }
          break;
        }
        default: {  // dammatan, kasratan, sukun
          const auto &syms = tb.diacritic_syms.at(c);
          ids.insert(ids.end(), syms.begin(), syms.end());
          ++i;
          break;
        }
      }
    }
  }
  return out;
}

PhonetizeResult PhonetizeUtf8(const std::string &utf8) {
  return Phonetize(DiacriticText::Parse(utf8));
}

std::vector<char32_t> DecodeUtf8(const std::string &s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  size_t i = 0;
  const auto *b = reinterpret_cast<const unsigned char *>(s.data());
  auto bad = [&](size_t at) {
    Throw(ErrorKind::kRejectedCodepoint,
          "malformed UTF-8 at byte " + std::to_string(at));
  };
  while (i < s.size()) {
    unsigned char c = b[i];
    char32_t cp = 0;
    size_t len = 1;
    if (c < 0x80) {
      cp = c;
      len = 1;
    } else if ((c & 0xE0) == 0xC0) {
      cp = c & 0x1F;
      len = 2;
    } else if ((c & 0xF0) == 0xE0) {
      cp = c & 0x0F;
      len = 3;
    } else if ((c & 0xF8) == 0xF0) {
      cp = c & 0x07;
      len = 4;
    } else {
      bad(i);
    }
    if (i + len > s.size()) bad(i);
    for (size_t k = 1; k < len; ++k) {
      if ((b[i + k] & 0xC0) != 0x80) bad(i + k);
      cp = (cp << 6) | (b[i + k] & 0x3F);
    }
    if (len == 2 && cp < 0x80) bad(i);
    if (len == 3 && cp < 0x800) bad(i);
    if (len == 4 && cp < 0x10000) bad(i);
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) bad(i);
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string EncodeUtf8(const std::vector<char32_t> &cps) {
  std::string out;
  for (char32_t cp : cps) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

}  // namespace aratts
