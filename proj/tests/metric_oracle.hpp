/* Copyright 2026 The ATD Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef ATD_TESTS_METRIC_ORACLE_HPP_
#define ATD_TESTS_METRIC_ORACLE_HPP_

// Brute-force DER/WER scorer written against the raw bytes and the class
// table fixture only. It shares no code with the library evaluator, so the
// two can be compared on random instances. Inputs must be canonical text:
// letters each followed by its marks (shadda first), single spaces.

#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace oracle {

inline std::vector<std::uint32_t> DecodeUtf8(const std::string& s) {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < s.size();) {
    const auto b = static_cast<unsigned char>(s[i]);
    int n = b < 0x80 ? 1 : (b >> 5) == 6 ? 2 : (b >> 4) == 14 ? 3 : 4;
    std::uint32_t cp = n == 1 ? b : n == 2 ? (b & 0x1F) : n == 3 ? (b & 0x0F) : (b & 0x07);
    for (int k = 1; k < n; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    out.push_back(cp);
    i += static_cast<std::size_t>(n);
  }
  return out;
}

inline std::string EncodeUtf8(const std::vector<std::uint32_t>& cps) {
  std::string out;
  for (auto cp : cps) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }
  return out;
}

// Mark string -> class id, read from the fixture TSV.
struct Table {
  std::map<std::vector<std::uint32_t>, int> by_marks;
  std::vector<std::vector<std::uint32_t>> marks;  // by id

  static Table Load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing fixture " + path);
    Table t;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      std::stringstream row(line);
      std::string id, name, cps;
      std::getline(row, id, '\t');
      std::getline(row, name, '\t');
      std::getline(row, cps);
      std::vector<std::uint32_t> m;
      std::stringstream parts(cps);
      std::string tok;
      while (parts >> tok) m.push_back(static_cast<std::uint32_t>(std::stoul(tok.substr(2), nullptr, 16)));
      t.by_marks[m] = std::stoi(id);
      t.marks.push_back(m);
    }
    return t;
  }
};

inline bool IsMark(std::uint32_t cp) { return cp >= 0x064B && cp <= 0x0652; }

// Words of per-letter class ids.
inline std::vector<std::vector<int>> Words(const std::string& text, const Table& table) {
  const auto cps = DecodeUtf8(text);
  std::vector<std::vector<int>> words(1);
  for (std::size_t i = 0; i < cps.size();) {
    if (cps[i] == 0x20) {
      words.emplace_back();
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    std::vector<std::uint32_t> run;
    while (j < cps.size() && IsMark(cps[j])) run.push_back(cps[j++]);
    words.back().push_back(table.by_marks.at(run));
    i = j;
  }
  return words;
}

struct Counts {
  std::size_t pos_ce = 0, err_ce = 0, pos_noce = 0, err_noce = 0;
  std::size_t words = 0, wrong_ce = 0, words_noce = 0, wrong_noce = 0;

  double DerCe() const { return 100.0 * static_cast<double>(err_ce) / static_cast<double>(pos_ce); }
  double WerCe() const { return 100.0 * static_cast<double>(wrong_ce) / static_cast<double>(words); }
  double DerNoCe() const { return 100.0 * static_cast<double>(err_noce) / static_cast<double>(pos_noce); }
  double WerNoCe() const {
    return 100.0 * static_cast<double>(wrong_noce) / static_cast<double>(words_noce);
  }
};

inline void Score(const std::string& ref, const std::string& hyp, const Table& table, Counts& c) {
  const auto r = Words(ref, table);
  const auto h = Words(hyp, table);
  if (r.size() != h.size()) throw std::runtime_error("word counts differ");
  for (std::size_t w = 0; w < r.size(); ++w) {
    if (r[w].size() != h[w].size()) throw std::runtime_error("word lengths differ");
    bool bad_ce = false;
    bool bad_noce = false;
    std::size_t counted_noce = 0;
    for (std::size_t k = 0; k < r[w].size(); ++k) {
      const bool miss = r[w][k] != h[w][k];
      ++c.pos_ce;
      c.err_ce += miss;
      bad_ce |= miss;
      if (k + 1 < r[w].size()) {
        ++c.pos_noce;
        ++counted_noce;
        c.err_noce += miss;
        bad_noce |= miss;
      }
    }
    ++c.words;
    c.wrong_ce += bad_ce;
    if (counted_noce) {
      ++c.words_noce;
      c.wrong_noce += bad_noce;
    }
  }
}

// A random canonical (reference, hypothesis) pair; `flip` is the per-letter
// chance that the hypothesis label differs.
inline std::pair<std::string, std::string> RandomPair(std::mt19937_64& rng, const Table& table,
                                                      double flip, int min_word_len = 1) {
  std::uniform_int_distribution<int> words(1, 8);
  std::uniform_int_distribution<int> len(min_word_len, 7);
  std::uniform_int_distribution<int> letter(0x0628, 0x063A);
  std::uniform_int_distribution<int> cls(0, static_cast<int>(table.marks.size()) - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::uint32_t> ref;
  std::vector<std::uint32_t> hyp;
  const int n = words(rng);
  for (int w = 0; w < n; ++w) {
    if (w) {
      ref.push_back(0x20);
      hyp.push_back(0x20);
    }
    const int l = len(rng);
    for (int k = 0; k < l; ++k) {
      const auto cp = static_cast<std::uint32_t>(letter(rng));
      const int rc = cls(rng);
      int hc = rc;
      if (unit(rng) < flip) {
        while (hc == rc) hc = cls(rng);
      }
      ref.push_back(cp);
      hyp.push_back(cp);
      for (auto m : table.marks[static_cast<std::size_t>(rc)]) ref.push_back(m);
      for (auto m : table.marks[static_cast<std::size_t>(hc)]) hyp.push_back(m);
    }
  }
  return {EncodeUtf8(ref), EncodeUtf8(hyp)};
}

}  // namespace oracle

#endif  // ATD_TESTS_METRIC_ORACLE_HPP_
