#include "surgbench/stemmer.hpp"

namespace surgbench {

namespace {

bool is_vowel_at(const std::string& w, std::size_t i) {
  const char c = w[i];
  if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') return true;
  if (c == 'y') return i > 0 && !is_vowel_at(w, i - 1);
  return false;
}

// Number of VC sequences in w[0..end).
int measure(const std::string& w, std::size_t end) {
  int m = 0;
  bool prev_vowel = false;
  for (std::size_t i = 0; i < end; ++i) {
    const bool v = is_vowel_at(w, i);
    if (prev_vowel && !v) ++m;
    prev_vowel = v;
  }
  return m;
}

bool has_vowel(const std::string& w, std::size_t end) {
  for (std::size_t i = 0; i < end; ++i) {
    if (is_vowel_at(w, i)) return true;
  }
  return false;
}

bool ends_with(const std::string& w, std::string_view suffix) {
  return w.size() >= suffix.size() &&
         w.compare(w.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool double_consonant(const std::string& w) {
  const std::size_t n = w.size();
  if (n < 2 || w[n - 1] != w[n - 2]) return false;
  return !is_vowel_at(w, n - 1);
}

// consonant-vowel-consonant, final consonant not w/x/y
bool cvc(const std::string& w) {
  const std::size_t n = w.size();
  if (n < 3) return false;
  if (is_vowel_at(w, n - 3) || !is_vowel_at(w, n - 2) || is_vowel_at(w, n - 1)) return false;
  const char c = w[n - 1];
  return c != 'w' && c != 'x' && c != 'y';
}

// Replaces `suffix` with `repl` when the stem measure condition holds.
bool replace_if(std::string& w, std::string_view suffix, std::string_view repl, int min_m) {
  if (!ends_with(w, suffix)) return false;
  const std::size_t stem_len = w.size() - suffix.size();
  if (measure(w, stem_len) > min_m) {
    w.resize(stem_len);
    w.append(repl);
    return true;
  }
  return true;  // matched the suffix even if the rule did not fire
}

}  // namespace

std::string porter_stem(std::string_view word) {
  std::string w(word);
  if (w.size() <= 2) return w;

  // Step 1a
  if (ends_with(w, "sses")) {
    w.resize(w.size() - 2);
  } else if (ends_with(w, "ies")) {
    w.resize(w.size() - 2);
  } else if (ends_with(w, "ss")) {
    // keep
  } else if (ends_with(w, "s")) {
    w.resize(w.size() - 1);
  }

  // Step 1b
  bool step1b_extra = false;
  if (ends_with(w, "eed")) {
    if (measure(w, w.size() - 3) > 0) w.resize(w.size() - 1);
  } else if (ends_with(w, "ed") && has_vowel(w, w.size() - 2)) {
    w.resize(w.size() - 2);
    step1b_extra = true;
  } else if (ends_with(w, "ing") && has_vowel(w, w.size() - 3)) {
    w.resize(w.size() - 3);
    step1b_extra = true;
  }
  if (step1b_extra) {
    if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz")) {
      w.push_back('e');
    } else if (double_consonant(w) && !ends_with(w, "l") && !ends_with(w, "s") &&
               !ends_with(w, "z")) {
      w.resize(w.size() - 1);
    } else if (measure(w, w.size()) == 1 && cvc(w)) {
      w.push_back('e');
    }
  }

  // Step 1c
  if (ends_with(w, "y") && has_vowel(w, w.size() - 1)) {
    w[w.size() - 1] = 'i';
  }

  // Step 2
  static const std::pair<std::string_view, std::string_view> kStep2[] = {
      {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"}, {"anci", "ance"},
      {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},   {"entli", "ent"},
      {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
      {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
      {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},   {"biliti", "ble"},
  };
  for (const auto& [suf, rep] : kStep2) {
    if (ends_with(w, suf)) {
      replace_if(w, suf, rep, 0);
      break;
    }
  }

  // Step 3
  static const std::pair<std::string_view, std::string_view> kStep3[] = {
      {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
      {"ical", "ic"},  {"ful", ""},   {"ness", ""},
  };
  for (const auto& [suf, rep] : kStep3) {
    if (ends_with(w, suf)) {
      replace_if(w, suf, rep, 0);
      break;
    }
  }

  // Step 4
  static const std::string_view kStep4[] = {
      "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment",
      "ent", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
  };
  for (const auto& suf : kStep4) {
    if (!ends_with(w, suf)) continue;
    const std::size_t stem_len = w.size() - suf.size();
    if (measure(w, stem_len) > 1) {
      w.resize(stem_len);
    }
    break;
  }
  if (ends_with(w, "ion")) {
    const std::size_t stem_len = w.size() - 3;
    if (measure(w, stem_len) > 1 && stem_len > 0 &&
        (w[stem_len - 1] == 's' || w[stem_len - 1] == 't')) {
      w.resize(stem_len);
    }
  }

  // Step 5a
  if (ends_with(w, "e")) {
    const std::size_t stem_len = w.size() - 1;
    const int m = measure(w, stem_len);
    if (m > 1) {
      w.resize(stem_len);
    } else if (m == 1) {
      std::string stem = w.substr(0, stem_len);
      if (!cvc(stem)) w.resize(stem_len);
    }
  }

  // Step 5b
  if (measure(w, w.size()) > 1 && double_consonant(w) && ends_with(w, "l")) {
    w.resize(w.size() - 1);
  }

  return w;
}

}  // namespace surgbench
