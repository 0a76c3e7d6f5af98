// Porter (1980) suffix stripping, following the structure of the author's
// reference C implementation (including its bli->ble and logi->log rules).

#include <string>
#include <string_view>

#include "stancekit/text_pipeline.hpp"

namespace stancekit {
namespace {

class Stemmer {
 public:
  explicit Stemmer(std::string_view word) : b_(word), k_(static_cast<int>(word.size()) - 1) {}

  std::string run() {
    if (k_ <= 1) return b_;
    step1ab();
    if (k_ > 0) {
      step1c();
      step2();
      step3();
      step4();
      step5();
    }
    return b_.substr(0, static_cast<std::size_t>(k_ + 1));
  }

 private:
  char at(int i) const { return b_[static_cast<std::size_t>(i)]; }

  bool cons(int i) const {
    switch (at(i)) {
      case 'a':
      case 'e':
      case 'i':
      case 'o':
      case 'u':
        return false;
      case 'y':
        return i == 0 ? true : !cons(i - 1);
      default:
        return true;
    }
  }

  // Number of vowel-consonant sequences in b[0..j].
  int m() const {
    int n = 0;
    int i = 0;
    while (true) {
      if (i > j_) return n;
      if (!cons(i)) break;
      ++i;
    }
    ++i;
    while (true) {
      while (true) {
        if (i > j_) return n;
        if (cons(i)) break;
        ++i;
      }
      ++i;
      ++n;
      while (true) {
        if (i > j_) return n;
        if (!cons(i)) break;
        ++i;
      }
      ++i;
    }
  }

  bool vowel_in_stem() const {
    for (int i = 0; i <= j_; ++i) {
      if (!cons(i)) return true;
    }
    return false;
  }

  bool double_consonant(int j) const { return j >= 1 && at(j) == at(j - 1) && cons(j); }

  // consonant-vowel-consonant ending at i, last not w, x or y.
  bool cvc(int i) const {
    if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
    const char ch = at(i);
    return ch != 'w' && ch != 'x' && ch != 'y';
  }

  bool ends(std::string_view s) {
    const int len = static_cast<int>(s.size());
    if (len > k_ + 1) return false;
    if (std::string_view(b_).substr(static_cast<std::size_t>(k_ - len + 1), s.size()) != s) return false;
    j_ = k_ - len;
    return true;
  }

  void set_to(std::string_view s) {
    b_.replace(static_cast<std::size_t>(j_ + 1), static_cast<std::size_t>(k_ - j_), s);
    k_ = j_ + static_cast<int>(s.size());
  }

  void replace_if_measured(std::string_view s) {
    if (m() > 0) set_to(s);
  }

  void step1ab() {
    if (at(k_) == 's') {
      if (ends("sses")) {
        k_ -= 2;
      } else if (ends("ies")) {
        set_to("i");
      } else if (at(k_ - 1) != 's') {
        --k_;
      }
    }
    if (ends("eed")) {
      if (m() > 0) --k_;
    } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
      k_ = j_;
      if (ends("at")) {
        set_to("ate");
      } else if (ends("bl")) {
        set_to("ble");
      } else if (ends("iz")) {
        set_to("ize");
      } else if (double_consonant(k_)) {
        --k_;
        const char ch = at(k_);
        if (ch == 'l' || ch == 's' || ch == 'z') ++k_;
      } else if (m() == 1 && cvc(k_)) {
        j_ = k_;
        set_to("e");
      }
    }
    b_.resize(static_cast<std::size_t>(k_ + 1));
  }

  void step1c() {
    if (ends("y") && vowel_in_stem()) b_[static_cast<std::size_t>(k_)] = 'i';
  }

  // Tries the (suffix, replacement) pairs in order; the first suffix that
  // matches ends the search whether or not the measure allows replacing.
  template <std::size_t N>
  void first_rule(const std::pair<std::string_view, std::string_view> (&rules)[N]) {
    for (const auto& [suffix, repl] : rules) {
      if (ends(suffix)) {
        replace_if_measured(repl);
        return;
      }
    }
  }

  void step2() {
    switch (at(k_ - 1)) {
      case 'a': {
        static const std::pair<std::string_view, std::string_view> r[] = {{"ational", "ate"}, {"tional", "tion"}};
        first_rule(r);
        break;
      }
      case 'c': {
        static const std::pair<std::string_view, std::string_view> r[] = {{"enci", "ence"}, {"anci", "ance"}};
        first_rule(r);
        break;
      }
      case 'e': {
        static const std::pair<std::string_view, std::string_view> r[] = {{"izer", "ize"}};
        first_rule(r);
        break;
      }
      case 'l': {
        static const std::pair<std::string_view, std::string_view> r[] = {
            {"bli", "ble"}, {"alli", "al"}, {"entli", "ent"}, {"eli", "e"}, {"ousli", "ous"}};
        first_rule(r);
        break;
      }
      case 'o': {
        static const std::pair<std::string_view, std::string_view> r[] = {
            {"ization", "ize"}, {"ation", "ate"}, {"ator", "ate"}};
        first_rule(r);
        break;
      }
      case 's': {
        static const std::pair<std::string_view, std::string_view> r[] = {
            {"alism", "al"}, {"iveness", "ive"}, {"fulness", "ful"}, {"ousness", "ous"}};
        first_rule(r);
        break;
      }
      case 't': {
        static const std::pair<std::string_view, std::string_view> r[] = {
            {"aliti", "al"}, {"iviti", "ive"}, {"biliti", "ble"}};
        first_rule(r);
        break;
      }
      case 'g': {
        static const std::pair<std::string_view, std::string_view> r[] = {{"logi", "log"}};
        first_rule(r);
        break;
      }
      default:
        break;
    }
  }

  void step3() {
    switch (at(k_)) {
      case 'e': {
        static const std::pair<std::string_view, std::string_view> r[] = {
            {"icate", "ic"}, {"ative", ""}, {"alize", "al"}};
        first_rule(r);
        break;
      }
      case 'i': {
        static const std::pair<std::string_view, std::string_view> r[] = {{"iciti", "ic"}};
        first_rule(r);
        break;
      }
      case 'l': {
        static const std::pair<std::string_view, std::string_view> r[] = {{"ical", "ic"}, {"ful", ""}};
        first_rule(r);
        break;
      }
      case 's': {
        static const std::pair<std::string_view, std::string_view> r[] = {{"ness", ""}};
        first_rule(r);
        break;
      }
      default:
        break;
    }
  }

  bool ends_any(std::initializer_list<std::string_view> suffixes) {
    for (std::string_view s : suffixes) {
      if (ends(s)) return true;
    }
    return false;
  }

  void step4() {
    bool matched = false;
    switch (at(k_ - 1)) {
      case 'a':
        matched = ends("al");
        break;
      case 'c':
        matched = ends_any({"ance", "ence"});
        break;
      case 'e':
        matched = ends("er");
        break;
      case 'i':
        matched = ends("ic");
        break;
      case 'l':
        matched = ends_any({"able", "ible"});
        break;
      case 'n':
        matched = ends_any({"ant", "ement", "ment", "ent"});
        break;
      case 'o':
        matched = (ends("ion") && j_ >= 0 && (at(j_) == 's' || at(j_) == 't')) || ends("ou");
        break;
      case 's':
        matched = ends("ism");
        break;
      case 't':
        matched = ends_any({"ate", "iti"});
        break;
      case 'u':
        matched = ends("ous");
        break;
      case 'v':
        matched = ends("ive");
        break;
      case 'z':
        matched = ends("ize");
        break;
      default:
        break;
    }
    if (matched && m() > 1) k_ = j_;
  }

  void step5() {
    j_ = k_;
    if (at(k_) == 'e') {
      const int a = m();
      if (a > 1 || (a == 1 && !cvc(k_ - 1))) --k_;
    }
    if (at(k_) == 'l' && double_consonant(k_) && m() > 1) --k_;
  }

  std::string b_;
  int k_;
  int j_ = 0;
};

}  // namespace

std::string porter_stem(std::string_view word) {
  for (char c : word) {
    if (c < 'a' || c > 'z') return std::string(word);
  }
  return Stemmer(word).run();
}

}  // namespace stancekit
