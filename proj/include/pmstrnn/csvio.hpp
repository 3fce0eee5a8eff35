// csvio.hpp
// tiny csv assembly with stable number formatting, so identical runs produce
// byte-identical logs.

#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace pmstrnn {

inline std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvBuilder {
 public:
  CsvBuilder& cell(const std::string& s) {
    sep();
    out_ += s;
    return *this;
  }
  CsvBuilder& cell(const char* s) { return cell(std::string(s)); }
  CsvBuilder& cell(double v) { return cell(format_double(v)); }
  CsvBuilder& cell(int v) { return cell(std::to_string(v)); }
  CsvBuilder& cell(long v) { return cell(std::to_string(v)); }
  CsvBuilder& cell(size_t v) { return cell(std::to_string(v)); }
  // empty cell, used where a value is only present on some rows
  CsvBuilder& blank() {
    sep();
    return *this;
  }
  void endrow() {
    out_ += '\n';
    first_ = true;
  }
  const std::string& str() const { return out_; }

 private:
  void sep() {
    if (!first_) out_ += ',';
    first_ = false;
  }
  std::string out_;
  bool first_ = true;
};

}  // namespace pmstrnn
