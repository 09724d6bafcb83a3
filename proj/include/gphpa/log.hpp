#pragma once

// Leveled logging to stderr. The threshold comes from PHPA_LOG
// (error, warn, info, debug; default info) and is read once.

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>

namespace gphpa::log {

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

inline Level parse_level(const char* text, Level fallback = Level::kInfo) {
  if (text == nullptr) return fallback;
  const std::string s(text);
  if (s == "error" || s == "0") return Level::kError;
  if (s == "warn" || s == "warning" || s == "1") return Level::kWarn;
  if (s == "info" || s == "2") return Level::kInfo;
  if (s == "debug" || s == "3") return Level::kDebug;
  return fallback;
}

inline Level& threshold() {
  static Level level = parse_level(std::getenv("PHPA_LOG"));
  return level;
}

inline bool enabled(Level l) { return static_cast<int>(l) <= static_cast<int>(threshold()); }

inline const char* tag(Level l) {
  switch (l) {
    case Level::kError: return "error";
    case Level::kWarn: return "warn";
    case Level::kInfo: return "info";
    case Level::kDebug: return "debug";
  }
  return "?";
}

template <typename... Args>
void write(Level l, const Args&... args) {
  if (!enabled(l)) return;
  std::ostringstream os;
  os << "[phpa " << tag(l) << "] ";
  (os << ... << args);
  os << '\n';
  std::cerr << os.str();
}

template <typename... Args>
void error(const Args&... args) { write(Level::kError, args...); }
template <typename... Args>
void warn(const Args&... args) { write(Level::kWarn, args...); }
template <typename... Args>
void info(const Args&... args) { write(Level::kInfo, args...); }
template <typename... Args>
void debug(const Args&... args) { write(Level::kDebug, args...); }

}  // namespace gphpa::log
