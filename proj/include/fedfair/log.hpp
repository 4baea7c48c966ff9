#pragma once
// Tiny stderr logger gated by the FEDFAIR_LOG environment variable
// (quiet, warn, info, debug; default warn).

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace fedfair::log {

enum class Level { quiet = 0, warn = 1, info = 2, debug = 3 };

inline Level threshold() {
    static const Level value = [] {
        const char* env = std::getenv("FEDFAIR_LOG");
        if (env == nullptr) return Level::warn;
        if (std::strcmp(env, "quiet") == 0 || std::strcmp(env, "0") == 0) return Level::quiet;
        if (std::strcmp(env, "info") == 0 || std::strcmp(env, "2") == 0) return Level::info;
        if (std::strcmp(env, "debug") == 0 || std::strcmp(env, "3") == 0) return Level::debug;
        return Level::warn;
    }();
    return value;
}

inline void emit(Level level, const char* tag, const std::string& msg) {
    if (static_cast<int>(level) > static_cast<int>(threshold())) return;
    std::fprintf(stderr, "[fedfair %s] %s\n", tag, msg.c_str());
}

inline void warn(const std::string& msg) { emit(Level::warn, "warn", msg); }
inline void info(const std::string& msg) { emit(Level::info, "info", msg); }
inline void debug(const std::string& msg) { emit(Level::debug, "debug", msg); }

}  // namespace fedfair::log
