// Minimal stderr logger. Level set once from DRIFTSIM_LOG_LEVEL (error|info|debug).
#pragma once

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace driftsim::log {

enum class Level { Error = 0, Info = 1, Debug = 2 };

inline Level level() {
    static Level lvl = [] {
        const char* env = std::getenv("DRIFTSIM_LOG_LEVEL");
        if (env == nullptr) return Level::Error;
        if (std::strcmp(env, "debug") == 0) return Level::Debug;
        if (std::strcmp(env, "info") == 0) return Level::Info;
        return Level::Error;
    }();
    return lvl;
}

inline void write(Level lvl, const char* tag, const char* fmt, va_list args) {
    if (lvl > level()) return;
    std::fprintf(stderr, "[%s] ", tag);
    std::vfprintf(stderr, fmt, args);
    std::fprintf(stderr, "\n");
}

inline void error(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    write(Level::Error, "error", fmt, args);
    va_end(args);
}

inline void info(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    write(Level::Info, "info", fmt, args);
    va_end(args);
}

inline void debug(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    write(Level::Debug, "debug", fmt, args);
    va_end(args);
}

}  // namespace driftsim::log
