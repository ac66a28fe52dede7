#include "prism/log.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace prism {

namespace {

LogLevel level_from_env() {
    const char* env = std::getenv("PRISM_LOG");
    if (env == nullptr) return LogLevel::kError;
    if (std::strcmp(env, "debug") == 0) return LogLevel::kDebug;
    if (std::strcmp(env, "info") == 0) return LogLevel::kInfo;
    return LogLevel::kError;
}

std::atomic<LogLevel>& level_store() {
    static std::atomic<LogLevel> level{level_from_env()};
    return level;
}

void emit(const char* tag, const std::string& message) {
    std::fprintf(stderr, "[prism:%s] %s\n", tag, message.c_str());
}

} // namespace

LogLevel log_level() { return level_store().load(); }

void set_log_level(LogLevel level) { level_store().store(level); }

void log_error(const std::string& message) {
    if (log_level() >= LogLevel::kError) emit("error", message);
}

void log_info(const std::string& message) {
    if (log_level() >= LogLevel::kInfo) emit("info", message);
}

void log_debug(const std::string& message) {
    if (log_level() >= LogLevel::kDebug) emit("debug", message);
}

} // namespace prism
