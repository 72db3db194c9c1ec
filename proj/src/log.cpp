#include "bip/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace bip::log {
namespace {

Level parse_env() {
    const char* v = std::getenv("BIPKIT_LOG");
    if (!v) return Level::warn;
    std::string s(v);
    if (s == "debug") return Level::debug;
    if (s == "info") return Level::info;
    if (s == "warn") return Level::warn;
    if (s == "error") return Level::error;
    if (s == "off") return Level::off;
    return Level::warn;
}

Level g_level = parse_env();
std::mutex g_mutex;

void emit(Level lv, const char* tag, const std::string& msg) {
    if (lv < g_level) return;
    std::lock_guard<std::mutex> lock(g_mutex);
    std::cerr << "[" << tag << "] " << msg << "\n";
}

} // namespace

Level level() { return g_level; }
void set_level(Level lv) { g_level = lv; }

void debug(const std::string& msg) { emit(Level::debug, "debug", msg); }
void info(const std::string& msg) { emit(Level::info, "info", msg); }
void warn(const std::string& msg) { emit(Level::warn, "warn", msg); }
void error(const std::string& msg) { emit(Level::error, "error", msg); }

} // namespace bip::log
