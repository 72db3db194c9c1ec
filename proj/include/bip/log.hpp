#pragma once
#include <string>

namespace bip::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

// Level comes from the BIPKIT_LOG env var (debug|info|warn|error|off), default warn.
Level level();
void set_level(Level lv);

void debug(const std::string& msg);
void info(const std::string& msg);
void warn(const std::string& msg);
void error(const std::string& msg);

} // namespace bip::log
