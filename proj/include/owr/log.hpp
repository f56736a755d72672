#pragma once

#include <string>

namespace owr::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Current verbosity, initialized once from the OPENWORLD_LOG environment
/// variable (error|warn|info|debug). Defaults to warn.
Level level();
void set_level(Level lv);

void write(Level lv, const std::string& msg);

inline void error(const std::string& msg) { write(Level::Error, msg); }
inline void warn(const std::string& msg) { write(Level::Warn, msg); }
inline void info(const std::string& msg) { write(Level::Info, msg); }
inline void debug(const std::string& msg) { write(Level::Debug, msg); }

} // namespace owr::log
