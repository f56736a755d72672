#include "owr/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace owr::log {

namespace {

Level parse_env() {
    const char* raw = std::getenv("OPENWORLD_LOG");
    if (raw == nullptr) return Level::Warn;
    if (std::strcmp(raw, "error") == 0) return Level::Error;
    if (std::strcmp(raw, "warn") == 0) return Level::Warn;
    if (std::strcmp(raw, "info") == 0) return Level::Info;
    if (std::strcmp(raw, "debug") == 0) return Level::Debug;
    return Level::Warn;
}

Level g_level = parse_env();

const char* tag(Level lv) {
    switch (lv) {
        case Level::Error: return "error";
        case Level::Warn: return "warn";
        case Level::Info: return "info";
        case Level::Debug: return "debug";
    }
    return "?";
}

} // namespace

Level level() { return g_level; }
void set_level(Level lv) { g_level = lv; }

void write(Level lv, const std::string& msg) {
    if (static_cast<int>(lv) > static_cast<int>(g_level)) return;
    std::fprintf(stderr, "[owr %s] %s\n", tag(lv), msg.c_str());
}

} // namespace owr::log
