#include "zvcv/log.hpp"

#include <iostream>
#include <mutex>

namespace zvcv {

namespace {

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

WarningSink& sink() {
    static WarningSink s = [](const std::string& msg) { std::cerr << "[warn] " << msg << '\n'; };
    return s;
}

}  // namespace

void warn(const std::string& message) {
    std::lock_guard lock(sink_mutex());
    if (sink()) sink()(message);
}

WarningSink set_warning_sink(WarningSink s) {
    std::lock_guard lock(sink_mutex());
    WarningSink previous = std::move(sink());
    sink() = std::move(s);
    return previous;
}

}  // namespace zvcv
