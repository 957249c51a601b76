#pragma once

#include <functional>
#include <string>

namespace zvcv {

using WarningSink = std::function<void(const std::string&)>;

/// Emit a warning through the installed sink (stderr by default).
void warn(const std::string& message);

/// Replace the warning sink; returns the previous one. Pass an empty
/// function to silence warnings.
WarningSink set_warning_sink(WarningSink sink);

}  // namespace zvcv
