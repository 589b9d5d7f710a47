#pragma once

namespace semicomp {
inline constexpr const char* kVersion = "0.1.0";
}
