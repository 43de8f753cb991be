#pragma once

namespace lvsk {
inline constexpr const char* kVersion = "0.1.0";
}
