#pragma once

namespace modlab {
inline constexpr const char* kVersion = "0.1.0";
}
