#pragma once

namespace iontrap {
inline constexpr const char* kVersion = "0.1.0";
}
