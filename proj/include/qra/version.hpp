#pragma once

namespace qra {

inline constexpr const char* version = "0.1.0";

} // namespace qra
