#pragma once

namespace cardsort {

inline constexpr const char* kVersion = "0.1.0";

} // namespace cardsort
