#pragma once

namespace paqkit {

inline constexpr const char* version_string = "0.1.0";

}
