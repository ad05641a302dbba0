#pragma once

namespace truthlab {

inline constexpr const char* kArtifactVersion = "0.1.0";

}
