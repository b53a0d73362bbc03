#pragma once

namespace scr {

// Embedded in every output artifact. Must stay constant within a build so
// repeated runs produce byte-identical files.
inline constexpr const char* kVersion = "scrlab 0.1.0";

}  // namespace scr
