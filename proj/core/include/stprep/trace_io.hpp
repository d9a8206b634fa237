#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "stprep/frame_trace.hpp"

namespace stprep {

// Trace files are UTF-8 text with LF line endings: line 1 is the header
// `frame_rate_hz=<float> start_s=<float>`, every following line holds one
// activation value in [0, 1]. Values are written with six decimals, so a
// write/read round trip reproduces a trace up to 6-decimal rounding.

FrameTrace read_trace(std::istream& in, const std::string& name = "<stream>");
FrameTrace read_trace(const std::filesystem::path& path);

void write_trace(const FrameTrace& trace, std::ostream& out);
void write_trace(const FrameTrace& trace, const std::filesystem::path& path);

}  // namespace stprep
