#include "stprep/trace_io.hpp"

#include <fstream>
#include <sstream>

#include "stprep/errors.hpp"
#include "stprep/numfmt.hpp"

namespace stprep {
namespace {

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

double header_field(std::string_view token, std::string_view key,
                    const std::string& name) {
  if (token.size() <= key.size() + 1 || token.substr(0, key.size()) != key ||
      token[key.size()] != '=')
    throw FormatError(name + ": malformed trace header (expected " +
                      std::string(key) + "=<float>)");
  const auto value = parse_double(token.substr(key.size() + 1));
  if (!value)
    throw FormatError(name + ": malformed trace header value for " +
                      std::string(key));
  return *value;
}

}  // namespace

FrameTrace read_trace(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line))
    throw FormatError(name + ": missing trace header");
  std::string_view header = strip_cr(line);
  const auto space = header.find(' ');
  if (space == std::string_view::npos)
    throw FormatError(name + ": missing trace header");
  FrameTrace trace;
  trace.frame_rate_hz = header_field(header.substr(0, space), "frame_rate_hz", name);
  trace.start_s = header_field(header.substr(space + 1), "start_s", name);
  if (!(trace.frame_rate_hz > 0.0))
    throw FormatError(name + ": frame_rate_hz must be positive");
  if (!(trace.start_s >= 0.0))
    throw FormatError(name + ": start_s must be >= 0");

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = strip_cr(line);
    if (text.empty() && in.eof()) break;  // trailing newline
    const auto value = parse_double(text);
    if (!value)
      throw FormatError(name + ": line " + std::to_string(line_no) +
                        ": not a number");
    if (!(*value >= 0.0) || !(*value <= 1.0))
      throw FormatError(name + ": line " + std::to_string(line_no) +
                        ": value outside [0, 1]");
    trace.values.push_back(*value);
  }
  return trace;
}

FrameTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trace file: " + path.string());
  return read_trace(in, path.string());
}

void write_trace(const FrameTrace& trace, std::ostream& out) {
  out << "frame_rate_hz=" << format_double(trace.frame_rate_hz)
      << " start_s=" << format_double(trace.start_s) << "\n";
  for (double v : trace.values) out << format_fixed(v, 6) << "\n";
}

void write_trace(const FrameTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write trace file: " + path.string());
  write_trace(trace, out);
  out.flush();
  if (!out) throw IoError("failed writing trace file: " + path.string());
}

}  // namespace stprep
