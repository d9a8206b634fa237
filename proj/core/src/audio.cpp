#include "stprep/audio.hpp"

#include <cstring>
#include <fstream>
#include <string>

#include "stprep/errors.hpp"

namespace stprep {
namespace {

constexpr std::uint16_t kFormatPcm = 1;

struct Reader {
  std::ifstream in;
  std::string name;

  explicit Reader(const std::filesystem::path& path)
      : in(path, std::ios::binary), name(path.string()) {
    if (!in) throw IoError("cannot open WAV file: " + name);
  }

  void read_bytes(void* dst, std::size_t n, const char* what) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
      throw FormatError(name + ": truncated " + what);
  }

  std::uint32_t read_u32(const char* what) {
    unsigned char b[4];
    read_bytes(b, 4, what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }

  std::uint16_t read_u16(const char* what) {
    unsigned char b[2];
    read_bytes(b, 2, what);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }

  std::string read_tag(const char* what) {
    char tag[4];
    read_bytes(tag, 4, what);
    return std::string(tag, 4);
  }

  void skip(std::uint32_t n) {
    in.seekg(n, std::ios::cur);
    if (!in) throw FormatError(name + ": truncated chunk body");
  }
};

}  // namespace

AudioBuffer read_wav(const std::filesystem::path& path) {
  Reader r(path);
  if (r.read_tag("RIFF header") != "RIFF")
    throw FormatError(r.name + ": missing RIFF chunk");
  r.read_u32("RIFF size");
  if (r.read_tag("WAVE id") != "WAVE")
    throw FormatError(r.name + ": RIFF form is not WAVE");

  bool have_fmt = false;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::vector<char> data;

  while (true) {
    char tag[4];
    r.in.read(tag, 4);
    if (r.in.gcount() == 0) break;  // end of file
    if (r.in.gcount() != 4) throw FormatError(r.name + ": truncated chunk header");
    const std::string id(tag, 4);
    const std::uint32_t size = r.read_u32("chunk size");

    if (id == "fmt ") {
      if (size < 16) throw FormatError(r.name + ": fmt chunk too small");
      const std::uint16_t format = r.read_u16("fmt format");
      channels = r.read_u16("fmt channels");
      sample_rate = r.read_u32("fmt sample rate");
      r.read_u32("fmt byte rate");
      r.read_u16("fmt block align");
      const std::uint16_t bits = r.read_u16("fmt bits per sample");
      if (size > 16) r.skip(size - 16);
      if (format != kFormatPcm)
        throw FormatError(r.name + ": fmt chunk: unsupported format " +
                          std::to_string(format) + " (PCM16 only)");
      if (bits != 16)
        throw FormatError(r.name + ": fmt chunk: unsupported bit depth " +
                          std::to_string(bits) + " (PCM16 only)");
      if (channels != 1 && channels != 2)
        throw FormatError(r.name + ": fmt chunk: unsupported channel count " +
                          std::to_string(channels));
      if (sample_rate < 8000 || sample_rate > 48000)
        throw FormatError(r.name + ": fmt chunk: sample rate " +
                          std::to_string(sample_rate) + " outside 8000..48000");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw FormatError(r.name + ": data chunk before fmt chunk");
      data.resize(size);
      if (size > 0) r.read_bytes(data.data(), size, "data chunk");
    } else {
      r.skip(size);
    }
    if (size % 2 == 1) {  // chunks are word-aligned
      char pad;
      r.in.read(&pad, 1);
      if (r.in.gcount() != 1 && !r.in.eof())
        throw FormatError(r.name + ": truncated chunk padding");
      if (r.in.eof()) break;
    }
  }
  if (!have_fmt) throw FormatError(r.name + ": missing fmt chunk");

  const std::size_t bytes_per_frame = 2u * channels;
  if (data.size() % bytes_per_frame != 0)
    throw FormatError(r.name + ": data chunk size not a whole number of frames");

  AudioBuffer audio;
  audio.sample_rate_hz = sample_rate;
  const std::size_t frames = data.size() / bytes_per_frame;
  audio.samples.resize(frames);
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      const std::size_t off = i * bytes_per_frame + 2u * c;
      const auto raw = static_cast<std::int16_t>(bytes[off] | (bytes[off + 1] << 8));
      acc += static_cast<double>(raw) / 32768.0;
    }
    audio.samples[i] = acc / channels;
  }
  return audio;
}

}  // namespace stprep
