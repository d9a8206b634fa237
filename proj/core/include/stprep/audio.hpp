#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace stprep {

// Mono audio normalized to [-1, 1]. Stereo sources are downmixed by channel
// averaging before construction.
struct AudioBuffer {
  std::uint32_t sample_rate_hz = 16000;
  std::vector<double> samples;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

// Decodes a RIFF/WAVE file: PCM 16-bit little-endian, 1 or 2 channels,
// 8000..48000 Hz. Samples are scaled by 1/32768. Throws IoError if the file
// cannot be opened and FormatError (naming the offending chunk) for
// anything that is not plain PCM16.
AudioBuffer read_wav(const std::filesystem::path& path);

}  // namespace stprep
