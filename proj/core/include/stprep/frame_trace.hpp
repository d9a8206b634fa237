#pragma once

#include <cstddef>
#include <vector>

namespace stprep {

// Half-open interval [start_s, end_s) of audio time, in seconds.
struct TimeSpan {
  double start_s = 0.0;
  double end_s = 0.0;

  double length() const { return end_s - start_s; }

  friend bool operator==(const TimeSpan& a, const TimeSpan& b) {
    return a.start_s == b.start_s && a.end_s == b.end_s;
  }
};

// Per-frame speech activation probabilities, the segmenter's only view of
// the audio. Frame i covers [start_s + i/frame_rate_hz,
// start_s + (i+1)/frame_rate_hz).
struct FrameTrace {
  double frame_rate_hz = 100.0;
  double start_s = 0.0;
  std::vector<double> values;  // each in [0, 1]

  double frame_time(std::size_t i) const {
    return start_s + static_cast<double>(i) / frame_rate_hz;
  }
  double end_s() const { return frame_time(values.size()); }
  double duration_s() const { return static_cast<double>(values.size()) / frame_rate_hz; }

  // Throws ParameterError on non-positive frame rate, negative start time
  // or activation values outside [0, 1].
  void validate() const;
};

}  // namespace stprep
