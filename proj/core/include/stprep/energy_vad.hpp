#pragma once

#include "stprep/audio.hpp"
#include "stprep/frame_trace.hpp"

namespace stprep {

// Built-in energy activation source. Stands in for an external VAD model;
// precomputed traces can be injected through the trace file format instead.
struct EnergyVadParams {
  double frame_ms = 25.0;  // analysis window
  double hop_ms = 20.0;
  double floor_db = -60.0;  // noise floor, maps to activation 0
  double ceil_db = -20.0;   // maps to activation 1

  void validate() const;  // throws ParameterError
};

// Per-frame RMS energy in dBFS (full scale = 1.0), mapped linearly onto
// [0, 1] between floor_db and ceil_db and clamped. All-zero frames sit at
// floor_db. The trace runs at 1000/hop_ms frames per second from t=0; audio
// shorter than one analysis window yields an empty trace.
FrameTrace energy_activation(const AudioBuffer& audio,
                             const EnergyVadParams& params = {});

}  // namespace stprep
