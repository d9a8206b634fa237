#include "stprep/energy_vad.hpp"

#include <algorithm>
#include <cmath>

#include "stprep/errors.hpp"

namespace stprep {

void EnergyVadParams::validate() const {
  if (!(frame_ms > 0.0)) throw ParameterError("frame_ms must be positive");
  if (!(hop_ms > 0.0)) throw ParameterError("hop_ms must be positive");
  if (hop_ms > frame_ms) throw ParameterError("hop_ms must be <= frame_ms");
  if (!(floor_db < ceil_db)) throw ParameterError("floor_db must be < ceil_db");
}

FrameTrace energy_activation(const AudioBuffer& audio,
                             const EnergyVadParams& params) {
  params.validate();
  FrameTrace trace;
  trace.frame_rate_hz = 1000.0 / params.hop_ms;
  trace.start_s = 0.0;

  const auto frame_samples = static_cast<std::size_t>(
      std::llround(params.frame_ms * audio.sample_rate_hz / 1000.0));
  const auto hop_samples = static_cast<std::size_t>(
      std::llround(params.hop_ms * audio.sample_rate_hz / 1000.0));
  if (frame_samples == 0 || hop_samples == 0)
    throw ParameterError("window shorter than one sample at this rate");
  if (audio.samples.size() < frame_samples) return trace;

  const std::size_t frames =
      (audio.samples.size() - frame_samples) / hop_samples + 1;
  trace.values.reserve(frames);
  const double span_db = params.ceil_db - params.floor_db;
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t begin = f * hop_samples;
    double acc = 0.0;
    for (std::size_t i = begin; i < begin + frame_samples; ++i)
      acc += audio.samples[i] * audio.samples[i];
    const double rms = std::sqrt(acc / static_cast<double>(frame_samples));
    const double db =
        rms > 0.0 ? 20.0 * std::log10(rms) : params.floor_db;  // avoid -inf
    trace.values.push_back(std::clamp((db - params.floor_db) / span_db, 0.0, 1.0));
  }
  return trace;
}

}  // namespace stprep
