#include "stprep/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "stprep/errors.hpp"

namespace stprep {
namespace {

struct FrameRegion {
  std::size_t begin = 0;  // first active frame
  std::size_t end = 0;    // one past the last active frame

  friend bool operator==(const FrameRegion& a, const FrameRegion& b) {
    return a.begin == b.begin && a.end == b.end;
  }
};

void check_threshold(double value, const char* name) {
  if (!(value > 0.0) || !(value <= 1.0) || std::isnan(value))
    throw ParameterError(std::string(name) + " must be in (0, 1]");
}

// Hysteresis state machine over a frame slice [begin, end). The opening
// condition requires a frame to satisfy the sustain condition as well
// (value >= p_off), otherwise a region could close on its opening frame and
// produce an empty span; with pyannote's inverted defaults (p_off > p_on)
// that would chop mid-range stretches into per-frame flicker.
std::vector<FrameRegion> hysteresis_frames(std::span<const double> values,
                                           std::size_t begin, std::size_t end,
                                           double p_on, double p_off) {
  const double open_thr = std::max(p_on, p_off);
  std::vector<FrameRegion> regions;
  bool active = false;
  std::size_t region_begin = 0;
  for (std::size_t i = begin; i < end; ++i) {
    const double v = values[i];
    if (active) {
      if (v < p_off) {
        regions.push_back({region_begin, i});
        active = false;
      }
    } else if (v >= open_thr) {
      region_begin = i;
      active = true;
    }
  }
  if (active) regions.push_back({region_begin, end});
  return regions;
}

}  // namespace

void FrameTrace::validate() const {
  if (!(frame_rate_hz > 0.0) || std::isnan(frame_rate_hz))
    throw ParameterError("frame_rate_hz must be positive");
  if (!(start_s >= 0.0)) throw ParameterError("start_s must be >= 0");
  for (double v : values)
    if (!(v >= 0.0) || !(v <= 1.0))
      throw ParameterError("activation values must be in [0, 1]");
}

void SegmenterParams::validate() const {
  check_threshold(p_on, "p_on");
  check_threshold(p_off, "p_off");
  check_threshold(escalation_cap, "escalation_cap");
  if (!(alpha_on > 0.0)) throw ParameterError("alpha_on must be positive");
  if (!(alpha_off > 0.0)) throw ParameterError("alpha_off must be positive");
  if (!(t_dur_s > 0.0)) throw ParameterError("t_dur_s must be positive");
}

void MergeParams::validate() const {
  if (!(m_dur_s > 0.0)) throw ParameterError("m_dur_s must be positive");
  if (!(m_int_s >= 0.0)) throw ParameterError("m_int_s must be >= 0");
}

std::vector<TimeSpan> hysteresis_regions(const FrameTrace& trace, double p_on,
                                         double p_off) {
  check_threshold(p_on, "p_on");
  check_threshold(p_off, "p_off");
  trace.validate();
  std::vector<TimeSpan> spans;
  for (const FrameRegion& r :
       hysteresis_frames(trace.values, 0, trace.values.size(), p_on, p_off))
    spans.push_back({trace.frame_time(r.begin), trace.frame_time(r.end)});
  return spans;
}

std::vector<TimeSpan> equal_segment(const TimeSpan& span, double t_dur_s) {
  if (!(t_dur_s > 0.0)) throw ParameterError("t_dur_s must be positive");
  const double len = span.length();
  if (!(len > t_dur_s))
    throw ParameterError("equal_segment requires span length > t_dur_s");
  auto parts = static_cast<std::size_t>(std::ceil(len / t_dur_s));
  if (len / static_cast<double>(parts) > t_dur_s) ++parts;  // rounding guard
  std::vector<TimeSpan> out;
  out.reserve(parts);
  double prev = span.start_s;
  for (std::size_t i = 1; i <= parts; ++i) {
    const double next =
        i == parts ? span.end_s
                   : span.start_s + static_cast<double>(i) * len /
                                        static_cast<double>(parts);
    out.push_back({prev, next});
    prev = next;
  }
  return out;
}

std::vector<TimeSpan> segment_audio(const FrameTrace& trace,
                                    const SegmenterParams& params) {
  params.validate();
  trace.validate();
  if (trace.values.empty()) return {};

  const std::span<const double> values(trace.values);
  const auto region_seconds = [&](const FrameRegion& r) {
    return static_cast<double>(r.end - r.begin) / trace.frame_rate_hz;
  };

  struct Pending {
    FrameRegion region;
    double p_on;
    double p_off;
  };

  std::vector<TimeSpan> out;
  const auto equal_split_into = [&](const FrameRegion& r) {
    const TimeSpan span{trace.frame_time(r.begin), trace.frame_time(r.end)};
    for (const TimeSpan& part : equal_segment(span, params.t_dur_s))
      out.push_back(part);
  };

  // Depth-first over regions, preserving left-to-right order.
  std::vector<Pending> stack;
  const auto push_all = [&](const std::vector<FrameRegion>& regions,
                            double p_on, double p_off) {
    for (auto it = regions.rbegin(); it != regions.rend(); ++it)
      stack.push_back({*it, p_on, p_off});
  };

  push_all(hysteresis_frames(values, 0, values.size(), params.p_on, params.p_off),
           params.p_on, params.p_off);

  while (!stack.empty()) {
    const Pending cur = stack.back();
    stack.pop_back();
    if (region_seconds(cur.region) <= params.t_dur_s) {
      out.push_back({trace.frame_time(cur.region.begin),
                     trace.frame_time(cur.region.end)});
      continue;
    }
    if (cur.p_on < params.escalation_cap || cur.p_off < params.escalation_cap) {
      const double next_on = std::min(cur.p_on + params.alpha_on, 1.0);
      const double next_off = std::min(cur.p_off + params.alpha_off, 1.0);
      const std::vector<FrameRegion> subs = hysteresis_frames(
          values, cur.region.begin, cur.region.end, next_on, next_off);
      if (subs.empty() || (subs.size() == 1 && subs.front() == cur.region)) {
        // No progress at the escalated thresholds; never drop audio.
        equal_split_into(cur.region);
      } else {
        push_all(subs, next_on, next_off);
      }
    } else {
      equal_split_into(cur.region);
    }
  }
  return out;
}

std::vector<TimeSpan> merge_segments(std::span<const TimeSpan> spans,
                                     const MergeParams& params) {
  params.validate();
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (!(spans[i].end_s > spans[i].start_s))
      throw ParameterError("merge_segments: span with non-positive length");
    if (i > 0 && spans[i].start_s < spans[i - 1].end_s)
      throw ParameterError("merge_segments: input must be sorted and disjoint");
  }
  std::vector<TimeSpan> out;
  if (spans.empty()) return out;
  TimeSpan current = spans.front();
  for (std::size_t i = 1; i < spans.size(); ++i) {
    const TimeSpan& next = spans[i];
    const double gap = next.start_s - current.end_s;
    const double merged_len = next.end_s - current.start_s;
    if (gap < params.m_int_s && merged_len <= params.m_dur_s) {
      current.end_s = next.end_s;
    } else {
      out.push_back(current);
      current = next;
    }
  }
  out.push_back(current);
  return out;
}

}  // namespace stprep
