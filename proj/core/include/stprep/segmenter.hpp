#pragma once

#include <span>
#include <vector>

#include "stprep/frame_trace.hpp"

namespace stprep {

// Thresholds and escalation schedule for the recursive segmenter.
struct SegmenterParams {
  double p_on = 0.481;    // onset speaker activation threshold
  double p_off = 0.810;   // offset speaker activation threshold
  double alpha_on = 0.1;  // escalation step for p_on
  double alpha_off = 0.028;
  double t_dur_s = 43.75;        // maximum emitted segment duration
  double escalation_cap = 0.95;  // stop escalating once both thresholds reach this

  void validate() const;  // throws ParameterError
};

// Settings for merging short neighbouring segments.
struct MergeParams {
  double m_dur_s = 30.0;  // maximum duration of a merged segment
  double m_int_s = 1.0;   // gaps shorter than this are merged across

  void validate() const;  // throws ParameterError
};

// Maximal active regions under hysteresis thresholding. A region opens at
// the first frame whose value reaches both thresholds (>= max(p_on, p_off),
// so a region can never close on the frame that opened it) and closes at the
// first later frame with value < p_off; the region ends at that frame's
// start time. A region still open at the end of the trace closes at the
// trace end. Results are sorted, pairwise disjoint and contained in the
// trace's extent.
std::vector<TimeSpan> hysteresis_regions(const FrameTrace& trace, double p_on,
                                         double p_off);

// Splits a span into k = ceil(length / t_dur_s) contiguous parts of equal
// length that tile the span exactly. Requires span.length() > t_dur_s.
std::vector<TimeSpan> equal_segment(const TimeSpan& span, double t_dur_s);

// Recursive re-segmentation. Regions no longer than t_dur_s pass through
// unchanged. A longer region is re-thresholded at escalated thresholds
// (p_on + alpha_on, p_off + alpha_off, clamped to 1) while either threshold
// is below escalation_cap; when escalation is exhausted, or the escalated
// pass makes no progress (empty result, or the region returned whole), the
// region is split into equal parts instead. Every returned span has length
// <= t_dur_s; spans are sorted, disjoint and lie inside the first-pass
// hysteresis regions.
std::vector<TimeSpan> segment_audio(const FrameTrace& trace,
                                    const SegmenterParams& params);

// Greedy left-to-right merge over sorted disjoint spans: the running span
// absorbs the next one when the gap between them is < m_int_s and the merged
// length stays <= m_dur_s; otherwise the running span is emitted and
// accumulation restarts. Throws ParameterError on unsorted or overlapping
// input. Output boundaries are always input boundaries, and merging its own
// output changes nothing.
std::vector<TimeSpan> merge_segments(std::span<const TimeSpan> spans,
                                     const MergeParams& params);

}  // namespace stprep
