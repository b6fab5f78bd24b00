#pragma once

#include <istream>
#include <optional>
#include <vector>

#include "hopsim/model.hpp"

// Experimental-analysis pipeline: rigid pose from tracked optical markers
// by planar least squares, and hop speed/direction from a line fit to the
// post-separation positions.

namespace hopsim {

struct Marker {
  int id = 0;
  Vec2 position_body_mm = Vec2::Zero();
};

struct MarkerSet {
  std::vector<Marker> markers;

  void validate() const;
  const Marker* find(int id) const;
};

struct Detection {
  int marker_id = 0;
  Vec2 position_mm = Vec2::Zero();  // apparatus frame
  double noise_sigma_mm = 1.0;
};

struct PoseObservation {
  double time_s = 0.0;
  std::vector<Detection> detections;
};

struct PoseEstimate {
  Vec2 position_mm = Vec2::Zero();
  double attitude_rad = 0.0;
  double residual_rms_mm = 0.0;
};

// Closed-form planar Procrustes: the rigid transform (R(theta), t)
// minimizing sum w_i |R p_i + t - q_i|^2 over the detections, weighted by
// inverse variance when the per-detection sigmas differ. Detections are
// processed in marker-id order, so the result is exactly invariant under
// re-ordering. Throws DegenerateConfigurationError for < 2 detections or
// coincident markers.
PoseEstimate estimate_pose(const MarkerSet& markers,
                           const PoseObservation& obs);

struct TrackSample {
  double t_s = 0.0;
  Vec2 position_mm = Vec2::Zero();
};

// Ordinary least-squares line fit of x(t) and y(t) over the
// post-separation segment; the slopes are (v_hx, v_hy). If no separation
// hint is given, the segment starts at the earliest time after which the
// remaining samples fit a line with residual RMS below 2x the noise
// floor estimated from the final 10 samples. t_h reports the segment
// start. Throws InsufficientSamplesError (< 3 samples after the start)
// or NonmonotonicTimeError.
HopResult fit_hop_velocity(const std::vector<TrackSample>& track,
                           std::optional<double> separation_hint_s);

// CSV ingestion. Track rows are `t,x,y` (s, mm, mm); marker rows are
// `id,bx,by`; detection rows are `t,id,x,y` grouped into one observation
// per distinct timestamp. A single header line is skipped when present.
// Throw ParseError with the 1-based row number on malformed input.
std::vector<TrackSample> read_track_csv(std::istream& is);
MarkerSet read_marker_csv(std::istream& is);
std::vector<PoseObservation> read_detection_csv(std::istream& is);

}  // namespace hopsim
