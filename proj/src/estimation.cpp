#include "hopsim/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>

namespace hopsim {

void MarkerSet::validate() const {
  if (markers.size() < 2)
    throw Error("MarkerSet: at least 2 markers required for a planar pose");
  for (size_t i = 0; i < markers.size(); ++i)
    for (size_t j = i + 1; j < markers.size(); ++j)
      if (markers[i].id == markers[j].id)
        throw Error("MarkerSet: duplicate marker id " +
                    std::to_string(markers[i].id));
}

const Marker* MarkerSet::find(int id) const {
  for (const Marker& m : markers)
    if (m.id == id) return &m;
  return nullptr;
}

PoseEstimate estimate_pose(const MarkerSet& markers,
                           const PoseObservation& obs) {
  if (obs.detections.size() < 2)
    throw DegenerateConfigurationError(
        "estimate_pose: need at least 2 detections");

  std::vector<Detection> dets = obs.detections;
  std::sort(dets.begin(), dets.end(),
            [](const Detection& a, const Detection& b) {
              return std::tie(a.marker_id, a.position_mm.x(),
                              a.position_mm.y()) <
                     std::tie(b.marker_id, b.position_mm.x(),
                              b.position_mm.y());
            });

  // Equal weights unless the stated sigmas differ.
  bool uniform = true;
  for (const Detection& d : dets) {
    if (!(d.noise_sigma_mm > 0.0))
      throw Error("estimate_pose: noise_sigma must be > 0");
    uniform = uniform && d.noise_sigma_mm == dets.front().noise_sigma_mm;
  }

  double wsum = 0.0;
  Vec2 p_bar = Vec2::Zero(), q_bar = Vec2::Zero();
  std::vector<std::pair<Vec2, double>> body;  // body position, weight
  body.reserve(dets.size());
  for (const Detection& d : dets) {
    const Marker* m = markers.find(d.marker_id);
    if (!m)
      throw Error("estimate_pose: detection references unknown marker id " +
                  std::to_string(d.marker_id));
    const double w = uniform ? 1.0 : 1.0 / (d.noise_sigma_mm * d.noise_sigma_mm);
    body.emplace_back(m->position_body_mm, w);
    wsum += w;
    p_bar += w * m->position_body_mm;
    q_bar += w * d.position_mm;
  }
  p_bar /= wsum;
  q_bar /= wsum;

  // Cross terms of the 2x2 covariance give the optimal angle directly.
  double num = 0.0, den = 0.0, spread = 0.0;
  for (size_t i = 0; i < dets.size(); ++i) {
    const Vec2 p = body[i].first - p_bar;
    const Vec2 q = dets[i].position_mm - q_bar;
    const double w = body[i].second;
    num += w * (p.x() * q.y() - p.y() * q.x());
    den += w * (p.x() * q.x() + p.y() * q.y());
    spread += w * p.squaredNorm();
  }
  if (spread / wsum < 1e-12)
    throw DegenerateConfigurationError(
        "estimate_pose: detected markers are coincident");

  PoseEstimate est;
  est.attitude_rad = (num == 0.0 && den == 0.0) ? 0.0 : std::atan2(num, den);
  const double c = std::cos(est.attitude_rad), s = std::sin(est.attitude_rad);
  est.position_mm = q_bar - Vec2(c * p_bar.x() - s * p_bar.y(),
                                 s * p_bar.x() + c * p_bar.y());

  double ss = 0.0;
  for (size_t i = 0; i < dets.size(); ++i) {
    const Vec2 p = body[i].first;
    const Vec2 mapped(c * p.x() - s * p.y() + est.position_mm.x(),
                      s * p.x() + c * p.y() + est.position_mm.y());
    ss += body[i].second * (mapped - dets[i].position_mm).squaredNorm();
  }
  est.residual_rms_mm = std::sqrt(ss / wsum);
  return est;
}

namespace {

struct LineFit {
  double slope_x = 0.0, slope_y = 0.0;
  double rms = 0.0;
};

LineFit fit_line(const std::vector<TrackSample>& track, size_t begin) {
  const size_t n = track.size() - begin;
  double t_bar = 0.0;
  Vec2 p_bar = Vec2::Zero();
  for (size_t i = begin; i < track.size(); ++i) {
    t_bar += track[i].t_s;
    p_bar += track[i].position_mm;
  }
  t_bar /= double(n);
  p_bar /= double(n);

  double stt = 0.0;
  Vec2 stp = Vec2::Zero();
  for (size_t i = begin; i < track.size(); ++i) {
    const double dt = track[i].t_s - t_bar;
    stt += dt * dt;
    stp += dt * (track[i].position_mm - p_bar);
  }
  LineFit f;
  if (stt > 0.0) {
    f.slope_x = stp.x() / stt;
    f.slope_y = stp.y() / stt;
  }
  double ss = 0.0;
  for (size_t i = begin; i < track.size(); ++i) {
    const double dt = track[i].t_s - t_bar;
    const Vec2 r = track[i].position_mm - p_bar - dt * Vec2(f.slope_x, f.slope_y);
    ss += r.squaredNorm();
  }
  f.rms = std::sqrt(ss / double(n));
  return f;
}

}  // namespace

HopResult fit_hop_velocity(const std::vector<TrackSample>& track,
                           std::optional<double> separation_hint_s) {
  for (size_t i = 1; i < track.size(); ++i)
    if (!(track[i].t_s > track[i - 1].t_s))
      throw NonmonotonicTimeError(
          "fit_hop_velocity: timestamps must be strictly increasing");

  size_t begin = 0;
  if (separation_hint_s) {
    while (begin < track.size() && track[begin].t_s < *separation_hint_s)
      ++begin;
  } else if (track.size() >= 3) {
    // Change-point rule: noise floor from the final 10 samples, then the
    // earliest start whose tail fit stays below twice that floor.
    const size_t tail = track.size() - std::min<size_t>(track.size(), 10);
    const double floor = fit_line(track, tail).rms;
    const double threshold = std::max(2.0 * floor, 1e-9);
    while (begin + 3 <= track.size() && fit_line(track, begin).rms > threshold)
      ++begin;
  }

  if (track.size() - begin < 3)
    throw InsufficientSamplesError(
        "fit_hop_velocity: need at least 3 samples after the separation "
        "point");

  const LineFit f = fit_line(track, begin);
  return HopResult::from_velocity(Vec2(f.slope_x, f.slope_y),
                                  track[begin].t_s);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_num(const std::string& s, int line) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, "row " + std::to_string(line) +
                               ": not a number: '" + s + "'");
  }
}

bool is_header(const std::string& first_field) {
  return !first_field.empty() &&
         !std::isdigit(static_cast<unsigned char>(first_field[0])) &&
         first_field[0] != '-' && first_field[0] != '+' &&
         first_field[0] != '.';
}

template <typename RowFn>
void for_each_row(std::istream& is, size_t ncols, RowFn fn) {
  std::string line;
  int lineno = 0;
  bool first = true;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_csv(line);
    if (first && is_header(fields[0])) {
      first = false;
      continue;
    }
    first = false;
    if (fields.size() != ncols)
      throw ParseError(lineno, "row " + std::to_string(lineno) + ": expected " +
                                   std::to_string(ncols) + " columns, got " +
                                   std::to_string(fields.size()));
    std::vector<double> vals;
    vals.reserve(ncols);
    for (const auto& f : fields) vals.push_back(parse_num(f, lineno));
    fn(vals);
  }
}

}  // namespace

std::vector<TrackSample> read_track_csv(std::istream& is) {
  std::vector<TrackSample> out;
  for_each_row(is, 3, [&](const std::vector<double>& v) {
    out.push_back(TrackSample{v[0], Vec2(v[1], v[2])});
  });
  return out;
}

MarkerSet read_marker_csv(std::istream& is) {
  MarkerSet out;
  for_each_row(is, 3, [&](const std::vector<double>& v) {
    out.markers.push_back(Marker{static_cast<int>(v[0]), Vec2(v[1], v[2])});
  });
  return out;
}

std::vector<PoseObservation> read_detection_csv(std::istream& is) {
  std::map<double, PoseObservation> by_time;
  for_each_row(is, 4, [&](const std::vector<double>& v) {
    PoseObservation& obs = by_time[v[0]];
    obs.time_s = v[0];
    obs.detections.push_back(
        Detection{static_cast<int>(v[1]), Vec2(v[2], v[3]), 1.0});
  });
  std::vector<PoseObservation> out;
  out.reserve(by_time.size());
  for (auto& [t, obs] : by_time) out.push_back(std::move(obs));
  return out;
}

}  // namespace hopsim
