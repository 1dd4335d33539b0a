#include "planar_ba/conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <utility>

#include "planar_ba/format.hpp"

namespace planar_ba {

const char* channel_name(StatsChannel c) {
  switch (c) {
    case StatsChannel::kWallShift: return "wall_shift";
    case StatsChannel::kCameraShift: return "camera_shift";
    case StatsChannel::kBoundaryHit: return "boundary_hit";
  }
  return "?";
}

const char* axis_name(StatsAxis a) {
  return a == StatsAxis::kNormal ? "normal" : "direction";
}

std::vector<WallCameraStats> projected_stats(const AdjustmentField& field,
                                             const Scene& scene) {
  struct Group {
    int camera_id = 0;
    std::array<std::array<std::vector<double>, 2>, 3> samples;
  };
  std::map<std::pair<int, int>, Group> groups;
  for (const auto& e : field.entries) {
    if (!e.valid) continue;
    const Wall& wall = scene.wall(e.wall_id);
    const std::array<Vec2, 3> channels{e.delta_b * wall.normal, e.delta_t, e.hit_displacement};
    auto& g = groups[{e.camera_index, e.wall_id}];
    g.camera_id = e.camera_id;
    for (int ch = 0; ch < 3; ++ch) {
      g.samples[ch][0].push_back(channels[ch].dot(wall.normal));
      g.samples[ch][1].push_back(channels[ch].dot(wall.direction));
    }
  }

  std::vector<WallCameraStats> out;
  out.reserve(groups.size());
  for (auto& [key, g] : groups) {
    WallCameraStats s;
    s.camera_id = g.camera_id;
    s.wall_id = key.second;
    s.count = static_cast<int>(g.samples[0][0].size());
    for (int ch = 0; ch < 3; ++ch) {
      for (int ax = 0; ax < 2; ++ax) {
        // Sorted summation makes the result independent of column order.
        auto& v = g.samples[ch][ax];
        std::sort(v.begin(), v.end());
        double sum = 0.0;
        for (double x : v) sum += x;
        const double m = sum / v.size();
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        s.mean[ch][ax] = kStatsScale * m;
        s.std[ch][ax] = kStatsScale * std::sqrt(ss / v.size());
      }
    }
    out.push_back(s);
  }
  return out;
}

std::string stats_csv(const std::vector<WallCameraStats>& stats) {
  std::ostringstream os;
  os << "camera_id,wall_id,channel,axis,mean,std,count\n";
  for (const auto& s : stats) {
    for (int ch = 0; ch < 3; ++ch) {
      for (int ax = 0; ax < 2; ++ax) {
        os << s.camera_id << ',' << s.wall_id << ','
           << channel_name(static_cast<StatsChannel>(ch)) << ','
           << axis_name(static_cast<StatsAxis>(ax)) << ',' << format_double(s.mean[ch][ax])
           << ',' << format_double(s.std[ch][ax]) << ',' << s.count << '\n';
      }
    }
  }
  return os.str();
}

}  // namespace planar_ba
