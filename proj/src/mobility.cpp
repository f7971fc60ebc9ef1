#include "layermig/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace layermig {

namespace {

struct Fix {
  double timestamp;
  GridPos cell;
};

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && (s[start] == ' ' || s[start] == '\t')) ++start;
  return s.substr(start);
}

double parse_number(const std::string& field, std::size_t line, const char* name) {
  const std::string text = trim(field);
  if (text.empty()) throw TraceError(line, std::string("empty ") + name);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw TraceError(line, std::string("cannot parse ") + name + " '" + text + "'");
  }
  if (used != text.size() || !std::isfinite(value)) {
    throw TraceError(line, std::string("cannot parse ") + name + " '" + text + "'");
  }
  return value;
}

int to_cell(double value, double lo, double hi, int cells) {
  const int c = static_cast<int>(std::floor((value - lo) / (hi - lo) * cells));
  return std::clamp(c, 0, cells - 1);
}

}  // namespace

TraceLoadResult parse_trajectories(std::istream& in, const TraceOptions& options) {
  const TraceRegion& r = options.region;
  if (!(r.lat_max > r.lat_min) || !(r.lon_max > r.lon_min)) {
    throw std::invalid_argument("trace region: empty bounding box");
  }
  if (!(options.slice_seconds > 0.0)) throw std::invalid_argument("trace: slice_seconds must be positive");

  TraceLoadResult result;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::map<std::string, std::vector<Fix>> per_user;

  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "user_id,timestamp,lat,lon") throw TraceError(line_no, "expected header 'user_id,timestamp,lat,lon'");
      header_seen = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 4) throw TraceError(line_no, "expected 4 fields, got " + std::to_string(fields.size()));
    const std::string user = trim(fields[0]);
    if (user.empty()) throw TraceError(line_no, "empty user_id");
    const double ts = parse_number(fields[1], line_no, "timestamp");
    const double lat = parse_number(fields[2], line_no, "lat");
    const double lon = parse_number(fields[3], line_no, "lon");
    ++result.rows_read;
    if (lat < r.lat_min || lat > r.lat_max || lon < r.lon_min || lon > r.lon_max) {
      ++result.rows_outside;
      continue;
    }
    const GridPos cell{to_cell(lon, r.lon_min, r.lon_max, options.grid.cols),
                       to_cell(lat, r.lat_min, r.lat_max, options.grid.rows)};
    per_user[user].push_back(Fix{ts, cell});
  }
  if (result.rows_read == 0) throw TraceError(line_no, "trace contains no data rows");

  double origin = INFINITY;
  for (const auto& [_, fixes] : per_user) {
    for (const auto& f : fixes) origin = std::min(origin, f.timestamp);
  }

  for (auto& [name, fixes] : per_user) {
    std::stable_sort(fixes.begin(), fixes.end(), [](const Fix& a, const Fix& b) { return a.timestamp < b.timestamp; });
    bool gap = false;
    for (std::size_t i = 1; i < fixes.size(); ++i) {
      if (fixes[i].timestamp - fixes[i - 1].timestamp > options.max_gap_s) gap = true;
    }
    if (gap) {
      ++result.users_dropped;
      continue;
    }
    // Extend to the first slice starting at or after the last fix so it is kept.
    const auto last_slice = static_cast<int>(std::ceil((fixes.back().timestamp - origin) / options.slice_seconds));
    MobileUser user;
    user.id = static_cast<UserId>(result.users.size());
    std::size_t cursor = 0;
    for (int s = 0; s <= last_slice; ++s) {
      const double slice_start = origin + s * options.slice_seconds;
      while (cursor + 1 < fixes.size() && fixes[cursor + 1].timestamp <= slice_start) ++cursor;
      user.trajectory.push_back(fixes[cursor].cell);
    }
    result.users.push_back(std::move(user));
    result.user_names.push_back(name);
  }
  return result;
}

TraceLoadResult load_trajectories(const std::string& path, const TraceOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file '" + path + "'");
  return parse_trajectories(in, options);
}

std::vector<MobileUser> random_waypoint_users(int count, const Grid& grid, int slices, double speed_cells, Rng& rng) {
  std::vector<MobileUser> users;
  users.reserve(static_cast<std::size_t>(std::max(count, 0)));
  auto cell_of = [&](double x, double y) {
    return GridPos{std::clamp(static_cast<int>(std::floor(x)), 0, grid.cols - 1),
                   std::clamp(static_cast<int>(std::floor(y)), 0, grid.rows - 1)};
  };
  for (int u = 0; u < count; ++u) {
    MobileUser user;
    user.id = static_cast<UserId>(u);
    double x = rng.uniform(0.0, grid.cols);
    double y = rng.uniform(0.0, grid.rows);
    double wx = rng.uniform(0.0, grid.cols);
    double wy = rng.uniform(0.0, grid.rows);
    user.trajectory.reserve(static_cast<std::size_t>(slices) + 1);
    user.trajectory.push_back(cell_of(x, y));
    for (int s = 0; s < slices; ++s) {
      double remaining = speed_cells;
      while (remaining > 0.0) {
        const double dx = wx - x;
        const double dy = wy - y;
        const double dist = std::hypot(dx, dy);
        if (dist <= remaining) {
          x = wx;
          y = wy;
          remaining -= dist;
          wx = rng.uniform(0.0, grid.cols);
          wy = rng.uniform(0.0, grid.rows);
          if (dist == 0.0 && remaining > 0.0 && std::hypot(wx - x, wy - y) == 0.0) break;
        } else {
          x += dx / dist * remaining;
          y += dy / dist * remaining;
          remaining = 0.0;
        }
      }
      user.trajectory.push_back(cell_of(x, y));
    }
    users.push_back(std::move(user));
  }
  return users;
}

}  // namespace layermig
