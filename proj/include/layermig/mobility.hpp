#pragma once

#include <cstddef>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include "layermig/domain.hpp"
#include "layermig/random.hpp"

namespace layermig {

// Bounding box mapped linearly onto the cell grid.
struct TraceRegion {
  double lat_min = 41.8860;
  double lat_max = 41.9130;
  double lon_min = 12.4780;
  double lon_max = 12.5143;
};

struct TraceOptions {
  TraceRegion region;
  Grid grid;
  double slice_seconds = 10.0;
  // Users whose consecutive fixes are further apart than this are dropped.
  double max_gap_s = 600.0;
};

struct TraceLoadResult {
  std::vector<MobileUser> users;
  std::vector<std::string> user_names;  // original ids, index-aligned with users
  std::size_t rows_read = 0;
  std::size_t rows_outside = 0;
  std::size_t users_dropped = 0;
};

class TraceError : public std::runtime_error {
 public:
  TraceError(std::size_t line, const std::string& what)
      : std::runtime_error("trace line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Reads `user_id,timestamp,lat,lon` rows (Unix seconds). Positions map to grid
// cells; each user is resampled to one cell per slice, holding the latest fix
// at or before each slice start. Slice 0 starts at the earliest timestamp in
// the file. Rows outside the region are skipped and counted.
TraceLoadResult parse_trajectories(std::istream& in, const TraceOptions& options);
TraceLoadResult load_trajectories(const std::string& path, const TraceOptions& options);

// Seeded random-waypoint walkers on the grid, one cell per slice for
// slices + 1 positions. speed_cells is the distance covered per slice.
std::vector<MobileUser> random_waypoint_users(int count, const Grid& grid, int slices, double speed_cells, Rng& rng);

}  // namespace layermig
