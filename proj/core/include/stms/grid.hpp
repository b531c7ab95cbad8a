#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace stms {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double norm() const { return std::hypot(x, y); }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
};

// Regular two-dimensional grid: sites origin + mesh*(i1, i2) with
// 1 <= i1 <= m1, 1 <= i2 <= m2. Enumeration is row-major with i1 fastest.
struct SpatialGrid {
  double mesh = 1.0;
  int m1 = 0;
  int m2 = 0;
  Vec2 origin{0.0, 0.0};

  int n_sites() const { return m1 * m2; }
  int site_index(int i1, int i2) const { return (i2 - 1) * m1 + (i1 - 1); }
  std::pair<int, int> site_coords(int index) const {
    return {index % m1 + 1, index / m1 + 1};
  }
  Vec2 site(int index) const {
    const auto [i1, i2] = site_coords(index);
    return {origin.x + mesh * i1, origin.y + mesh * i2};
  }
  bool contains(int i1, int i2) const { return i1 >= 1 && i1 <= m1 && i2 >= 1 && i2 <= m2; }
};

enum class Scale { raw, frechet, gumbel };

std::string scale_name(Scale s);
Scale parse_scale(const std::string& name);

// Dense space-time field on a grid, time steps 1..T, no missing cells.
class SpaceTimeField {
 public:
  SpaceTimeField() = default;
  SpaceTimeField(SpatialGrid grid, int T, Scale scale);

  const SpatialGrid& grid() const { return grid_; }
  int T() const { return T_; }
  Scale scale() const { return scale_; }
  void set_scale(Scale s) { scale_ = s; }

  double at(int site, int t) const { return values_[static_cast<std::size_t>(t - 1) * grid_.n_sites() + site]; }
  double& at(int site, int t) { return values_[static_cast<std::size_t>(t - 1) * grid_.n_sites() + site]; }

  // Contiguous slice of all sites at time t (row-major site order).
  const double* slice(int t) const { return values_.data() + static_cast<std::size_t>(t - 1) * grid_.n_sites(); }
  double* slice(int t) { return values_.data() + static_cast<std::size_t>(t - 1) * grid_.n_sites(); }

  const std::vector<double>& values() const { return values_; }

 private:
  SpatialGrid grid_;
  int T_ = 0;
  Scale scale_ = Scale::raw;
  std::vector<double> values_;
};

// Spatial lags used to form likelihood pairs. Lags are mesh * z for
// integer vectors z with ||z|| <= r. The full mask keeps the zero lag and
// both signs (valid when paired with strictly positive temporal lags);
// the spatial-only mask keeps a half-plane and drops zero so that each
// site pair enters at most once.
struct DesignMask {
  double mesh = 1.0;
  double r = 0.0;
  int p = 0;
  bool spatial_only = false;
  std::vector<std::pair<int, int>> lags;  // integer grid offsets z

  Vec2 lag_vec(std::size_t i) const {
    return {mesh * lags[i].first, mesh * lags[i].second};
  }
};

DesignMask build_mask(double mesh, double r, int p, bool spatial_only);

// CSV ingestion: header lon,lat,t,value; sites must form a complete
// regular grid with integer times 1..T.
SpaceTimeField load_field(const std::string& path, Scale scale = Scale::raw);

void save_field(const SpaceTimeField& field, const std::string& path);

}  // namespace stms
