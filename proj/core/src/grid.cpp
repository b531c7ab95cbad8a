#include "stms/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

#include "stms/csv.hpp"
#include "stms/errors.hpp"

namespace stms {

std::string scale_name(Scale s) {
  switch (s) {
    case Scale::raw: return "raw";
    case Scale::frechet: return "frechet";
    case Scale::gumbel: return "gumbel";
  }
  return "raw";
}

Scale parse_scale(const std::string& name) {
  if (name == "raw") return Scale::raw;
  if (name == "frechet") return Scale::frechet;
  if (name == "gumbel") return Scale::gumbel;
  throw ValidationError("unknown scale: " + name);
}

SpaceTimeField::SpaceTimeField(SpatialGrid grid, int T, Scale scale)
    : grid_(grid), T_(T), scale_(scale) {
  if (grid.m1 < 1 || grid.m2 < 1) throw ValidationError("SpaceTimeField: empty grid");
  if (grid.mesh <= 0.0) throw ValidationError("SpaceTimeField: mesh must be positive");
  if (T < 1) throw ValidationError("SpaceTimeField: T must be >= 1");
  values_.assign(static_cast<std::size_t>(grid.n_sites()) * T, 0.0);
}

DesignMask build_mask(double mesh, double r, int p, bool spatial_only) {
  if (mesh <= 0.0) throw ValidationError("build_mask: mesh must be positive");
  if (r < 1.0) throw ValidationError("build_mask: r must be >= 1");
  if (p < 1) throw ValidationError("build_mask: p must be >= 1");
  DesignMask m;
  m.mesh = mesh;
  m.r = r;
  m.p = p;
  m.spatial_only = spatial_only;
  const int zmax = static_cast<int>(std::floor(r));
  for (int z2 = -zmax; z2 <= zmax; ++z2) {
    for (int z1 = -zmax; z1 <= zmax; ++z1) {
      if (static_cast<double>(z1) * z1 + static_cast<double>(z2) * z2 > r * r) continue;
      if (spatial_only) {
        // Half-plane convention: keep z with z2 > 0, or z2 == 0 and z1 > 0.
        if (z2 < 0 || (z2 == 0 && z1 <= 0)) continue;
      }
      m.lags.emplace_back(z1, z2);
    }
  }
  return m;
}

namespace {

double parse_double(const std::string& s, const std::string& path) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw DataError(path + ": bad number '" + s + "'");
  return v;
}

// Distinct sorted coordinate values with exact-duplicate collapsing.
std::vector<double> distinct_sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Checks uniform spacing; returns the mesh. Tolerance is relative 1e-9.
double infer_mesh(const std::vector<double>& coords, const std::string& axis,
                  const std::string& path) {
  if (coords.size() < 2) return 0.0;
  const double step = coords[1] - coords[0];
  for (std::size_t i = 1; i + 1 < coords.size(); ++i) {
    const double s = coords[i + 1] - coords[i];
    if (std::fabs(s - step) > 1e-9 * std::max(std::fabs(step), 1.0))
      throw DataError(path + ": irregular grid along " + axis + " near coordinate " +
                      format_full(coords[i]));
  }
  return step;
}

}  // namespace

SpaceTimeField load_field(const std::string& path, Scale scale) {
  const CsvTable t = read_csv(path);
  const int c_lon = t.column("lon"), c_lat = t.column("lat"), c_t = t.column("t"),
            c_val = t.column("value");
  if (c_lon < 0 || c_lat < 0 || c_t < 0 || c_val < 0)
    throw DataError(path + ": expected header lon,lat,t,value");

  std::vector<double> lons, lats;
  std::vector<int> times;
  lons.reserve(t.rows.size());
  lats.reserve(t.rows.size());
  times.reserve(t.rows.size());
  std::vector<double> vals(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    lons.push_back(parse_double(t.rows[i][c_lon], path));
    lats.push_back(parse_double(t.rows[i][c_lat], path));
    const double tf = parse_double(t.rows[i][c_t], path);
    const int ti = static_cast<int>(std::llround(tf));
    if (std::fabs(tf - ti) > 1e-9 || ti < 1) throw DataError(path + ": time index must be an integer >= 1");
    times.push_back(ti);
    vals[i] = parse_double(t.rows[i][c_val], path);
  }

  const std::vector<double> ux = distinct_sorted(lons);
  const std::vector<double> uy = distinct_sorted(lats);
  const int T = *std::max_element(times.begin(), times.end());
  const int m1 = static_cast<int>(ux.size());
  const int m2 = static_cast<int>(uy.size());

  const double mesh_x = infer_mesh(ux, "lon", path);
  const double mesh_y = infer_mesh(uy, "lat", path);
  double mesh;
  if (m1 > 1 && m2 > 1) {
    if (std::fabs(mesh_x - mesh_y) > 1e-9 * std::max(std::fabs(mesh_x), 1.0))
      throw DataError(path + ": irregular grid: lon spacing " + format_full(mesh_x) +
                      " differs from lat spacing " + format_full(mesh_y));
    mesh = mesh_x;
  } else if (m1 > 1) {
    mesh = mesh_x;
  } else if (m2 > 1) {
    mesh = mesh_y;
  } else {
    mesh = 1.0;
  }
  if (mesh <= 0.0) throw DataError(path + ": degenerate mesh");

  SpatialGrid grid;
  grid.mesh = mesh;
  grid.m1 = m1;
  grid.m2 = m2;
  grid.origin = {ux.front() - mesh, uy.front() - mesh};

  SpaceTimeField field(grid, T, scale);
  std::vector<char> seen(static_cast<std::size_t>(grid.n_sites()) * T, 0);
  auto coord_index = [&](const std::vector<double>& u, double v) {
    const auto it = std::lower_bound(u.begin(), u.end(), v);
    return static_cast<int>(it - u.begin());
  };
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const int i1 = coord_index(ux, lons[i]) + 1;
    const int i2 = coord_index(uy, lats[i]) + 1;
    const int site = grid.site_index(i1, i2);
    const std::size_t cell = static_cast<std::size_t>(times[i] - 1) * grid.n_sites() + site;
    if (seen[cell]) throw DataError(path + ": duplicate cell at site (" + std::to_string(i1) +
                                    "," + std::to_string(i2) + "), t=" + std::to_string(times[i]));
    seen[cell] = 1;
    field.at(site, times[i]) = vals[i];
  }
  for (int tt = 1; tt <= T; ++tt) {
    for (int site = 0; site < grid.n_sites(); ++site) {
      if (!seen[static_cast<std::size_t>(tt - 1) * grid.n_sites() + site]) {
        const auto [i1, i2] = grid.site_coords(site);
        throw DataError(path + ": incomplete grid: missing cell at site (" + std::to_string(i1) +
                        "," + std::to_string(i2) + "), t=" + std::to_string(tt));
      }
    }
  }
  if (scale == Scale::frechet) {
    for (double v : field.values())
      if (!(v > 0.0)) throw DataError(path + ": frechet-scale field has non-positive values");
  }
  return field;
}

void save_field(const SpaceTimeField& field, const std::string& path) {
  std::ostringstream out;
  out << "lon,lat,t,value\n";
  const SpatialGrid& g = field.grid();
  for (int t = 1; t <= field.T(); ++t) {
    for (int site = 0; site < g.n_sites(); ++site) {
      const Vec2 s = g.site(site);
      out << format_full(s.x) << ',' << format_full(s.y) << ',' << t << ','
          << format_full(field.at(site, t)) << '\n';
    }
  }
  write_text_file(path, out.str());
}

}  // namespace stms
