// Copyright 2026 ppfwalk contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PPF_TERRAIN_HPP_
#define PPF_TERRAIN_HPP_

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppf/rng.hpp"

namespace ppf {

enum class TerrainKind { flat, uphill, downhill, uneven_a, uneven_b };

inline const char* to_string(TerrainKind k) {
  switch (k) {
    case TerrainKind::flat: return "flat";
    case TerrainKind::uphill: return "uphill";
    case TerrainKind::downhill: return "downhill";
    case TerrainKind::uneven_a: return "uneven_a";
    case TerrainKind::uneven_b: return "uneven_b";
  }
  return "?";
}

inline TerrainKind parse_terrain_kind(const std::string& s) {
  if (s == "flat") return TerrainKind::flat;
  if (s == "uphill") return TerrainKind::uphill;
  if (s == "downhill") return TerrainKind::downhill;
  if (s == "uneven_a") return TerrainKind::uneven_a;
  if (s == "uneven_b") return TerrainKind::uneven_b;
  throw std::invalid_argument("unknown terrain kind: " + s);
}

inline constexpr double kMaxSlopeDeg = 15.0;   // slope at level 1
inline constexpr double kMaxBumpAmp = 0.1;     // m, bump amplitude at level 1
inline constexpr double kWavelengthA = 1.5;    // m
inline constexpr double kWavelengthB = 0.7;    // m

// Procedural heightfield. Deterministic function of (kind, level, seed).
struct TerrainField {
  TerrainKind kind = TerrainKind::flat;
  double level = 0.0;
  uint64_t seed = 0;
  // Derived at generation time.
  double slope = 0.0;               // tan of the slope angle, signed
  double amplitude = 0.0;           // m
  double wavelength = 1.0;          // m
  double phase[3] = {0, 0, 0};      // seed-derived phases
  double dir[3] = {0, 0, 0};        // seed-derived wave directions (rad)

  double height(double x, double y) const {
    switch (kind) {
      case TerrainKind::flat:
        return 0.0;
      case TerrainKind::uphill:
      case TerrainKind::downhill:
        return slope * x;
      case TerrainKind::uneven_a:
      case TerrainKind::uneven_b: {
        const double k = 2.0 * M_PI / wavelength;
        double h = 0.0;
        const double coef[3] = {0.5, 0.3, 0.2};
        const double freq[3] = {1.0, 2.3, 4.1};
        for (int i = 0; i < 3; ++i) {
          const double cx = std::cos(dir[i]);
          const double cy = std::sin(dir[i]);
          h += coef[i] *
               std::sin(k * freq[i] * (cx * x + cy * y) + phase[i]);
        }
        return amplitude * h;  // |h| <= amplitude since coefficients sum to 1
      }
    }
    return 0.0;
  }
};

inline TerrainField generate_terrain(TerrainKind kind, double level,
                                     uint64_t seed) {
  if (!(level >= 0.0 && level <= 1.0))
    throw std::invalid_argument("terrain level must be in [0, 1]");
  TerrainField f;
  f.kind = kind;
  f.level = level;
  f.seed = seed;
  const double angle = level * kMaxSlopeDeg * M_PI / 180.0;
  switch (kind) {
    case TerrainKind::flat:
      break;
    case TerrainKind::uphill:
      f.slope = std::tan(angle);
      break;
    case TerrainKind::downhill:
      f.slope = -std::tan(angle);
      break;
    case TerrainKind::uneven_a:
    case TerrainKind::uneven_b: {
      f.amplitude = level * kMaxBumpAmp;
      f.wavelength =
          (kind == TerrainKind::uneven_a) ? kWavelengthA : kWavelengthB;
      Rng rng(derive_seed(seed, static_cast<uint64_t>(kind)));
      for (int i = 0; i < 3; ++i) {
        f.phase[i] = rng.uniform(0.0, 2.0 * M_PI);
        f.dir[i] = rng.uniform(0.0, M_PI);
      }
      break;
    }
  }
  return f;
}

inline TerrainField generate_terrain(const std::string& kind, double level,
                                     uint64_t seed) {
  return generate_terrain(parse_terrain_kind(kind), level, seed);
}

// Piecewise terrain along x, used for the sequenced robustness arena.
// Segment i covers [x0_i, x0_{i+1}) and is vertically offset so the profile
// is continuous along the y = 0 walking line.
struct TerrainMap {
  struct Segment {
    double x0 = 0.0;
    TerrainField field;
    double base = 0.0;
  };
  std::vector<Segment> segments;

  static TerrainMap single(const TerrainField& f) {
    TerrainMap m;
    m.segments.push_back({0.0, f, 0.0});
    return m;
  }

  static TerrainMap sequence(const std::vector<std::pair<double, TerrainField>>&
                                 starts_and_fields) {
    if (starts_and_fields.empty())
      throw std::invalid_argument("terrain sequence must be non-empty");
    TerrainMap m;
    double base = 0.0;
    double prev_end_h = 0.0;
    for (size_t i = 0; i < starts_and_fields.size(); ++i) {
      const double x0 = starts_and_fields[i].first;
      const TerrainField& f = starts_and_fields[i].second;
      if (i > 0 && x0 <= m.segments.back().x0)
        throw std::invalid_argument("terrain segments must be x-sorted");
      base = prev_end_h - f.height(0.0, 0.0);
      m.segments.push_back({x0, f, base});
      if (i + 1 < starts_and_fields.size()) {
        const double next_x0 = starts_and_fields[i + 1].first;
        prev_end_h = base + f.height(next_x0 - x0, 0.0);
      }
    }
    return m;
  }

  double height(double x, double y) const {
    if (segments.empty()) return 0.0;
    size_t i = 0;
    while (i + 1 < segments.size() && x >= segments[i + 1].x0) ++i;
    const Segment& s = segments[i];
    if (x < segments[0].x0) return segments[0].base + segments[0].field.height(0.0, y);
    return s.base + s.field.height(x - s.x0, y);
  }

  double level_at(double x) const {
    if (segments.empty()) return 0.0;
    size_t i = 0;
    while (i + 1 < segments.size() && x >= segments[i + 1].x0) ++i;
    return segments[i].field.level;
  }
};

}  // namespace ppf

#endif  // PPF_TERRAIN_HPP_
