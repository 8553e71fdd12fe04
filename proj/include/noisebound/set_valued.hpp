#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "noisebound/core.hpp"

namespace noisebound {

// Uniform grid over a rectangle; each axis is split into 2^depth cells.
struct GridSpec {
  Point2 lo{-2.5, -2.5};
  Point2 hi{2.5, 2.5};
  int depth = 10;

  static constexpr int kMaxDepth = 24;
  // Dense working bitmaps cap the depth the engine can iterate at.
  static constexpr int kMaxEngineDepth = 13;

  void validate() const;
  std::uint32_t cells() const { return 1u << depth; }
  double cell_width() const { return (hi.x - lo.x) / cells(); }
  double cell_height() const { return (hi.y - lo.y) / cells(); }
  double cell_diagonal() const { return std::hypot(cell_width(), cell_height()); }
  Point2 center(std::uint32_t ix, std::uint32_t iy) const {
    return {lo.x + (ix + 0.5) * cell_width(), lo.y + (iy + 0.5) * cell_height()};
  }
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct BoxIndex {
  std::uint32_t ix = 0;
  std::uint32_t iy = 0;
  friend auto operator<=>(const BoxIndex&, const BoxIndex&) = default;
};

// A set of grid boxes; members are kept sorted (ix, then iy) and unique.
class BoxSet {
public:
  BoxSet() = default;
  explicit BoxSet(const GridSpec& grid) : grid_(grid) {}
  BoxSet(const GridSpec& grid, std::vector<BoxIndex> members);

  static BoxSet full(const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }
  const std::vector<BoxIndex>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  bool contains(const BoxIndex& b) const;
  // Box containing p, if p lies inside the grid rectangle.
  std::optional<BoxIndex> locate(const Point2& p) const;

  BoxSet complement() const;
  BoxSet united(const BoxSet& other) const;
  BoxSet intersected(const BoxSet& other) const;
  bool is_subset_of(const BoxSet& other) const;

  friend bool operator==(const BoxSet&, const BoxSet&) = default;

private:
  GridSpec grid_;
  std::vector<BoxIndex> members_;
};

// How box images are formed.
//
// outer: every box is represented by a k x k lattice of samples, corners
// included, and the cover holds the boxes meeting the union of balls of
// radius sqrt(eps^2 + s^2) + e + bloat around the sample images. That covers
// f(q) + B_eps for every point q of the box: s is the largest diameter of the
// image of a lattice triangle, and e bounds the distance from f(q) to the
// linear interpolation of the triangle's images (half the largest
// second-derivative norm over the samples times the squared lattice cell
// diagonal). With pad disabled the radius is eps + bloat.
//
// centre: samples sit at the centres of a k x k subdivision of the box, the
// radius is eps + bloat, and the cover holds the boxes whose centre lies in the
// union. Not an enclosure; its errors are of either sign and shrink with the
// box size, which suits locating bifurcation parameters.
enum class CoverMode { outer, centre };

struct SamplingSpec {
  int k = 3;
  double bloat = 0.0;
  bool pad = true;
  CoverMode mode = CoverMode::outer;

  void validate() const;
};

struct ImageCover {
  BoxSet cover;
  // Some sample ball reached outside the grid rectangle.
  bool escaped = false;
};

// Boxes meeting the union over samples p of the closed ball around f(p).
ImageCover image_cover(const BoxSet& src, const Params& params, const PlanarMap& map, const SamplingSpec& s);

struct AttractorOptions {
  std::size_t transient = 100;
  std::uint64_t rng_seed = 0;
  std::size_t max_iterations = 0;  // 0: 10 * 2^depth
};

// Least box-level invariant set reached from the tail of a noisy orbit: the
// forward closure of the tail box, then shrunk by image iteration until
// image_cover(result) == result. Throws escape when the cover leaves the grid.
BoxSet minimal_attractor(const Point2& seed, const Params& params, const PlanarMap& map, const GridSpec& grid,
                         const SamplingSpec& s, const AttractorOptions& opts = {});

// Boxes within margin box widths (centre to centre) of the set.
BoxSet dilate(const BoxSet& set, int margin);

// Boxes from which every box-path reaches the collar of the attractor (its
// dilation by collar boxes): the least set containing the collar and closed
// under adding boxes whose image cover lies inside it. Boxes whose cover
// escapes the grid never enter, and neither do boxes from which some path can
// stay away from the attractor forever, such as noise-trapped regions around
// saddles. The collar absorbs boxes next to the attractor that cover
// themselves only because covers are outer approximations.
inline constexpr int kDefaultCollar = 2;
BoxSet domain_of_attraction(const BoxSet& attractor, const Params& params, const PlanarMap& map,
                            const SamplingSpec& s, int collar = kDefaultCollar);

BoxSet dual_repeller(const BoxSet& domain);

// Symmetric Hausdorff distance between the box-centre clouds.
double hausdorff_boxes(const BoxSet& a, const BoxSet& b);
// Minimum centre-to-centre distance; 0 when a box is shared.
double collision_distance(const BoxSet& attractor, const BoxSet& repeller);

// Connected components under 8-neighbour adjacency.
int count_components(const BoxSet& set);
// Members with at least one 4-neighbour outside the set (or off the grid).
BoxSet boundary_boxes(const BoxSet& set);

// CSV: the header "depth,xmin,ymin,xmax,ymax", one line with those values,
// then one "ix,iy" row per member in lexicographic order.
void write_boxset_csv(std::ostream& out, const BoxSet& set);
BoxSet read_boxset_csv(std::istream& in);

}  // namespace noisebound
