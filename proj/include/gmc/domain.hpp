#ifndef GMC_DOMAIN_HPP
#define GMC_DOMAIN_HPP

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gmc/common.hpp"

namespace gmc {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double length() const { return hi - lo; }
  bool operator==(const Interval&) const = default;
};

/// Density of the reference measure with respect to Lebesgue measure.
///
/// The tag identifies the density for serialization; only registered tags
/// ("lebesgue", "ramp") can be reconstructed from JSON.
struct Density {
  std::string tag = "lebesgue";
  std::function<double(const Vector&)> fn;

  bool is_constant() const { return tag == "lebesgue"; }
  double operator()(const Vector& t) const { return fn ? fn(t) : 1.0; }
};

Density lebesgue_density();
/// 2·t_0, a probability density on [0,1] along the first axis.
Density ramp_density();
Density density_from_tag(const std::string& tag);

/// Axis-aligned box discretized into n^d congruent cells. Cell i has its
/// multi-index laid out with axis 0 fastest.
class DomainGrid {
 public:
  int dim() const { return dim_; }
  const std::vector<Interval>& bounds() const { return bounds_; }
  Index n_per_axis() const { return n_; }
  Index size() const { return cell_measure_.size(); }

  /// dim × size matrix; column i is the center of cell i.
  const Matrix& centers() const { return centers_; }
  Vector center(Index i) const { return centers_.col(i); }
  const Vector& cell_measure() const { return cell_measure_; }
  const Vector& spacing() const { return spacing_; }
  double max_spacing() const { return spacing_.maxCoeff(); }
  /// Lebesgue volume of one cell.
  double cell_volume() const { return spacing_.prod(); }
  double total_measure() const { return total_; }
  const Density& density() const { return density_; }

  std::uint64_t id() const;

  friend DomainGrid build_grid(int dim, std::vector<Interval> bounds, Index n_per_axis,
                               Density density);

 private:
  DomainGrid() = default;

  int dim_ = 0;
  std::vector<Interval> bounds_;
  Index n_ = 0;
  Matrix centers_;
  Vector cell_measure_;
  Vector spacing_;
  double total_ = 0.0;
  Density density_;
};

/// Midpoint discretization: mu_i = density(t_i) * h^d.
DomainGrid build_grid(int dim, std::vector<Interval> bounds, Index n_per_axis,
                      Density density = lebesgue_density());
/// Same interval on every axis.
DomainGrid build_grid(int dim, Interval bounds, Index n_per_axis,
                      Density density = lebesgue_density());

/// Splits every cell into factor^d subcells.
DomainGrid refine(const DomainGrid& grid, int factor);

/// Cells of `coarse` covered by `fine`: for every coarse cell, the fine cell
/// indices whose centers lie inside it. Throws unless `fine` refines `coarse`.
std::vector<std::vector<Index>> children_of(const DomainGrid& coarse, const DomainGrid& fine);
bool refines(const DomainGrid& fine, const DomainGrid& coarse);

nlohmann::json to_json(const DomainGrid& grid);
DomainGrid grid_from_json(const nlohmann::json& doc);

}  // namespace gmc

#endif  // GMC_DOMAIN_HPP
