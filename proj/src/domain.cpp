#include "gmc/domain.hpp"

#include <cmath>

namespace gmc {

Density lebesgue_density() { return Density{"lebesgue", {}}; }

Density ramp_density() {
  return Density{"ramp", [](const Vector& t) { return 2.0 * t(0); }};
}

Density density_from_tag(const std::string& tag) {
  if (tag == "lebesgue") return lebesgue_density();
  if (tag == "ramp") return ramp_density();
  throw InvalidArgument("unknown density tag '" + tag + "' (known: lebesgue, ramp)");
}

DomainGrid build_grid(int dim, std::vector<Interval> bounds, Index n_per_axis, Density density) {
  if (dim < 1) throw InvalidArgument("grid dimension must be >= 1");
  if (static_cast<int>(bounds.size()) != dim)
    throw InvalidArgument("need one interval per axis");
  if (n_per_axis < 1) throw InvalidArgument("n_per_axis must be >= 1");
  for (const auto& b : bounds) {
    if (!(b.length() > 0.0) || !std::isfinite(b.length()))
      throw InvalidArgument("interval length must be positive and finite");
  }

  DomainGrid g;
  g.dim_ = dim;
  g.bounds_ = std::move(bounds);
  g.n_ = n_per_axis;
  g.density_ = std::move(density);
  g.spacing_.resize(dim);
  for (int k = 0; k < dim; ++k)
    g.spacing_(k) = g.bounds_[k].length() / static_cast<double>(n_per_axis);

  Index total = 1;
  for (int k = 0; k < dim; ++k) total *= n_per_axis;
  g.centers_.resize(dim, total);
  g.cell_measure_.resize(total);

  const double volume = g.cell_volume();
  CompensatedSum<double> acc;
  for (Index i = 0; i < total; ++i) {
    Index rem = i;
    for (int k = 0; k < dim; ++k) {
      const Index idx = rem % n_per_axis;
      rem /= n_per_axis;
      g.centers_(k, i) =
          g.bounds_[k].lo + (static_cast<double>(idx) + 0.5) * g.spacing_(k);
    }
    double w = volume;
    if (!g.density_.is_constant()) {
      const double rho = g.density_(g.centers_.col(i));
      if (!(rho >= 0.0) || !std::isfinite(rho))
        throw InvalidArgument("density must be finite and nonnegative at every cell center");
      w = rho * volume;
    }
    g.cell_measure_(i) = w;
    acc.add(w);
  }
  g.total_ = acc.value();
  if (!(g.total_ > 0.0)) throw InvalidArgument("total measure must be strictly positive");
  return g;
}

DomainGrid build_grid(int dim, Interval bounds, Index n_per_axis, Density density) {
  return build_grid(dim, std::vector<Interval>(static_cast<std::size_t>(dim), bounds), n_per_axis,
                    std::move(density));
}

DomainGrid refine(const DomainGrid& grid, int factor) {
  if (factor < 2) throw InvalidArgument("refine factor must be >= 2");
  return build_grid(grid.dim(), grid.bounds(), grid.n_per_axis() * factor, grid.density());
}

bool refines(const DomainGrid& fine, const DomainGrid& coarse) {
  return fine.dim() == coarse.dim() && fine.bounds() == coarse.bounds() &&
         fine.n_per_axis() % coarse.n_per_axis() == 0;
}

std::vector<std::vector<Index>> children_of(const DomainGrid& coarse, const DomainGrid& fine) {
  if (!refines(fine, coarse)) throw InvalidArgument("fine grid does not refine coarse grid");
  const Index factor = fine.n_per_axis() / coarse.n_per_axis();
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(coarse.size()));
  for (Index f = 0; f < fine.size(); ++f) {
    Index rem = f;
    Index parent = 0;
    Index stride = 1;
    for (int k = 0; k < fine.dim(); ++k) {
      const Index idx = rem % fine.n_per_axis();
      rem /= fine.n_per_axis();
      parent += (idx / factor) * stride;
      stride *= coarse.n_per_axis();
    }
    out[static_cast<std::size_t>(parent)].push_back(f);
  }
  return out;
}

std::uint64_t DomainGrid::id() const { return hash_string(to_json(*this).dump()); }

nlohmann::json to_json(const DomainGrid& grid) {
  nlohmann::json bounds = nlohmann::json::array();
  for (const auto& b : grid.bounds()) bounds.push_back({b.lo, b.hi});
  return {{"dim", grid.dim()},
          {"bounds", bounds},
          {"n_per_axis", grid.n_per_axis()},
          {"density_tag", grid.density().tag}};
}

DomainGrid grid_from_json(const nlohmann::json& doc) {
  std::vector<Interval> bounds;
  for (const auto& b : doc.at("bounds")) bounds.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
  return build_grid(doc.at("dim").get<int>(), std::move(bounds), doc.at("n_per_axis").get<Index>(),
                    density_from_tag(doc.value("density_tag", std::string("lebesgue"))));
}

}  // namespace gmc
