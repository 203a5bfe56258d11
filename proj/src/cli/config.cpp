#include "gmc/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "gmc/verify.hpp"

namespace gmc::cli {

namespace {

using json = nlohmann::json;

enum class Kind { Int, Uint, Real, Text, Bool, TextList, RealList, MatrixRows, PairList };

const std::map<std::string, Kind>& key_kinds() {
  static const std::map<std::string, Kind> kinds = {
      {"dim", Kind::Int},           {"n", Kind::Int},
      {"lo", Kind::Real},           {"hi", Kind::Real},
      {"density", Kind::Text},      {"kernel", Kind::Text},
      {"C", Kind::Real},            {"gamma", Kind::Real},
      {"g", Kind::Real},            {"matrix", Kind::MatrixRows},
      {"mollifiers", Kind::TextList}, {"eps_ladder", Kind::RealList},
      {"gamma_ladder", Kind::RealList}, {"replicas", Kind::Int},
      {"seed", Kind::Uint},         {"stream", Kind::Uint},
      {"suite", Kind::TextList},    {"z", Kind::Real},
      {"bonferroni", Kind::Bool},   {"out", Kind::Text},
      {"export_limit", Kind::Int},  {"pairs", Kind::PairList}};
  return kinds;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  T v{};
  const char* end = t.data() + t.size();
  auto [p, ec] = std::from_chars(t.data(), end, v);
  if (t.empty() || ec != std::errc() || p != end)
    throw ConfigError("invalid value '" + text + "' for key '" + key + "'");
  return v;
}

std::string join_reals(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + format_double(v[k]);
  return s;
}

template <typename T>
T get_as(const json& doc, const std::string& key) {
  try {
    return doc.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("wrong type for key '" + key + "'");
  }
}

}  // namespace

json parse_value(const std::string& key, const std::string& value) {
  const auto it = key_kinds().find(key);
  if (it == key_kinds().end()) throw ConfigError("unknown config key '" + key + "'");
  const std::string v = trim(value);
  switch (it->second) {
    case Kind::Int: return parse_number<std::int64_t>(key, v);
    case Kind::Uint: return parse_number<std::uint64_t>(key, v);
    case Kind::Real: return parse_number<double>(key, v);
    case Kind::Text: return v;
    case Kind::Bool:
      if (v == "true" || v == "1") return true;
      if (v == "false" || v == "0") return false;
      throw ConfigError("invalid boolean '" + v + "' for key '" + key + "'");
    case Kind::TextList: {
      json arr = json::array();
      if (!v.empty())
        for (const auto& s : split(v, ',')) arr.push_back(s);
      return arr;
    }
    case Kind::RealList: {
      json arr = json::array();
      if (!v.empty())
        for (const auto& s : split(v, ',')) arr.push_back(parse_number<double>(key, s));
      return arr;
    }
    case Kind::MatrixRows: {
      json rows = json::array();
      for (const auto& row : split(v, ';')) {
        json r = json::array();
        for (const auto& e : split(row, ',')) r.push_back(parse_number<double>(key, e));
        rows.push_back(r);
      }
      return rows;
    }
    case Kind::PairList: {
      json arr = json::array();
      if (!v.empty())
        for (const auto& p : split(v, ',')) {
          const auto ij = split(p, ':');
          if (ij.size() != 2) throw ConfigError("pairs are written i:j, got '" + p + "'");
          arr.push_back(json::array({parse_number<std::int64_t>(key, ij[0]),
                                     parse_number<std::int64_t>(key, ij[1])}));
        }
      return arr;
    }
  }
  throw ConfigError("unhandled key '" + key + "'");
}

json parse_key_values(const std::string& text) {
  json doc = json::object();
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (doc.contains(key)) throw ConfigError("duplicate key '" + key + "'");
    doc[key] = parse_value(key, line.substr(eq + 1));
  }
  return doc;
}

json parse_config_text(const std::string& text) {
  const std::string t = trim(text);
  if (!t.empty() && t.front() == '{') {
    try {
      return json::parse(t);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("invalid JSON config: ") + e.what());
    }
  }
  return parse_key_values(text);
}

json to_json(const RunConfig& c) {
  json matrix = nullptr;
  if (c.matrix) {
    matrix = json::array();
    for (Index i = 0; i < c.matrix->rows(); ++i) {
      json row = json::array();
      for (Index j = 0; j < c.matrix->cols(); ++j) row.push_back((*c.matrix)(i, j));
      matrix.push_back(row);
    }
  }
  json pairs = json::array();
  for (const auto& [i, j] : c.pairs) pairs.push_back(json::array({i, j}));
  return {{"dim", c.dim},
          {"n", c.n},
          {"lo", c.lo},
          {"hi", c.hi},
          {"density", c.density},
          {"kernel", c.kernel},
          {"C", c.C},
          {"gamma", c.gamma},
          {"g", c.g},
          {"matrix", matrix},
          {"mollifiers", c.mollifiers},
          {"eps_ladder", c.eps_ladder},
          {"gamma_ladder", c.gamma_ladder},
          {"replicas", c.replicas ? json(*c.replicas) : json(nullptr)},
          {"seed", c.seed},
          {"stream", c.stream},
          {"suite", c.suite},
          {"z", c.z},
          {"bonferroni", c.bonferroni},
          {"out", c.out},
          {"export_limit", c.export_limit},
          {"pairs", pairs}};
}

RunConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be an object");
  RunConfig c;
  for (const auto& [key, v] : doc.items()) {
    if (!key_kinds().count(key)) throw ConfigError("unknown config key '" + key + "'");
    if (key == "dim") c.dim = get_as<int>(v, key);
    else if (key == "n") c.n = get_as<Index>(v, key);
    else if (key == "lo") c.lo = get_as<double>(v, key);
    else if (key == "hi") c.hi = get_as<double>(v, key);
    else if (key == "density") c.density = get_as<std::string>(v, key);
    else if (key == "kernel") c.kernel = get_as<std::string>(v, key);
    else if (key == "C") c.C = get_as<double>(v, key);
    else if (key == "gamma") c.gamma = get_as<double>(v, key);
    else if (key == "g") c.g = get_as<double>(v, key);
    else if (key == "matrix") {
      if (v.is_null()) {
        c.matrix.reset();
        continue;
      }
      const auto rows = get_as<std::vector<std::vector<double>>>(v, key);
      Matrix m(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows[0].size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (static_cast<Index>(rows[i].size()) != m.cols()) throw ConfigError("matrix rows differ in length");
        for (std::size_t j = 0; j < rows[i].size(); ++j)
          m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
      }
      c.matrix = m;
    } else if (key == "mollifiers") c.mollifiers = get_as<std::vector<std::string>>(v, key);
    else if (key == "eps_ladder") c.eps_ladder = get_as<std::vector<double>>(v, key);
    else if (key == "gamma_ladder") c.gamma_ladder = get_as<std::vector<double>>(v, key);
    else if (key == "replicas") {
      if (v.is_null()) c.replicas.reset();
      else c.replicas = get_as<std::int64_t>(v, key);
    }
    else if (key == "seed") c.seed = get_as<std::uint64_t>(v, key);
    else if (key == "stream") c.stream = get_as<std::uint64_t>(v, key);
    else if (key == "suite") c.suite = get_as<std::vector<std::string>>(v, key);
    else if (key == "z") c.z = get_as<double>(v, key);
    else if (key == "bonferroni") c.bonferroni = get_as<bool>(v, key);
    else if (key == "out") c.out = get_as<std::string>(v, key);
    else if (key == "export_limit") c.export_limit = get_as<std::int64_t>(v, key);
    else if (key == "pairs") {
      c.pairs.clear();
      for (const auto& p : get_as<std::vector<std::vector<std::int64_t>>>(v, key)) {
        if (p.size() != 2) throw ConfigError("each pair needs two indices");
        c.pairs.emplace_back(p[0], p[1]);
      }
    }
  }
  validate(c);
  return c;
}

std::string emit_key_values(const RunConfig& c) {
  std::ostringstream os;
  auto texts = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + v[k];
    return s;
  };
  os << "dim = " << c.dim << '\n'
     << "n = " << c.n << '\n'
     << "lo = " << format_double(c.lo) << '\n'
     << "hi = " << format_double(c.hi) << '\n'
     << "density = " << c.density << '\n'
     << "kernel = " << c.kernel << '\n'
     << "C = " << format_double(c.C) << '\n'
     << "gamma = " << format_double(c.gamma) << '\n'
     << "g = " << format_double(c.g) << '\n';
  if (c.matrix) {
    os << "matrix = ";
    for (Index i = 0; i < c.matrix->rows(); ++i) {
      if (i) os << "; ";
      for (Index j = 0; j < c.matrix->cols(); ++j)
        os << (j ? "," : "") << format_double((*c.matrix)(i, j));
    }
    os << '\n';
  }
  os << "mollifiers = " << texts(c.mollifiers) << '\n'
     << "eps_ladder = " << join_reals(c.eps_ladder) << '\n'
     << "gamma_ladder = " << join_reals(c.gamma_ladder) << '\n'
     ;
  if (c.replicas) os << "replicas = " << *c.replicas << '\n';
  os << "seed = " << c.seed << '\n'
     << "stream = " << c.stream << '\n'
     << "suite = " << texts(c.suite) << '\n'
     << "z = " << format_double(c.z) << '\n'
     << "bonferroni = " << (c.bonferroni ? "true" : "false") << '\n'
     << "out = " << c.out << '\n'
     << "export_limit = " << c.export_limit << '\n'
     << "pairs = ";
  for (std::size_t k = 0; k < c.pairs.size(); ++k)
    os << (k ? "," : "") << c.pairs[k].first << ':' << c.pairs[k].second;
  os << '\n';
  return os.str();
}

std::uint64_t config_hash(const RunConfig& c) {
  nlohmann::json j = to_json(c);
  j.erase("out");
  return hash_string(j.dump());
}

void validate(const RunConfig& c) {
  if (c.dim < 1 || c.dim > 3) throw ConfigError("dim must be 1, 2 or 3");
  if (c.n < 1) throw ConfigError("n must be >= 1");
  double cells = 1.0;
  for (int d = 0; d < c.dim; ++d) cells *= static_cast<double>(c.n);
  if (cells > 4096.0) throw ConfigError("grid has more than 4096 cells");
  if (!(std::isfinite(c.lo) && std::isfinite(c.hi) && c.hi > c.lo))
    throw ConfigError("need finite lo < hi");
  if (c.density != "lebesgue" && c.density != "ramp")
    throw ConfigError("unknown density '" + c.density + "' (known: lebesgue, ramp)");
  static const std::set<std::string> kernels = {"kahane", "log", "zero", "explicit"};
  if (!kernels.count(c.kernel))
    throw ConfigError("unknown kernel '" + c.kernel + "' (known: kahane, log, zero, explicit)");
  if (!(std::isfinite(c.gamma) && c.gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
  if (!(std::isfinite(c.C) && c.C > 1.0)) throw ConfigError("C must be > 1");
  if (!std::isfinite(c.g)) throw ConfigError("g must be finite");
  if (c.kernel == "explicit") {
    if (!c.matrix) throw ConfigError("kernel 'explicit' needs a matrix");
    if (c.matrix->rows() != static_cast<Index>(cells) || c.matrix->cols() != c.matrix->rows())
      throw ConfigError("explicit matrix must be square with one row per grid cell");
  }
  if (c.mollifiers.size() != 2) throw ConfigError("mollifiers must name exactly two profiles");
  for (const auto& m : c.mollifiers)
    if (m != "box" && m != "triangle")
      throw ConfigError("unknown mollifier '" + m + "' (known: box, triangle)");
  for (std::size_t k = 0; k < c.eps_ladder.size(); ++k) {
    if (!(c.eps_ladder[k] > 0.0)) throw ConfigError("eps ladder entries must be > 0");
    if (k > 0 && !(c.eps_ladder[k] < c.eps_ladder[k - 1]))
      throw ConfigError("eps ladder must be strictly decreasing");
  }
  for (double g : c.gamma_ladder)
    if (!(std::isfinite(g) && g >= 0.0)) throw ConfigError("gamma ladder entries must be >= 0");
  if (c.replicas && *c.replicas < 1) throw ConfigError("replicas must be >= 1");
  if (!(c.z > 0.0)) throw ConfigError("z must be > 0");
  if (c.export_limit < 0) throw ConfigError("export_limit must be >= 0");
  if (c.out.empty()) throw ConfigError("out must not be empty");
  for (const auto& [i, j] : c.pairs)
    if (i < 0 || j < 0 || i >= static_cast<Index>(cells) || j >= static_cast<Index>(cells))
      throw ConfigError("pair index out of range");
  const auto& names = suite_names();
  for (const auto& s : c.suite) {
    if (std::find(names.begin(), names.end(), s) == names.end()) {
      std::string list;
      for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
      throw ConfigError("unknown suite '" + s + "'; valid suites: " + list);
    }
  }
}

DomainGrid make_grid(const RunConfig& c) {
  return build_grid(c.dim, Interval{c.lo, c.hi}, c.n, density_from_tag(c.density));
}

KernelSpec make_kernel(const RunConfig& c, const DomainGrid& grid, double gamma) {
  if (c.kernel == "kahane") return KernelSpec{KahaneFamily{c.C, gamma, 1.0}};
  if (c.kernel == "log") return KernelSpec{LogKernel{gamma, c.g, {}}};
  if (c.kernel == "zero") return KernelSpec{ExplicitKernel{Matrix::Zero(grid.size(), grid.size())}};
  return KernelSpec{ExplicitKernel{*c.matrix}};
}

KernelSpec make_kernel(const RunConfig& c, const DomainGrid& grid) {
  return make_kernel(c, grid, c.gamma);
}

json merge_flags(const json& file_doc, const std::map<std::string, std::string>& flags) {
  json out = file_doc.is_null() ? json::object() : file_doc;
  for (const auto& [key, text] : flags) {
    json v = parse_value(key, text);
    if (out.contains(key) && out[key] != v)
      throw ConfigError("flag for '" + key + "' conflicts with the config file value " +
                        out[key].dump());
    out[key] = std::move(v);
  }
  return out;
}

}  // namespace gmc::cli
