// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gmc/cli/commands.hpp"
#include "gmc/verify.hpp"

using namespace gmc;
namespace fs = std::filesystem;

namespace {

constexpr double kZ = 3.0;
constexpr double kShiftTol = 1e-12;
constexpr std::size_t kPairExcursions = 2;
constexpr double kMollifierFraction = 0.1;
constexpr double kScalingBand = 2.0;

const SeedRecord kMaster{7, 0};

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double time_limit;  // seconds, 0 = none
  std::function<Outcome()> run;
};

std::string num(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

bool all_pass(const std::vector<TestReport>& rs) {
  for (const auto& r : rs)
    if (!r.pass) return false;
  return true;
}

DomainGrid unit(Index n) { return build_grid(1, Interval{0.0, 1.0}, n); }

CovMatrix two_by_two() {
  Matrix K(2, 2);
  K << 1.0, 0.2, 0.2, 1.0;
  return CovMatrix::factorize(K);
}

Outcome shift_covariance() {
  Outcome o;
  const SeedRecord seed = kMaster.child(1);
  struct Case {
    std::string name;
    CovMatrix cov;
    DomainGrid grid;
  };
  const DomainGrid g64 = unit(64);
  std::vector<Case> cases = {
      {"2x2", two_by_two(), unit(2)},
      {"kahane C=16 N=64", eval_kernel(KernelSpec{KahaneFamily{16.0, 1.0, 1.0}}, g64), g64}};
  for (std::size_t c = 0; c < cases.size(); ++c) {
    double worst = 0.0;
    RandomStream fgen(seed.child(c).child(0));
    for (std::uint64_t f = 0; f < 10; ++f) {
      Vector fn(cases[c].grid.size());
      fgen.fill_normal(fn);
      const ShiftVector xi = shift_from_test_function(fn, cases[c].cov, cases[c].grid);
      const EnsembleSpec spec{cases[c].cov, cases[c].grid, 100, seed.child(c).child(1 + f), kZ};
      const TestReport r = test_shift_covariance(spec, xi, kShiftTol);
      worst = std::max(worst, r.estimate);
      o.pass = o.pass && r.pass;
    }
    o.detail += cases[c].name + " max rel err " + num(worst) + "; ";
  }
  o.detail += "limit " + num(kShiftTol);
  return o;
}

Outcome second_moments() {
  Outcome o;
  const SeedRecord seed = kMaster.child(2);
  const EnsembleSpec small{two_by_two(), unit(2), 100000, seed.child(0), kZ};
  const auto rs = test_second_moment(small, {{0, 1}, {0, 0}});
  for (const auto& r : rs) {
    o.pass = o.pass && r.pass;
    o.detail += "E[m" + r.metadata.at("i") + " m" + r.metadata.at("j") + "] " + num(r.estimate) +
                " vs " + num(r.target) + " (se " + num(r.se) + "); ";
  }
  const DomainGrid g16 = unit(16);
  const EnsembleSpec kahane{eval_kernel(KernelSpec{KahaneFamily{16.0, 0.5, 1.0}}, g16), g16, 100000,
                            seed.child(1), kZ};
  const auto pairs = test_second_moment(kahane, all_unordered_pairs(16));
  std::size_t excursions = 0;
  for (const auto& r : pairs)
    if (!r.pass) ++excursions;
  o.pass = o.pass && pairs.size() == 136 && excursions <= kPairExcursions;
  o.detail += "kahane C=16 gamma=0.5 N=16: " + std::to_string(excursions) + "/" +
              std::to_string(pairs.size()) + " pairs outside 3 SE (allowed " +
              std::to_string(kPairExcursions) + ")";
  return o;
}

Outcome expectation() {
  Outcome o;
  const SeedRecord seed = kMaster.child(3);
  const DomainGrid g = unit(64);
  std::uint64_t k = 0;
  for (double gamma : {0.5, 1.0}) {
    const EnsembleSpec spec{eval_kernel(KernelSpec{KahaneFamily{64.0, gamma, 1.0}}, g), g, 100000,
                            seed.child(k++), kZ};
    const TestReport r = test_expectation(spec);
    o.pass = o.pass && r.pass;
    o.detail += "gamma=" + num(gamma) + ": " + num(r.estimate) + " (se " + num(r.se) + "); ";
  }
  const EnsembleSpec zero{CovMatrix::factorize(Matrix::Zero(64, 64)), g, 1000, seed.child(k), kZ};
  const TestReport z = test_expectation(zero);
  o.pass = o.pass && z.se == 0.0 && z.estimate == z.target;
  o.detail += "zero kernel: " + num(z.estimate) + " se " + num(z.se);
  return o;
}

Outcome martingale() {
  const DomainGrid g = unit(64);
  const auto levels = sigma_positive_decompose(KahaneFamily{8.0, 1.0, 1.0}, g, 3);
  CellSet left;
  for (Index i = 0; i < 32; ++i) left.push_back(i);
  const TestReport r = test_martingale(levels, g, left, 1, 10000, kMaster.child(4), kZ);
  return {r.pass, "E[M2[A] | prefix] " + num(r.estimate) + " vs M1[A] " + num(r.target) + " (se " +
                      num(r.se) + ")"};
}

Outcome peyriere() {
  const SeedRecord seed = kMaster.child(5);
  const EnsembleSpec a{two_by_two(), unit(2), 100000, seed.child(0), kZ};
  Vector g(2);
  g << 1.0, 0.0;
  const TestReport lin = test_peyriere_linear(a, g, {1});
  const EnsembleSpec b{two_by_two(), unit(2), 100000, seed.child(1), kZ};
  const TestReport bnd = test_peyriere_bounded(b, [](double x) { return std::min(x, 3.0); }, 0, {0});
  return {lin.pass && bnd.pass,
          "linear " + num(lin.estimate) + " vs " + num(lin.target) + " (se " + num(lin.se) +
              "); bounded difference " + num(bnd.estimate) + " (pooled se " + num(bnd.se) + ")"};
}

Outcome mollifier() {
  const DomainGrid g = unit(512);
  const CovMatrix K = eval_kernel(KernelSpec{LogKernel{1.0, 0.0, {}}}, g);
  std::vector<double> ladder;
  for (int k = 2; k <= 6; ++k) ladder.push_back(std::ldexp(1.0, -k));
  const auto c = test_mollifier_independence(K, g, g, Mollifier::box(), Mollifier::triangle(), ladder,
                                             10000, kMaster.child(6), kZ, kMollifierFraction);
  std::string d;
  for (double x : c.distances) d += (d.empty() ? "" : ", ") + num(x);
  return {all_pass(c.reports), "D = [" + d + "], final limit " +
                                   num(kMollifierFraction * c.mean_mass)};
}

Outcome kahane() {
  const DomainGrid g = unit(32);
  const CovMatrix K1 = eval_kernel(KernelSpec{KahaneFamily{4.0, 1.0, 1.0}}, g);
  const CovMatrix K2 = CovMatrix::factorize(K1.entries().array() + 0.1);
  const auto rs = test_kahane_comparison(K1, K2, g, 100000, kMaster.child(7), kZ);
  std::string d;
  for (const auto& r : rs) {
    const auto f = r.metadata.find("f");
    d += (d.empty() ? "" : "; ") + (f == r.metadata.end() ? r.name : f->second) + " " +
         num(r.estimate) + " <= " + num(r.target) + (r.pass ? "" : " (fail)");
  }
  return {all_pass(rs), d};
}

Outcome wick() {
  const SeedRecord seed = kMaster.child(8);
  const auto orth = test_hermite_orthogonality(6, 100000, seed.child(0), kZ);
  std::size_t bad = 0;
  for (const auto& r : orth)
    if (!r.pass) ++bad;
  Outcome o{bad == 0, std::to_string(orth.size() - bad) + "/" + std::to_string(orth.size()) +
                          " orthogonality pairs within 3 SE"};
  for (int n : {2, 3}) {
    const TestReport r = wick_l2_check(two_by_two(), unit(2), n, 100000,
                                       seed.child(static_cast<std::uint64_t>(n)), kZ);
    o.pass = o.pass && r.pass;
    o.detail += "; l2 n=" + std::to_string(n) + " " + num(r.estimate) + " vs " + num(r.target) +
                " (se " + num(r.se) + ")";
  }
  return o;
}

Outcome nonatomicity_and_scaling() {
  const auto res = test_nonatomicity(KernelSpec{LogKernel{1.0, 0.0, {}}}, {unit(64), unit(128), unit(256)},
                                     10000, kMaster.child(9), kZ);
  std::string a;
  for (double x : res.atom_ratio) a += (a.empty() ? "" : ", ") + num(x);
  Outcome o{all_pass(res.reports), "A(N) = [" + a + "]"};
  std::vector<double> ladder;
  for (int k = 6; k <= 10; ++k) ladder.push_back(std::ldexp(1.0, -k));
  for (int n : {1, 2}) {
    const auto rs = test_kernel_scaling(LogKernel{1.0, 0.0, {}}, n, ladder, kScalingBand);
    double lo = 1e300, hi = 0.0;
    for (const auto& r : rs) {
      lo = std::min(lo, std::exp(r.estimate));
      hi = std::max(hi, std::exp(r.estimate));
    }
    o.pass = o.pass && all_pass(rs);
    o.detail += "; n=" + std::to_string(n) + " ratios in [" + num(lo) + ", " + num(hi) + "]";
  }
  return o;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream is(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    files[e.path().filename().string()] = ss.str();
  }
  return files;
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "gmc_acceptance_determinism";
  const std::vector<std::vector<std::string>> commands = {
      {"sample", "--n", "32", "--replicas", "20"},
      {"chaos", "--n", "16", "--replicas", "2000", "--export-limit", "5"},
      {"verify", "--suite", "exact,peyriere", "--replicas", "2000"},
      {"sweep", "--kernel", "log", "--n", "64", "--gamma-ladder", "0.5,1", "--eps-ladder", "0.25,0.125",
       "--replicas", "500"}};
  Outcome o;
  std::size_t files = 0;
  for (auto args : commands) {
    args.push_back("--out");
    args.push_back(dir.string());
    std::string first_out;
    std::map<std::string, std::string> first;
    for (int rep = 0; rep < 2; ++rep) {
      fs::remove_all(dir);
      std::ostringstream out, err;
      const int code = cli::run_cli(args, out, err);
      const auto snap = snapshot(dir);
      if (code != 0) {
        o.pass = false;
        o.detail += args[0] + " exited " + std::to_string(code) + "; ";
      }
      if (rep == 0) {
        first = snap;
        first_out = out.str();
      } else if (snap != first || out.str() != first_out) {
        o.pass = false;
        o.detail += args[0] + " output differs; ";
      }
    }
    files += first.size();
  }
  fs::remove_all(dir);
  o.detail += std::to_string(commands.size()) + " commands, " + std::to_string(files) +
              " files compared byte for byte";
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "exact shift covariance", 5, shift_covariance},
      {2, "second-moment identity", 60, second_moments},
      {3, "expectation normalization", 60, expectation},
      {4, "martingale property", 30, martingale},
      {5, "Peyriere identity", 60, peyriere},
      {6, "mollifier independence", 300, mollifier},
      {7, "Kahane comparison", 60, kahane},
      {8, "Wick calculus", 60, wick},
      {9, "nonatomicity trend and kernel-moment scaling", 300, nonatomicity_and_scaling},
      {10, "determinism", 0, determinism}};
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.time_limit <= 0 || secs < c.time_limit;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::cout << "criterion " << c.id << ": " << (pass ? "PASS" : "FAIL") << "  " << c.title << " | "
              << o.detail << " | " << num(secs) << " s";
    if (c.time_limit > 0) std::cout << " (limit " << num(c.time_limit) << " s)";
    if (!in_time) std::cout << " over time";
    std::cout << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria pass" : std::to_string(failed) + " criteria fail") << '\n';
  return failed == 0 ? 0 : 1;
}
