#include "vmint/kernel.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <regex>
#include <sstream>

namespace vmint {

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::string KernelSpec::to_string() const {
  std::string s;
  switch (family) {
    case KernelFamily::nearest_neighbor: s = "nearest_neighbor"; break;
    case KernelFamily::uniform_range: s = "uniform_range(" + std::to_string(range) + ")"; break;
    case KernelFamily::geometric: s = "geometric(" + format_double(q) + ")"; break;
    case KernelFamily::power_law:
      s = "power_law(" + format_double(alpha) + ", " + std::to_string(cutoff) + ")";
      break;
    case KernelFamily::table: s = "table(" + path + ")"; break;
    case KernelFamily::derived: s = "derived"; break;
  }
  if (center) s += "+centered";
  return s;
}

KernelSpec parse_kernel_spec(std::string_view text) {
  static const std::regex pattern(R"(^\s*([a-z_]+)\s*(?:\(\s*([^,\)]*?)\s*(?:,\s*([^\)]*?)\s*)?\))?\s*$)");
  std::string input(text);
  bool center = false;
  if (auto pos = input.find("+centered"); pos != std::string::npos) {
    center = true;
    input.erase(pos);
  }
  std::smatch m;
  if (!std::regex_match(input, m, pattern)) throw KernelError("malformed kernel spec: " + std::string(text));
  const std::string name = m[1];
  const std::string a = m[2];
  const std::string b = m[3];
  auto to_int = [&](const std::string& v) {
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
      throw KernelError("expected integer in kernel spec, got '" + v + "'");
    return out;
  };
  auto to_real = [&](const std::string& v) {
    try {
      std::size_t used = 0;
      double out = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw KernelError("expected number in kernel spec, got '" + v + "'");
    }
  };

  KernelSpec spec;
  spec.center = center;
  if (name == "nearest_neighbor" && a.empty()) {
    spec.family = KernelFamily::nearest_neighbor;
  } else if (name == "uniform_range" && !a.empty() && b.empty()) {
    spec.family = KernelFamily::uniform_range;
    spec.range = to_int(a);
  } else if (name == "geometric" && !a.empty() && b.empty()) {
    spec.family = KernelFamily::geometric;
    spec.q = to_real(a);
  } else if (name == "power_law" && !a.empty() && !b.empty()) {
    spec.family = KernelFamily::power_law;
    spec.alpha = to_real(a);
    spec.cutoff = static_cast<std::int64_t>(to_real(b));
    if (static_cast<double>(spec.cutoff) != to_real(b))
      throw KernelError("power_law cutoff must be an integer");
  } else if (name == "table" && !a.empty() && b.empty()) {
    spec.family = KernelFamily::table;
    spec.path = a;
  } else {
    throw KernelError("unknown kernel spec: " + std::string(text));
  }
  return spec;
}

// ---------------------------------------------------------------------------

InverseCdf::InverseCdf(std::span<const std::int64_t> values, std::span<const double> weights) {
  // Heaviest entries first keeps the hot part of the table small.
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < weights.size(); ++i)
    if (weights[i] > 0) order.push_back(i);
  if (order.empty()) return;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
  std::vector<long double> acc;
  long double running = 0;
  for (std::size_t i : order) {
    running += weights[i];
    values_.push_back(values[i]);
    acc.push_back(running);
  }
  cdf_.resize(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) cdf_[i] = static_cast<double>(acc[i] / running);
  cdf_.back() = 1.0;

  // A power of two, so u * g is exact and the bucket never overshoots u.
  const std::size_t g = std::bit_floor(std::min<std::size_t>(cdf_.size(), 4096));
  guide_.resize(g + 1);
  std::size_t i = 0;
  for (std::size_t j = 0; j < g; ++j) {
    const double level = static_cast<double>(j) / static_cast<double>(g);
    while (cdf_[i] <= level) ++i;
    guide_[j] = static_cast<std::uint32_t>(i);
  }
  guide_[g] = static_cast<std::uint32_t>(cdf_.size() - 1);
}

std::int64_t InverseCdf::sample(Rng& rng) const {
  const double u = rng.uniform();
  const auto j = static_cast<std::size_t>(u * static_cast<double>(guide_.size() - 1));
  const auto first = cdf_.begin() + guide_[j];
  const auto last = cdf_.begin() + guide_[j + 1] + 1;
  return values_[static_cast<std::size_t>(std::upper_bound(first, last, u) - cdf_.begin())];
}

// ---------------------------------------------------------------------------

Kernel Kernel::from_masses(std::vector<std::pair<std::int64_t, double>> entries, std::string tag,
                           KernelFamily family) {
  std::map<std::int64_t, double> merged;
  for (const auto& [site, mass] : entries) {
    if (!(mass >= 0.0) || !std::isfinite(mass))
      throw KernelError("negative or non-finite mass at site " + std::to_string(site));
    if (mass > 0.0) merged[site] += mass;
  }
  Kernel k;
  k.tag_ = std::move(tag);
  k.family_ = family;
  for (const auto& [site, mass] : merged) {
    k.sites_.push_back(site);
    k.masses_.push_back(mass);
  }
  k.finalize();
  return k;
}

void Kernel::finalize() {
  long double total = 0;
  radius_ = 0;
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    total += masses_[i];
    radius_ = std::max(radius_, std::abs(sites_[i]));
  }
  total_ = static_cast<double>(total);
  sampler_ = InverseCdf(sites_, masses_);

  const auto n = static_cast<std::size_t>(radius_ + 2);
  std::vector<double> pos(n, 0.0), neg(n, 0.0);
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    if (sites_[i] > 0) pos[static_cast<std::size_t>(sites_[i])] = masses_[i];
    if (sites_[i] < 0) neg[static_cast<std::size_t>(-sites_[i])] = masses_[i];
  }
  pos_tail_.assign(n, 0.0);
  neg_tail_.assign(n, 0.0);
  pos_double_tail_.assign(n + 1, 0.0);
  neg_double_tail_.assign(n + 1, 0.0);
  long double tp = 0, tn = 0, dp = 0, dn = 0;
  for (std::size_t m = n; m-- > 1;) {
    tp += pos[m];
    tn += neg[m];
    pos_tail_[m] = static_cast<double>(tp);
    neg_tail_[m] = static_cast<double>(tn);
    dp += tp;
    dn += tn;
    pos_double_tail_[m] = static_cast<double>(dp);
    neg_double_tail_[m] = static_cast<double>(dn);
  }
  pos_tail_[0] = pos_tail_[1];
  neg_tail_[0] = neg_tail_[1];
  pos_first_ = pos_double_tail_[1];
  neg_first_ = neg_double_tail_[1];

  std::vector<std::int64_t> d(n);
  std::vector<double> wp(n), wn(n);
  for (std::size_t m = 0; m < n; ++m) {
    d[m] = static_cast<std::int64_t>(m);
    wp[m] = static_cast<double>(m) * pos[m];
    wn[m] = static_cast<double>(m) * neg[m];
  }
  pos_biased_ = InverseCdf(d, wp);
  neg_biased_ = InverseCdf(d, wn);
}

double Kernel::mass(std::int64_t x) const {
  auto it = std::lower_bound(sites_.begin(), sites_.end(), x);
  if (it == sites_.end() || *it != x) return 0.0;
  return masses_[static_cast<std::size_t>(it - sites_.begin())];
}

double Kernel::mean() const {
  long double s = 0;
  for (std::size_t i = 0; i < sites_.size(); ++i) s += static_cast<long double>(sites_[i]) * masses_[i];
  return static_cast<double>(s);
}

bool Kernel::is_symmetric() const {
  for (std::size_t i = 0; i < sites_.size(); ++i)
    if (mass(-sites_[i]) != masses_[i]) return false;
  return true;
}

std::int64_t Kernel::sample(Rng& rng) const {
  if (sampler_.empty()) throw KernelError("cannot sample from an empty kernel");
  return sampler_.sample(rng);
}

double Kernel::moment(double order) const {
  if (order < 0) throw KernelError("moment order must be nonnegative");
  long double s = 0;
  for (std::size_t i = 0; i < sites_.size(); ++i)
    s += std::pow(static_cast<long double>(std::abs(sites_[i])), static_cast<long double>(order)) * masses_[i];
  return static_cast<double>(s);
}

double Kernel::tail_mass(std::int64_t m, TailSide side) const {
  if (m < 1) throw KernelError("tail_mass requires m >= 1");
  if (m > radius_) return 0.0;
  const auto i = static_cast<std::size_t>(m);
  switch (side) {
    case TailSide::positive: return pos_tail_[i];
    case TailSide::negative: return neg_tail_[i];
    case TailSide::two_sided: break;
  }
  return pos_tail_[i] + neg_tail_[i];
}

double Kernel::double_tail(std::int64_t d, TailSide side) const {
  if (d < 1) throw KernelError("double_tail requires d >= 1");
  if (d > radius_) return 0.0;
  const auto i = static_cast<std::size_t>(d);
  switch (side) {
    case TailSide::positive: return pos_double_tail_[i];
    case TailSide::negative: return neg_double_tail_[i];
    case TailSide::two_sided: break;
  }
  return pos_double_tail_[i] + neg_double_tail_[i];
}

std::int64_t Kernel::sample_size_biased(TailSide side, Rng& rng) const {
  const InverseCdf& s = side == TailSide::negative ? neg_biased_ : pos_biased_;
  if (s.empty()) throw KernelError("kernel has no mass on the requested side");
  return s.sample(rng);
}

// ---------------------------------------------------------------------------

bool is_irreducible(const Kernel& kernel) {
  std::int64_t g = 0;
  for (auto x : kernel.sites()) g = std::gcd(g, std::abs(x));
  return g == 1;
}

namespace {

std::vector<std::pair<std::int64_t, double>> family_masses(const KernelSpec& spec) {
  std::vector<std::pair<std::int64_t, double>> out;
  switch (spec.family) {
    case KernelFamily::nearest_neighbor:
      out = {{-1, 0.5}, {1, 0.5}};
      break;
    case KernelFamily::uniform_range: {
      if (spec.range < 1) throw KernelError("uniform_range requires R >= 1");
      const double w = 1.0 / static_cast<double>(2 * spec.range);
      for (std::int64_t x = 1; x <= spec.range; ++x) {
        out.emplace_back(-x, w);
        out.emplace_back(x, w);
      }
      break;
    }
    case KernelFamily::geometric: {
      if (!(spec.q > 0.0 && spec.q < 1.0)) throw KernelError("geometric requires q in (0,1)");
      // Truncated where q^(n-1) drops below 1e-17 of the leading mass.
      const auto n = static_cast<std::int64_t>(std::ceil(std::log(1e-17) / std::log(spec.q))) + 1;
      double w = 1.0;
      for (std::int64_t x = 1; x <= n; ++x, w *= spec.q) {
        out.emplace_back(-x, w);
        out.emplace_back(x, w);
      }
      break;
    }
    case KernelFamily::power_law: {
      if (!(spec.alpha > 0.0)) throw KernelError("power_law requires alpha > 0");
      if (spec.cutoff < 1) throw KernelError("power_law requires cutoff >= 1");
      for (std::int64_t x = 1; x <= spec.cutoff; ++x) {
        const double w = std::pow(static_cast<double>(x), -(1.0 + spec.alpha));
        out.emplace_back(-x, w);
        out.emplace_back(x, w);
      }
      break;
    }
    case KernelFamily::table:
      out = load_kernel_table(spec.path);
      break;
    case KernelFamily::derived:
      throw KernelError("derived kernels cannot be built from a spec");
  }
  return out;
}

}  // namespace

Kernel build_kernel(const KernelSpec& spec) {
  auto entries = family_masses(spec);
  long double total = 0;
  bool had_zero = false;
  for (auto& [site, mass] : entries) {
    if (!(mass >= 0.0) || !std::isfinite(mass))
      throw KernelError("kernel table has a negative or non-finite mass at site " + std::to_string(site));
    if (site == 0 && mass > 0.0) {
      had_zero = true;
      mass = 0.0;
    }
    total += mass;
  }
  if (had_zero) std::clog << "warning: dropped self-jump mass at site 0 and renormalized\n";
  if (!(total > 0)) throw KernelError("kernel table cannot be normalized (no positive mass off 0)");
  for (auto& e : entries) e.second = static_cast<double>(e.second / total);

  Kernel k = Kernel::from_masses(std::move(entries), spec.to_string(), spec.family);
  if (!is_irreducible(k)) throw KernelError("kernel not irreducible");
  if (!k.is_symmetric() && std::abs(k.mean()) > 1e-12) {
    if (spec.center) {
      std::clog << "warning: kernel " << k.tag() << " is not centered; using its symmetrization\n";
      return symmetrize(k);
    }
    std::clog << "warning: kernel " << k.tag() << " has nonzero mean " << k.mean() << "\n";
  }
  return k;
}

Kernel symmetrize(const Kernel& kernel) {
  std::vector<std::pair<std::int64_t, double>> entries;
  std::vector<std::int64_t> seen;
  for (auto x : kernel.sites()) {
    const std::int64_t a = std::abs(x);
    if (std::find(seen.begin(), seen.end(), a) != seen.end()) continue;
    seen.push_back(a);
  }
  for (auto a : seen) {
    const double q = (kernel.mass(a) + kernel.mass(-a)) / 2.0;
    entries.emplace_back(-a, q);
    entries.emplace_back(a, q);
  }
  return Kernel::from_masses(std::move(entries), "sym(" + kernel.tag() + ")", kernel.family());
}

SplitKernel split_at(const Kernel& kernel, std::int64_t threshold) {
  if (threshold < 1) throw KernelError("split threshold must be >= 1");
  std::vector<std::pair<std::int64_t, double>> near, far;
  for (std::size_t i = 0; i < kernel.sites().size(); ++i) {
    const auto x = kernel.sites()[i];
    (std::abs(x) <= threshold ? near : far).emplace_back(x, kernel.masses()[i]);
  }
  const std::string t = std::to_string(threshold);
  return {Kernel::from_masses(std::move(near), kernel.tag() + "|<=" + t, KernelFamily::derived),
          Kernel::from_masses(std::move(far), kernel.tag() + "|>" + t, KernelFamily::derived)};
}

// ---------------------------------------------------------------------------

std::vector<std::pair<std::int64_t, double>> read_kernel_table(std::istream& in) {
  std::vector<std::pair<std::int64_t, double>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::int64_t site = 0;
    double mass = 0.0;
    if (!(ls >> site)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw KernelError("kernel table line " + std::to_string(lineno) + ": expected 'site mass'");
    }
    if (!(ls >> mass)) throw KernelError("kernel table line " + std::to_string(lineno) + ": missing mass");
    std::string rest;
    if (ls >> rest) throw KernelError("kernel table line " + std::to_string(lineno) + ": trailing text");
    out.emplace_back(site, mass);
  }
  return out;
}

std::vector<std::pair<std::int64_t, double>> load_kernel_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw KernelError("cannot open kernel table " + path);
  return read_kernel_table(in);
}

void write_kernel_table(const Kernel& kernel, std::ostream& out) {
  out << "# site mass (" << kernel.tag() << ")\n";
  for (std::size_t i = 0; i < kernel.sites().size(); ++i)
    out << kernel.sites()[i] << ' ' << std::setprecision(17) << kernel.masses()[i] << '\n';
}

}  // namespace vmint
