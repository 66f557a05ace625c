#include "torus_waves/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "torus_waves/errors.hpp"
#include "torus_waves/zeros.hpp"

namespace torus_waves {

namespace {

constexpr double kPi = std::numbers::pi;

Vec3 as_vec(const LatticePoint& p) {
  return Vec3(static_cast<double>(p[0]), static_cast<double>(p[1]), static_cast<double>(p[2]));
}

template <class T>
T median_of(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw Error(ErrorCode::InvalidArgument, "bad number '" + s + "'");
  return v;
}

}  // namespace

std::size_t min_cover_count(std::vector<double> values, double len) {
  if (!(len > 0.0)) throw Error(ErrorCode::InvalidArgument, "cover length must be positive");
  std::sort(values.begin(), values.end());
  std::size_t count = 0;
  for (std::size_t i = 0; i < values.size();) {
    const double end = values[i] + len;
    ++count;
    while (i < values.size() && values[i] <= end) ++i;
  }
  return count;
}

EquiReport check_assumption_equi(const LatticeSet& lattice, std::size_t directions, double eps0,
                                 std::optional<double> radius) {
  if (lattice.dim() != 2) throw Error(ErrorCode::InvalidArgument, "cover check requires d = 2");
  if (directions == 0) throw Error(ErrorCode::InvalidArgument, "need at least one direction");
  EquiReport r;
  r.directions = directions;
  r.eps0 = eps0;
  r.radius = radius.value_or(1.0 / (2.0 * kPi * lattice.lambda()));
  const double N = static_cast<double>(lattice.size());
  r.threshold = std::pow(N, eps0);
  if (lattice.empty()) return r;
  const auto pts = lattice.points();
  std::vector<double> proj(pts.size());
  for (std::size_t k = 0; k < directions; ++k) {
    const double th = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(directions);
    const double rx = r.radius * std::cos(th), ry = r.radius * std::sin(th);
    for (std::size_t i = 0; i < pts.size(); ++i) proj[i] = rx * pts[i][0] + ry * pts[i][1];
    r.counts.push_back(min_cover_count(proj, 1.0 / N));
  }
  r.min_count = *std::min_element(r.counts.begin(), r.counts.end());
  std::vector<double> as_real(r.counts.begin(), r.counts.end());
  r.median_count = median_of(as_real);
  r.passes = static_cast<double>(r.min_count) >= r.threshold;
  return r;
}

double discrepancy(const std::vector<double>& angles) {
  if (angles.empty()) throw Error(ErrorCode::InvalidArgument, "discrepancy needs at least one angle");
  std::vector<double> a(angles.size());
  std::transform(angles.begin(), angles.end(), a.begin(), [](double x) {
    const double y = x - std::floor(x);
    return y >= 1.0 ? 0.0 : y;
  });
  std::sort(a.begin(), a.end());
  std::vector<double> pos;
  std::vector<double> prefix{0.0};  // prefix[i] = points strictly before distinct value i
  for (std::size_t i = 0; i < a.size();) {
    std::size_t j = i;
    while (j < a.size() && a[j] == a[i]) ++j;
    pos.push_back(a[i]);
    prefix.push_back(static_cast<double>(j));
    i = j;
  }
  const std::size_t k = pos.size();
  const double N = static_cast<double>(a.size());
  auto mult = [&](std::size_t i) { return prefix[i + 1] - prefix[i]; };
  double best = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      // Counterclockwise arc from pos[i] to pos[j].
      double closed_count, len;
      if (j >= i) {
        closed_count = prefix[j + 1] - prefix[i];
        len = pos[j] - pos[i];
      } else {
        closed_count = (N - prefix[i]) + prefix[j + 1];
        len = 1.0 - pos[i] + pos[j];
      }
      best = std::max(best, closed_count - N * len);
      if (i == j) {
        // The whole circle minus the point: length 1, N - mult points.
        best = std::max(best, mult(i));
      } else {
        const double open_count = closed_count - mult(i) - mult(j);
        best = std::max(best, N * len - open_count);
      }
    }
  }
  return std::clamp(best, 0.0, N);
}

Assumption21Ratios assumption21_ratios(const LatticeSet& lattice, const Curve& curve,
                                       std::size_t grid) {
  if (grid < 64) throw Error(ErrorCode::InvalidArgument, "grid must be at least 64");
  if (lattice.empty()) throw Error(ErrorCode::InvalidArgument, "empty lattice");
  if (curve.dim() != lattice.dim()) throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
  constexpr int kDisk = 32;
  const double lambda = lattice.lambda();
  const auto reps = lattice.representatives();
  std::vector<Vec3> mus;
  for (const auto& p : reps) mus.push_back(as_vec(p));

  Assumption21Ratios out;
  out.complex_disk = curve.has_complex_extension();
  const double len = curve.length();
  for (std::size_t i = 0; i < grid; ++i) {
    const double t = len * static_cast<double>(i) / static_cast<double>(grid - 1);
    const CurveJet jet = curve.jet(t);
    double sum = 0.0, dsum = 0.0, fmax = 0.0;
    for (const auto& mu : mus) {
      const double phase = 2.0 * kPi * mu.dot(jet.position);
      const double g = std::cos(phase), h = std::sin(phase);
      const double w = 2.0 * kPi * mu.dot(jet.velocity) / lambda;
      sum += g * g + h * h;
      dsum += w * w;
      fmax = std::max({fmax, std::abs(g), std::abs(h)});
    }
    out.delocalization = std::max(out.delocalization, fmax / std::sqrt(sum));
    out.derivative_growth_first = std::max(out.derivative_growth_first, dsum / sum);

    double second = 0.0;
    for (int k = 0; k < kDisk; ++k) {
      const double th = 2.0 * kPi * k / kDisk;
      if (out.complex_disk) {
        const std::complex<double> s = t + std::polar(1.0, th) / lambda;
        const ComplexCurveJet cj = curve.complex_jet(s);
        for (const auto& mu : mus) {
          const CVec3 mc = mu.cast<std::complex<double>>();
          const auto phase = 2.0 * kPi * mc.dot(cj.position);
          const auto w1 = 2.0 * kPi * mc.dot(cj.velocity) / lambda;
          const auto w2 = 2.0 * kPi * mc.dot(cj.acceleration) / (lambda * lambda);
          const auto c = std::cos(phase), sn = std::sin(phase);
          second = std::max({second, std::norm(-c * w1 * w1 - sn * w2),
                             std::norm(-sn * w1 * w1 + c * w2)});
        }
      } else {
        const double s = std::clamp(t + (2.0 * k / (kDisk - 1) - 1.0) / lambda, 0.0, len);
        const CurveJet rj = curve.jet(s);
        for (const auto& mu : mus) {
          const double phase = 2.0 * kPi * mu.dot(rj.position);
          const double w1 = 2.0 * kPi * mu.dot(rj.velocity) / lambda;
          const double w2 = 2.0 * kPi * mu.dot(rj.acceleration) / (lambda * lambda);
          const double c = std::cos(phase), sn = std::sin(phase);
          const double gg = -c * w1 * w1 - sn * w2, hh = -sn * w1 * w1 + c * w2;
          second = std::max({second, gg * gg, hh * hh});
        }
      }
    }
    out.derivative_growth_second = std::max(out.derivative_growth_second, second / sum);
  }
  return out;
}

double GapSpec::volume() const {
  double v = 1.0;
  for (auto n : dims) v *= 2.0 * static_cast<double>(n) + 1.0;
  return v;
}

std::size_t gap_circle_probe(const GapSpec& gap, double delta, double eps) {
  if (gap.generators.size() != gap.dims.size() || gap.rank() > 3) {
    throw Error(ErrorCode::InvalidArgument, "GAP needs rank <= 3 and one length per generator");
  }
  if (std::any_of(gap.dims.begin(), gap.dims.end(), [](auto n) { return n < 1; })) {
    throw Error(ErrorCode::InvalidArgument, "GAP lengths must be positive");
  }
  if (!(delta > 0.0 && delta < 1.0) || !(eps >= 0.0 && eps < delta)) {
    throw Error(ErrorCode::InvalidArgument, "need 0 < delta < 1 and 0 <= eps < delta");
  }
  if (gap.volume() > kGapVolumeCap) {
    throw Error(ErrorCode::VolumeCapExceeded, "GAP volume exceeds the enumeration cap");
  }

  std::vector<double> args;
  const std::size_t r = gap.rank();
  std::vector<std::int64_t> n(r);
  for (std::size_t i = 0; i < r; ++i) n[i] = -gap.dims[i];
  while (true) {
    std::complex<double> z = gap.offset;
    for (std::size_t i = 0; i < r; ++i) z += static_cast<double>(n[i]) * gap.generators[i];
    if (std::abs(std::abs(z) - 1.0) <= eps) {
      double a = std::arg(z);
      if (a < 0.0) a += 2.0 * kPi;
      args.push_back(a);
    }
    std::size_t i = 0;
    while (i < r && n[i] == gap.dims[i]) {
      n[i] = -gap.dims[i];
      ++i;
    }
    if (i == r) break;
    ++n[i];
  }
  if (args.empty()) return 0;
  std::sort(args.begin(), args.end());

  const std::size_t k = args.size();
  const double sep = 2.0 * std::asin(delta / 2.0);
  auto unrolled = [&](std::size_t u) { return u < k ? args[u] : args[u - k] + 2.0 * kPi; };
  // next[i]: first unrolled index after i at angular distance >= sep.
  std::vector<std::size_t> next(k);
  std::size_t j = 1;
  for (std::size_t i = 0; i < k; ++i) {
    j = std::max(j, i + 1);
    while (j < i + k && unrolled(j) - args[i] < sep) ++j;
    next[i] = j;
  }
  std::size_t best = 1;
  for (std::size_t s = 0; s < k; ++s) {
    const double limit = args[s] + 2.0 * kPi - sep;
    std::size_t cur = s, count = 1;
    while (true) {
      const std::size_t nx = next[cur % k] + (cur / k) * k;
      if (nx >= s + k || unrolled(nx) > limit) break;
      cur = nx;
      ++count;
    }
    best = std::max(best, count);
  }
  return best;
}

double bad_set_measure(const Curve& curve, const LatticeSet& lattice, std::optional<double> kappa) {
  const double kap = kappa.value_or(lattice.empty() ? 0.0 : default_kappa(lattice));
  if (kap <= 0.0 || lattice.size() < 2) return 0.0;
  double total = 0.0;
  for (const auto& iv : bad_intervals(curve, lattice, kap)) total += iv.length();
  return total;
}

DiagnosticsReport diagnose(const LatticeSet& lattice, const Curve& curve,
                           const DiagnosticsOptions& options) {
  if (lattice.empty()) throw Error(ErrorCode::InvalidLevel, "level has no lattice points");
  DiagnosticsReport r;
  r.m = lattice.level();
  r.d = lattice.dim();
  r.N = lattice.size();
  r.min_sep = lattice.size() >= 2 ? min_separation(lattice) : 0.0;
  if (r.d == 2) r.B_arc = arc_concentration(lattice);
  if (r.d == 2) {
    r.tau4 = fourth_fourier(lattice);
    r.discrepancy = discrepancy(angles(lattice));
    r.cover = check_assumption_equi(lattice, options.directions, options.eps0, options.cover_radius);
  }
  const Assumption21Ratios ratios = assumption21_ratios(lattice, curve, options.ratio_grid);
  r.delocalization_ratio = ratios.delocalization;
  r.derivative_growth_ratio = ratios.derivative_growth_first;
  r.derivative_growth_second = ratios.derivative_growth_second;
  if (options.all && r.d == 2) r.bad_set_measure = bad_set_measure(curve, lattice);
  return r;
}

std::vector<ScanRow> scan_levels(std::int64_t max_m) {
  if (max_m < 1) throw Error(ErrorCode::InvalidArgument, "scan bound must be positive");
  std::vector<ScanRow> rows;
  for (std::int64_t m = 1; m <= max_m; ++m) {
    const LatticeSet l = enumerate_lattice(2, m);
    if (l.empty()) continue;
    ScanRow row;
    row.m = m;
    row.N = l.size();
    row.min_sep = min_separation(l);
    const double md = static_cast<double>(m);
    row.normalized_sep = row.min_sep * std::pow(std::log(md), 1.5) / std::sqrt(md);
    row.B_arc = arc_concentration(l);
    row.tau4 = fourth_fourier(l);
    row.discrepancy = discrepancy(angles(l));
    rows.push_back(row);
  }
  return rows;
}

std::string scan_csv(const std::vector<ScanRow>& rows) {
  std::ostringstream out;
  out.precision(17);
  out << "m,N,min_sep,normalized_sep,B_arc,tau4,discrepancy\n";
  for (const auto& r : rows) {
    out << r.m << ',' << r.N << ',' << r.min_sep << ',' << r.normalized_sep << ',' << r.B_arc << ','
        << r.tau4 << ',' << r.discrepancy << '\n';
  }
  return out.str();
}

Histogram histogram(const std::vector<double>& values, std::size_t bins) {
  if (bins == 0) throw Error(ErrorCode::InvalidArgument, "need at least one bin");
  Histogram h;
  h.counts.assign(bins, 0);
  if (values.empty()) return h;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  h.lo = *lo;
  h.width = *hi > *lo ? (*hi - *lo) / static_cast<double>(bins) : 1.0;
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - h.lo) / h.width);
    h.counts[std::min(b, bins - 1)]++;
  }
  return h;
}

void to_json(nlohmann::json& j, const EquiReport& r) {
  j = nlohmann::json{{"directions", r.directions}, {"radius", r.radius},
                     {"eps0", r.eps0},             {"threshold", r.threshold},
                     {"counts", r.counts},         {"min", r.min_count},
                     {"median", r.median_count},   {"passes", r.passes}};
}

void to_json(nlohmann::json& j, const Assumption21Ratios& r) {
  j = nlohmann::json{{"delocalization", r.delocalization},
                     {"derivative_growth_first", r.derivative_growth_first},
                     {"derivative_growth_second", r.derivative_growth_second},
                     {"complex_disk", r.complex_disk}};
}

void to_json(nlohmann::json& j, const DiagnosticsReport& r) {
  auto opt = [](const auto& o) { return o ? nlohmann::json(*o) : nlohmann::json(nullptr); };
  j = nlohmann::json{{"m", r.m},
                     {"d", r.d},
                     {"N", r.N},
                     {"min_sep", r.min_sep},
                     {"B_arc", opt(r.B_arc)},
                     {"tau4", opt(r.tau4)},
                     {"discrepancy", opt(r.discrepancy)},
                     {"cover", opt(r.cover)},
                     {"delocalization_ratio", r.delocalization_ratio},
                     {"derivative_growth_ratio", r.derivative_growth_ratio},
                     {"derivative_growth_second", r.derivative_growth_second},
                     {"bad_set_measure", opt(r.bad_set_measure)}};
  if (r.gap_probe) j["gap_probe"] = *r.gap_probe;
}

void to_json(nlohmann::json& j, const Histogram& h) {
  j = nlohmann::json{{"lo", h.lo}, {"width", h.width}, {"counts", h.counts}};
}

GapSpec gap_spec_from_string(const std::string& text) {
  // rank:g0re,g0im;g1re,g1im;...:N1,...,Nr
  const auto parts = split(text, ':');
  if (parts.size() != 3) throw Error(ErrorCode::InvalidArgument, "GAP format is rank:gens:dims");
  const double rank_d = parse_double(parts[0]);
  const auto rank = static_cast<std::size_t>(rank_d);
  if (rank_d != static_cast<double>(rank)) throw Error(ErrorCode::InvalidArgument, "bad GAP rank");
  const auto gens = split(parts[1], ';');
  const auto dims = split(parts[2], ',');
  if (gens.size() != rank + 1 || dims.size() != rank) {
    throw Error(ErrorCode::InvalidArgument, "GAP needs rank+1 generators and rank lengths");
  }
  GapSpec g;
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const auto c = split(gens[i], ',');
    if (c.size() != 2) throw Error(ErrorCode::InvalidArgument, "generator must be re,im");
    const std::complex<double> z(parse_double(c[0]), parse_double(c[1]));
    if (i == 0) g.offset = z; else g.generators.push_back(z);
  }
  for (const auto& d : dims) {
    const double v = parse_double(d);
    if (v != std::floor(v)) throw Error(ErrorCode::InvalidArgument, "GAP lengths must be integers");
    g.dims.push_back(static_cast<std::int64_t>(v));
  }
  return g;
}

}  // namespace torus_waves
