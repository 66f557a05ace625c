#include "torus_waves/zeros.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "torus_waves/errors.hpp"

namespace torus_waves {

namespace {

int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

struct Node {
  double t;
  FieldValue g;
};

class ZeroCounter {
 public:
  ZeroCounter(const WaveSample& sample, const CurveSampler& curve, const ZeroOptions& opt)
      : sample_(sample), curve_(curve), opt_(opt) {}

  FieldValue eval(double t) const { return evaluate_field(sample_, curve_.jet(t)); }

  bool near_miss(const Node& u, const Node& v) const {
    const double h = v.t - u.t;
    const double bound =
        opt_.near_threshold * std::max(std::abs(u.g.derivative), std::abs(v.g.derivative)) * h;
    return std::abs(u.g.value) < bound && std::abs(v.g.value) < bound;
  }

  double bisect(Node u, Node v) const {
    double a = u.t, b = v.t;
    double ga = u.g.value, gb = v.g.value;
    for (int iter = 0; iter < 200 && b - a > opt_.root_tolerance; ++iter) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      const double gm = eval(mid).value;
      if (gm == 0.0) return mid;
      if (sign_of(gm) == sign_of(ga)) {
        a = mid;
        ga = gm;
      } else {
        b = mid;
        gb = gm;
      }
    }
    return std::abs(ga) <= std::abs(gb) ? a : b;
  }

  // Processes the cell [u, v]; the caller has already accounted for an
  // exact zero at u.
  void cell(const Node& u, const Node& v, int depth) {
    const int su = sign_of(u.g.value);
    const int sv = sign_of(v.g.value);
    if (su * sv < 0) {
      roots.push_back(bisect(u, v));
      return;
    }
    if (su == 0 || sv == 0 || !near_miss(u, v)) return;
    if (depth >= opt_.max_escalations) {
      ++unresolved;
      return;
    }
    if (depth == 0) ++escalated;
    const int parts = opt_.subdivision;
    std::vector<Node> sub(parts + 1);
    sub.front() = u;
    sub.back() = v;
    for (int k = 1; k < parts; ++k) {
      const double t = u.t + (v.t - u.t) * k / parts;
      sub[k] = {t, eval(t)};
    }
    for (int k = 0; k < parts; ++k) {
      if (k > 0 && sub[k].g.value == 0.0) roots.push_back(sub[k].t);
      cell(sub[k], sub[k + 1], depth + 1);
    }
  }

  std::vector<double> roots;
  std::size_t unresolved = 0;
  std::size_t escalated = 0;

 private:
  const WaveSample& sample_;
  const CurveSampler& curve_;
  const ZeroOptions& opt_;
};

}  // namespace

ZeroCount count_zeros(const WaveSample& sample, const CurveSampler& curve,
                      std::optional<Interval> interval, const ZeroOptions& options) {
  if (!sample.lattice || sample.lattice->empty()) {
    throw Error(ErrorCode::InvalidSample, "sample has no lattice");
  }
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(sample.cos_coeffs.begin(), sample.cos_coeffs.end(), finite) ||
      !std::all_of(sample.sin_coeffs.begin(), sample.sin_coeffs.end(), finite)) {
    throw Error(ErrorCode::InvalidSample, "sample has non-finite coefficients");
  }
  if (sample.cos_coeffs.size() != sample.lattice->size() / 2 ||
      sample.sin_coeffs.size() != sample.lattice->size() / 2) {
    throw Error(ErrorCode::InvalidSample, "coefficient arrays do not match the lattice");
  }
  if (curve.curve().dim() != sample.lattice->dim()) {
    throw Error(ErrorCode::InvalidArgument, "curve and lattice dimensions differ");
  }
  if (curve.resolution() < options.min_grid_factor * sample.lattice->lambda() * (1.0 - 1e-12)) {
    throw Error(ErrorCode::InvalidArgument, "curve grid is coarser than the required nodes per unit length");
  }

  const double len = curve.curve().length();
  const Interval iv = interval.value_or(Interval{0.0, len});
  if (!(iv.lo >= 0.0 && iv.hi <= len * (1.0 + 1e-15) && iv.lo < iv.hi)) {
    throw Error(ErrorCode::InvalidArgument, "interval must be a nonempty subset of the curve domain");
  }

  ZeroCounter counter(sample, curve, options);
  std::vector<Node> nodes;
  nodes.push_back({iv.lo, counter.eval(iv.lo)});
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double t = curve.node(i);
    if (t > iv.lo && t < iv.hi) nodes.push_back({t, evaluate_field(sample, curve.cached(i))});
  }
  nodes.push_back({iv.hi, counter.eval(iv.hi)});

  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    if (nodes[k].g.value == 0.0) counter.roots.push_back(nodes[k].t);
    counter.cell(nodes[k], nodes[k + 1], 0);
  }

  ZeroCount zc;
  zc.roots = std::move(counter.roots);
  std::sort(zc.roots.begin(), zc.roots.end());
  zc.count = zc.roots.size();
  zc.unresolved = counter.unresolved;
  zc.escalated = counter.escalated;
  zc.certified = counter.unresolved == 0;
  zc.grid_resolution = curve.resolution();
  if (zc.roots.size() >= 2) {
    double gap = zc.roots[1] - zc.roots[0];
    for (std::size_t k = 2; k < zc.roots.size(); ++k) gap = std::min(gap, zc.roots[k] - zc.roots[k - 1]);
    zc.min_gap = gap;
  }
  return zc;
}

bool scaling_invariance_check(const WaveSample& sample, const CurveSampler& curve, double c) {
  if (c == 0.0) throw Error(ErrorCode::InvalidArgument, "scale factor must be nonzero");
  return count_zeros(sample, curve).count == count_zeros(sample.scaled(c), curve).count;
}

std::vector<Eigen::Vector2d> direction_lines(const LatticeSet& lattice) {
  if (lattice.dim() != 2) throw Error(ErrorCode::InvalidArgument, "direction set requires d = 2");
  std::set<std::pair<std::int64_t, std::int64_t>> lines;
  const auto pts = lattice.points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      std::int64_t x = pts[i][0] - pts[j][0];
      std::int64_t y = pts[i][1] - pts[j][1];
      const std::int64_t g = std::gcd(x, y);
      x /= g;
      y /= g;
      if (x < 0 || (x == 0 && y < 0)) {
        x = -x;
        y = -y;
      }
      lines.emplace(x, y);
    }
  }
  std::vector<Eigen::Vector2d> out;
  out.reserve(lines.size());
  for (const auto& [x, y] : lines) {
    out.push_back(Eigen::Vector2d(static_cast<double>(x), static_cast<double>(y)).normalized());
  }
  return out;
}

double default_kappa(const LatticeSet& lattice) {
  return std::pow(static_cast<double>(lattice.size()), -3.0);
}

namespace {

// t in [a, b] where f changes sign, f(a) and f(b) of opposite signs.
template <class F>
double bisect_sign(F&& f, double a, double b) {
  const int sa = sign_of(f(a));
  for (int iter = 0; iter < 100; ++iter) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    if (sign_of(f(mid)) == sa) a = mid; else b = mid;
  }
  return 0.5 * (a + b);
}

std::vector<Interval> merge(std::vector<Interval> v) {
  std::sort(v.begin(), v.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
  std::vector<Interval> out;
  for (const auto& iv : v) {
    if (!out.empty() && iv.lo <= out.back().hi) {
      out.back().hi = std::max(out.back().hi, iv.hi);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

}  // namespace

std::vector<Interval> bad_intervals(const Curve& curve, const LatticeSet& lattice, double kappa) {
  if (curve.dim() != 2 || lattice.dim() != 2) {
    throw Error(ErrorCode::InvalidArgument, "bad set is defined for planar curves only");
  }
  if (!(kappa > 0.0)) return {};
  const double thresh = std::sin(std::min(kappa, std::numbers::pi / 2));
  const double len = curve.length();
  const auto cells = static_cast<std::size_t>(std::max(4096.0, std::ceil(8192.0 * len)));
  std::vector<double> ts(cells + 1);
  std::vector<Vec3> tangents(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) {
    ts[i] = len * static_cast<double>(i) / static_cast<double>(cells);
    tangents[i] = curve.jet(ts[i]).velocity;
  }

  std::vector<Interval> bad;
  for (const auto& phi : direction_lines(lattice)) {
    // |cross(gamma', phi)| is the sine of the line angle for unit vectors.
    auto cross_at = [&](double t) {
      const Vec3 v = curve.jet(t).velocity;
      return v.x() * phi.y() - v.y() * phi.x();
    };
    auto excess = [&](double t) { return std::abs(cross_at(t)) - thresh; };
    std::vector<double> c(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i) c[i] = tangents[i].x() * phi.y() - tangents[i].y() * phi.x();

    // Start of the bad run in progress, or NaN outside one.
    double open = std::abs(c[0]) < thresh ? ts[0] : std::nan("");
    for (std::size_t i = 0; i < cells; ++i) {
      const bool bad_l = std::abs(c[i]) < thresh;
      const bool bad_r = std::abs(c[i + 1]) < thresh;
      if (bad_l != bad_r) {
        const double edge = bisect_sign(excess, ts[i], ts[i + 1]);
        if (bad_r) {
          open = edge;
        } else {
          bad.push_back({open, edge});
          open = std::nan("");
        }
      } else if (!bad_l && sign_of(c[i]) * sign_of(c[i + 1]) < 0) {
        // The tangent sweeps through the line inside one cell.
        const double z = bisect_sign(cross_at, ts[i], ts[i + 1]);
        bad.push_back({bisect_sign(excess, ts[i], z), bisect_sign(excess, z, ts[i + 1])});
      }
    }
    if (!std::isnan(open)) bad.push_back({open, len});
  }
  return merge(std::move(bad));
}

std::vector<Interval> restrict_to_good_set(const Curve& curve, const LatticeSet& lattice,
                                           const std::vector<Interval>& intervals,
                                           std::optional<double> kappa) {
  const auto removed = bad_intervals(curve, lattice, kappa.value_or(default_kappa(lattice)));
  std::vector<Interval> out;
  for (const auto& iv : intervals) {
    double cursor = iv.lo;
    for (const auto& b : removed) {
      if (b.hi <= cursor || b.lo >= iv.hi) continue;
      if (b.lo > cursor) out.push_back({cursor, b.lo});
      cursor = std::max(cursor, b.hi);
    }
    if (cursor < iv.hi) out.push_back({cursor, iv.hi});
  }
  return out;
}

void to_json(nlohmann::json& j, const ZeroCount& zc) {
  j = nlohmann::json{{"count", zc.count},
                     {"roots", zc.roots},
                     {"certified", zc.certified},
                     {"grid_resolution", zc.grid_resolution},
                     {"unresolved", zc.unresolved},
                     {"escalated", zc.escalated}};
  j["min_gap"] = zc.min_gap ? nlohmann::json(*zc.min_gap) : nlohmann::json(nullptr);
}

ZeroCount zero_count_from_json(const nlohmann::json& j) {
  ZeroCount zc;
  zc.count = j.at("count").get<std::size_t>();
  zc.roots = j.at("roots").get<std::vector<double>>();
  zc.certified = j.at("certified").get<bool>();
  zc.grid_resolution = j.at("grid_resolution").get<double>();
  zc.unresolved = j.value("unresolved", std::size_t{0});
  zc.escalated = j.value("escalated", std::size_t{0});
  if (j.contains("min_gap") && !j.at("min_gap").is_null()) zc.min_gap = j.at("min_gap").get<double>();
  return zc;
}

}  // namespace torus_waves
