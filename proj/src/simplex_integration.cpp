#include "dicemax/simplex_integration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <thread>

#include "dicemax/numeric.hpp"

namespace dicemax {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  engine_.seed(seq);
}

std::vector<Distribution> sample_simplex_uniform(RngStream& rng, std::int64_t count) {
  if (count < 1) throw std::domain_error("sample_simplex_uniform: count must be >= 1");
  std::vector<Distribution> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::int64_t k = 0; k < count; ++k) {
    Probs e;
    for (double& x : e) x = rng.standard_exponential();
    out.push_back(Distribution::from_weights(e));
  }
  return out;
}

double dirichlet_beta_integral(const Probs& b) {
  double sum = 0.0, r = 0.0;
  for (double x : b) {
    if (!(x > 0.0)) throw std::domain_error("dirichlet_beta_integral: exponents must be > 0");
    r += std::lgamma(x);
    sum += x;
  }
  return r - std::lgamma(sum);
}

// ---------------------------------------------------------------------------
// Constraint polytope

namespace {

using FaceMask = unsigned;

FaceMask support_of(const Probs& p) {
  FaceMask m = 0;
  for (int i = 0; i < kFaces; ++i)
    if (p[i] > 0.0) m |= 1u << i;
  return m;
}

// Affine dimension of a point set.
int affine_dimension(const std::vector<Probs>& pts) {
  if (pts.empty()) return -1;
  std::vector<std::array<double, kFaces>> rows;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    std::array<double, kFaces> r;
    for (int i = 0; i < kFaces; ++i) r[i] = pts[k][i] - pts[0][i];
    rows.push_back(r);
  }
  int rank = 0;
  for (int col = 0; col < kFaces && rank < static_cast<int>(rows.size()); ++col) {
    std::size_t pivot = static_cast<std::size_t>(rank);
    for (std::size_t r = pivot; r < rows.size(); ++r)
      if (std::abs(rows[r][col]) > std::abs(rows[pivot][col])) pivot = r;
    if (std::abs(rows[pivot][col]) < 1e-12) continue;
    std::swap(rows[pivot], rows[static_cast<std::size_t>(rank)]);
    const auto& pr = rows[static_cast<std::size_t>(rank)];
    for (std::size_t r = static_cast<std::size_t>(rank) + 1; r < rows.size(); ++r) {
      const double f = rows[r][col] / pr[col];
      for (int c = col; c < kFaces; ++c) rows[r][c] -= f * pr[c];
    }
    ++rank;
  }
  return rank;
}

// Fan triangulation of a face of the polytope: the face is the set of
// vertices avoiding the faces in `zeros`. Each facet is triangulated
// recursively and coned from the vertex centroid of the face.
class FanTriangulator {
 public:
  FanTriangulator(std::vector<Probs>& points, std::size_t vertex_count)
      : points_(points), vertex_count_(vertex_count) {}

  std::vector<std::vector<int>> triangulate(FaceMask zeros) {
    std::vector<int> verts = face_vertices(zeros);
    const int dim = dimension(verts);
    return triangulate(verts, dim);
  }

 private:
  std::vector<int> face_vertices(FaceMask zeros) const {
    std::vector<int> v;
    for (std::size_t k = 0; k < vertex_count_; ++k)
      if ((support_of(points_[k]) & zeros) == 0) v.push_back(static_cast<int>(k));
    return v;
  }

  int dimension(const std::vector<int>& verts) const {
    std::vector<Probs> pts;
    for (int k : verts) pts.push_back(points_[static_cast<std::size_t>(k)]);
    return affine_dimension(pts);
  }

  std::vector<std::vector<int>> triangulate(const std::vector<int>& verts, int dim) {
    if (static_cast<int>(verts.size()) == dim + 1) return {verts};
    if (auto it = memo_.find(verts); it != memo_.end()) return it->second;

    Probs c{};
    for (int k : verts)
      for (int i = 0; i < kFaces; ++i) c[i] += points_[static_cast<std::size_t>(k)][i] / verts.size();
    const int apex = static_cast<int>(points_.size());
    points_.push_back(c);

    // Facets of this face: sub-faces obtained by zeroing one more coordinate
    // whose affine dimension drops by exactly one.
    FaceMask common = 0;
    for (int k : verts) common |= support_of(points_[static_cast<std::size_t>(k)]);
    std::set<std::vector<int>> facets;
    for (int i = 0; i < kFaces; ++i) {
      if (!(common & (1u << i))) continue;
      std::vector<int> sub;
      for (int k : verts)
        if (!(support_of(points_[static_cast<std::size_t>(k)]) & (1u << i))) sub.push_back(k);
      if (!sub.empty() && dimension(sub) == dim - 1) facets.insert(sub);
    }

    std::vector<std::vector<int>> out;
    for (const auto& facet : facets) {
      for (auto simplex : triangulate(facet, dim - 1)) {
        simplex.push_back(apex);
        out.push_back(std::move(simplex));
      }
    }
    memo_.emplace(verts, out);
    return out;
  }

  std::vector<Probs>& points_;
  std::size_t vertex_count_;
  std::map<std::vector<int>, std::vector<std::vector<int>>> memo_;
};

// 4-volume in the affine chart (f_2, f_3, f_4, f_5); the chart is injective on
// the constraint plane, so ratios of chart volumes equal ratios of true volumes.
double chart_volume(const std::vector<Probs>& points, const std::array<int, 5>& s) {
  double m[4][4];
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      m[r][c] = points[static_cast<std::size_t>(s[r + 1])][c + 1] - points[static_cast<std::size_t>(s[0])][c + 1];
  double det = 1.0;
  for (int col = 0; col < 4; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    if (m[pivot][col] == 0.0) return 0.0;
    if (pivot != col) {
      for (int c = 0; c < 4; ++c) std::swap(m[pivot][c], m[col][c]);
      det = -det;
    }
    det *= m[col][col];
    for (int r = col + 1; r < 4; ++r) {
      const double f = m[r][col] / m[col][col];
      for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
    }
  }
  return std::abs(det) / 24.0;
}

}  // namespace

ConstraintPolytope build_constraint_polytope(const Average& a) {
  if (a.is_vertex()) {
    throw DegeneratePolytope("constraint slice for a = " + a.label() + " is a single vertex");
  }
  ConstraintPolytope poly;
  poly.average = a;
  const std::int64_t num = a.numerator(), den = a.denominator();
  for (int i = 1; i <= kFaces; ++i) {
    for (int j = i; j <= kFaces; ++j) {
      if (i == j) {
        if (den == 1 && num == i) poly.vertices.push_back(Distribution::vertex(i));
        continue;
      }
      // i < a < j strictly
      if (!(i * den < num && num < j * den)) continue;
      Probs p{};
      p[static_cast<std::size_t>(i - 1)] =
          static_cast<double>(j * den - num) / static_cast<double>((j - i) * den);
      p[static_cast<std::size_t>(j - 1)] =
          static_cast<double>(num - i * den) / static_cast<double>((j - i) * den);
      poly.vertices.push_back(Distribution::from_weights(p));
    }
  }
  for (const auto& v : poly.vertices) poly.points.push_back(v.probs());

  FanTriangulator tri(poly.points, poly.vertices.size());
  double total = 0.0;
  for (const auto& s : tri.triangulate(0)) {
    std::array<int, 5> idx{};
    std::copy(s.begin(), s.end(), idx.begin());
    const double vol = chart_volume(poly.points, idx);
    poly.simplices.push_back(idx);
    poly.relative_volumes.push_back(vol);
    total += vol;
  }
  for (double& v : poly.relative_volumes) v /= total;
  return poly;
}

std::vector<WeightedSimplex> simplex_region() {
  WeightedSimplex s{{}, 1.0};
  for (int i = 1; i <= kFaces; ++i) s.corners.push_back(Distribution::vertex(i).probs());
  return {s};
}

std::vector<WeightedSimplex> polytope_region(const ConstraintPolytope& poly) {
  std::vector<WeightedSimplex> region;
  for (std::size_t k = 0; k < poly.simplices.size(); ++k) {
    WeightedSimplex s{{}, poly.relative_volumes[k]};
    for (int idx : poly.simplices[k]) s.corners.push_back(poly.points[static_cast<std::size_t>(idx)]);
    region.push_back(std::move(s));
  }
  return region;
}

// ---------------------------------------------------------------------------
// Grundmann-Moeller rules

SimplexRule grundmann_moeller_rule(int dimension, int s) {
  if (dimension < 1 || s < 1) throw std::domain_error("grundmann_moeller_rule: bad arguments");
  const int n = dimension;
  auto layer_weight = [n](int s_, int i) {
    const int d = 2 * s_ + 1;
    // (-1)^i 2^(-2s) (d+n-2i)^d / (i! (d+n-i)!) * n!, computed in logs.
    const double lw = -2.0 * s_ * std::log(2.0) + d * std::log(static_cast<double>(d + n - 2 * i)) -
                      std::lgamma(i + 1.0) - std::lgamma(d + n - i + 1.0) + std::lgamma(n + 1.0);
    return (i % 2 ? -1.0 : 1.0) * std::exp(lw);
  };

  SimplexRule rule;
  const int d = 2 * s + 1;
  for (int i = 0; i <= s; ++i) {
    const int total = s - i;
    const double denom = d + n - 2 * i;
    const double w = layer_weight(s, i);
    // Embedded rule of degree 2s-1 uses layer i-1 on the same points.
    const double lower = i >= 1 ? layer_weight(s - 1, i - 1) : 0.0;
    // Enumerate beta in N^(n+1) with |beta| = total.
    std::vector<int> beta(static_cast<std::size_t>(n + 1), 0);
    std::function<void(int, int)> rec = [&](int pos, int left) {
      if (pos == n) {
        beta[static_cast<std::size_t>(n)] = left;
        std::vector<double> x(static_cast<std::size_t>(n + 1));
        for (int j = 0; j <= n; ++j) x[static_cast<std::size_t>(j)] = (2.0 * beta[static_cast<std::size_t>(j)] + 1.0) / denom;
        rule.points.push_back(std::move(x));
        rule.weights.push_back(w);
        rule.lower_weights.push_back(lower);
        return;
      }
      for (int b = 0; b <= left; ++b) {
        beta[static_cast<std::size_t>(pos)] = b;
        rec(pos + 1, left - b);
      }
    };
    rec(0, total);
  }
  return rule;
}

// ---------------------------------------------------------------------------
// Vector integration

std::pair<double, double> VectorEstimate::ratio(std::size_t c) const {
  const double d = value[0];
  const double r = value[c] / d;
  double err;
  if (integrator == Integrator::MonteCarlo) {
    const double var = error[c] * error[c] - 2.0 * r * covariance_with_first[c] + r * r * error[0] * error[0];
    err = std::sqrt(std::max(var, 0.0)) / std::abs(d);
  } else if (c < ratio_error.size()) {
    err = ratio_error[c];
  } else {
    err = (error[c] + std::abs(r) * error[0]) / std::abs(d);
  }
  return {r, err};
}

namespace {

Probs barycentric_point(const std::vector<Probs>& corners, std::span<const double> bary) {
  Probs p{};
  for (std::size_t j = 0; j < corners.size(); ++j)
    for (int i = 0; i < kFaces; ++i) p[i] += bary[j] * corners[j][i];
  for (double& x : p) x = std::max(x, 0.0);
  return p;
}

// Power sums of exp(l_c - shift) with a floating shift raised on demand.
struct ScaledMoments {
  double shift = kNegInf;
  std::int64_t count = 0;
  std::vector<double> sum, sum_sq, sum_cross;

  explicit ScaledMoments(std::size_t components)
      : sum(components, 0.0), sum_sq(components, 0.0), sum_cross(components, 0.0) {}

  void rescale(double new_shift) {
    if (shift == kNegInf) {
      shift = new_shift;
      return;
    }
    const double f = std::exp(shift - new_shift);
    for (std::size_t c = 0; c < sum.size(); ++c) {
      sum[c] *= f;
      sum_sq[c] *= f * f;
      sum_cross[c] *= f * f;
    }
    shift = new_shift;
  }

  void add(std::span<const double> logs) {
    ++count;
    double hi = kNegInf;
    for (double l : logs) hi = std::max(hi, l);
    if (hi == kNegInf) return;
    if (hi > shift) rescale(hi);
    const double x0 = std::exp(logs[0] - shift);
    for (std::size_t c = 0; c < sum.size(); ++c) {
      const double x = std::exp(logs[c] - shift);
      sum[c] += x;
      sum_sq[c] += x * x;
      sum_cross[c] += x * x0;
    }
  }

  void merge(const ScaledMoments& o) {
    if (o.shift == kNegInf) {
      count += o.count;
      return;
    }
    if (o.shift > shift) rescale(o.shift);
    const double f = std::exp(o.shift - shift);
    for (std::size_t c = 0; c < sum.size(); ++c) {
      sum[c] += o.sum[c] * f;
      sum_sq[c] += o.sum_sq[c] * f * f;
      sum_cross[c] += o.sum_cross[c] * f * f;
    }
    count += o.count;
  }
};

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Halves the longest edge (first such pair in index order on ties).
std::pair<std::vector<Probs>, std::vector<Probs>> bisect_longest_edge(const std::vector<Probs>& corners) {
  std::size_t bj = 0, bk = 1;
  double best = -1.0;
  for (std::size_t j = 0; j < corners.size(); ++j) {
    for (std::size_t k = j + 1; k < corners.size(); ++k) {
      double d = 0.0;
      for (int i = 0; i < kFaces; ++i) d += (corners[j][i] - corners[k][i]) * (corners[j][i] - corners[k][i]);
      if (d > best * (1.0 + 1e-12)) {
        best = d;
        bj = j;
        bk = k;
      }
    }
  }
  Probs mid;
  for (int i = 0; i < kFaces; ++i) mid[i] = 0.5 * (corners[bj][i] + corners[bk][i]);
  std::vector<Probs> left = corners, right = corners;
  left[bk] = mid;
  right[bj] = mid;
  return {std::move(left), std::move(right)};
}


constexpr std::size_t kMonteCarloStrata = 256;

// Draws `count[k]` points per stream in every stratum k. Stream seeds depend on
// (phase, stratum, stream) only, so results do not depend on the thread count.
std::vector<ScaledMoments> sample_strata(const std::vector<WeightedSimplex>& strata, const LogIntegrand& integrand,
                                         std::size_t components, const IntegrationBudget& budget, int phase,
                                         const std::vector<std::int64_t>& count) {
  const int streams = std::max(1, budget.streams);
  std::vector<ScaledMoments> results(strata.size() * static_cast<std::size_t>(streams), ScaledMoments(components));
  auto run = [&](std::size_t t) {
    const std::size_t k = t / static_cast<std::size_t>(streams);
    const auto stream = static_cast<std::uint64_t>(t % static_cast<std::size_t>(streams));
    const auto& simplex = strata[k];
    RngStream rng(budget.seed, (static_cast<std::uint64_t>(phase) << 40) + k * 65536u + stream);
    std::vector<double> bary(simplex.corners.size());
    std::vector<double> logs(components);
    ScaledMoments& m = results[t];
    for (std::int64_t i = 0; i < count[k]; ++i) {
      double z = 0.0;
      for (double& b : bary) z += (b = rng.standard_exponential());
      for (double& b : bary) b /= z;
      integrand(barycentric_point(simplex.corners, bary), logs);
      m.add(logs);
    }
  };
  const int threads = std::min<int>(resolve_threads(budget.threads), static_cast<int>(results.size()));
  if (threads <= 1) {
    for (std::size_t t = 0; t < results.size(); ++t) run(t);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t t = static_cast<std::size_t>(w); t < results.size(); t += static_cast<std::size_t>(threads)) run(t);
      });
    }
    for (auto& th : pool) th.join();
  }
  // Merge in stream order.
  std::vector<ScaledMoments> merged(strata.size(), ScaledMoments(components));
  for (std::size_t t = 0; t < results.size(); ++t) merged[t / static_cast<std::size_t>(streams)].merge(results[t]);
  return merged;
}

struct StratumStats {
  std::vector<double> mean, var, cov;
};

StratumStats stratum_stats(ScaledMoments& s, double shift) {
  const std::size_t components = s.sum.size();
  StratumStats out{std::vector<double>(components, 0.0), std::vector<double>(components, 0.0),
                   std::vector<double>(components, 0.0)};
  if (s.shift == kNegInf || s.count < 2) return out;
  s.rescale(shift);
  const double n = static_cast<double>(s.count);
  const double mean0 = s.sum[0] / n;
  for (std::size_t c = 0; c < components; ++c) {
    out.mean[c] = s.sum[c] / n;
    out.var[c] = std::max((s.sum_sq[c] - n * out.mean[c] * out.mean[c]) / (n - 1.0), 0.0);
    out.cov[c] = (s.sum_cross[c] - n * out.mean[c] * mean0) / (n - 1.0);
  }
  return out;
}

// Stratified sampling: the region is refined into strata, a pilot pass
// measures each stratum's spread, and the rest of the budget is allocated in
// proportion to weight times spread (Neyman allocation).
VectorEstimate integrate_monte_carlo(const std::vector<WeightedSimplex>& region, const LogIntegrand& integrand,
                                     std::size_t components, const IntegrationBudget& budget) {
  const int streams = std::max(1, budget.streams);
  const std::int64_t min_pilot = 4 * static_cast<std::int64_t>(streams);
  std::vector<WeightedSimplex> strata = region;
  while (strata.size() < kMonteCarloStrata &&
         static_cast<std::int64_t>(2 * strata.size()) * min_pilot * 4 <= budget.max_evaluations) {
    std::vector<WeightedSimplex> next;
    next.reserve(2 * strata.size());
    for (const auto& s : strata) {
      auto [left, right] = bisect_longest_edge(s.corners);
      next.push_back({std::move(left), s.weight / 2});
      next.push_back({std::move(right), s.weight / 2});
    }
    strata = std::move(next);
  }
  const std::size_t K = strata.size();

  // Pilot: a quarter of the budget, spread by weight.
  std::vector<std::int64_t> count(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto n = static_cast<std::int64_t>(std::llround(strata[k].weight * 0.25 * static_cast<double>(budget.max_evaluations)));
    count[k] = std::max<std::int64_t>(min_pilot, n) / streams;
  }
  std::vector<ScaledMoments> moments = sample_strata(strata, integrand, components, budget, 0, count);

  double shift = kNegInf;
  for (const auto& m : moments) shift = std::max(shift, m.shift);
  std::int64_t used = 0;
  for (const auto& m : moments) used += m.count;

  if (shift != kNegInf && used < budget.max_evaluations) {
    // Spread of the quantities whose ratios are reported.
    std::vector<double> total(components, 0.0);
    std::vector<StratumStats> pilot;
    for (std::size_t k = 0; k < K; ++k) {
      ScaledMoments copy = moments[k];
      pilot.push_back(stratum_stats(copy, shift));
      for (std::size_t c = 0; c < components; ++c) total[c] += strata[k].weight * pilot[k].mean[c];
    }
    std::vector<double> score(K, 0.0);
    double score_sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      double spread = components == 1 ? pilot[k].var[0] : 0.0;
      for (std::size_t c = 1; c < components; ++c) {
        const double r = total[0] != 0.0 ? total[c] / total[0] : 0.0;
        spread = std::max(spread, pilot[k].var[c] - 2.0 * r * pilot[k].cov[c] + r * r * pilot[k].var[0]);
      }
      score[k] = strata[k].weight * std::sqrt(std::max(spread, 0.0));
      score_sum += score[k];
    }
    const double remaining = static_cast<double>(budget.max_evaluations - used);
    for (std::size_t k = 0; k < K; ++k) {
      const double share = score_sum > 0.0 ? score[k] / score_sum : strata[k].weight;
      count[k] = static_cast<std::int64_t>(std::floor(share * remaining)) / streams;
    }
    const auto extra = sample_strata(strata, integrand, components, budget, 1, count);
    for (std::size_t k = 0; k < K; ++k) moments[k].merge(extra[k]);
  }

  shift = kNegInf;
  for (const auto& m : moments) shift = std::max(shift, m.shift);
  VectorEstimate est;
  est.integrator = Integrator::MonteCarlo;
  est.log_scale = shift == kNegInf ? 0.0 : shift;
  est.value.assign(components, 0.0);
  est.error.assign(components, 0.0);
  est.covariance_with_first.assign(components, 0.0);
  std::vector<double> var(components, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    est.evaluations += moments[k].count;
    const StratumStats st = stratum_stats(moments[k], est.log_scale);
    const double n = static_cast<double>(std::max<std::int64_t>(moments[k].count, 1));
    const double w = strata[k].weight;
    for (std::size_t c = 0; c < components; ++c) {
      est.value[c] += w * st.mean[c];
      var[c] += w * w * st.var[c] / n;
      est.covariance_with_first[c] += w * w * st.cov[c] / n;
    }
  }
  for (std::size_t c = 0; c < components; ++c) est.error[c] = std::sqrt(var[c]);
  const double scale = std::abs(est.value[0]);
  if (components == 1) {
    est.converged = est.error[0] <= budget.relative_tolerance * scale;
  } else {
    for (std::size_t c = 1; c < components; ++c)
      if (est.ratio(c).second > budget.relative_tolerance) est.converged = false;
  }
  return est;
}

// Adaptive subdivision with an embedded pair of Grundmann-Moeller rules.
constexpr std::size_t kMinimumStartCells = 512;

// Cells carry signed differences between the degree-7 and embedded degree-5
// rules. Ratio errors are summed per cell as |d_c - r_c d_0|, so errors that
// are common to numerator and denominator cancel.
class AdaptiveCubature {
 public:
  AdaptiveCubature(const LogIntegrand& integrand, std::size_t components, int dimension)
      : integrand_(integrand),
        components_(components),
        rule_(grundmann_moeller_rule(dimension, 3)),
        logs_(rule_.points.size() * components),
        total_(components, 0.0),
        ratio_(components, 0.0) {}

  VectorEstimate run(const std::vector<WeightedSimplex>& region, const IntegrationBudget& budget) {
    const std::int64_t per_region = static_cast<std::int64_t>(rule_.points.size());
    // Uniform pre-refinement so narrow peaks are seen by at least one cell.
    std::vector<WeightedSimplex> start = region;
    while (static_cast<std::int64_t>(start.size()) * 2 * per_region <= budget.max_evaluations / 8 &&
           start.size() < kMinimumStartCells) {
      std::vector<WeightedSimplex> next;
      next.reserve(2 * start.size());
      for (const auto& s : start) {
        auto [left, right] = bisect_longest_edge(s.corners);
        next.push_back({std::move(left), s.weight / 2});
        next.push_back({std::move(right), s.weight / 2});
      }
      start = std::move(next);
    }
    for (const auto& s : start) push(evaluate(s.corners, s.weight));
    refresh();

    bool converged = false;
    std::int64_t since_check = 0;
    while (true) {
      if (since_check == 0) {
        refresh();
        if (within_tolerance(budget.relative_tolerance)) {
          converged = true;
          break;
        }
        since_check = std::max<std::int64_t>(16, static_cast<std::int64_t>(heap_.size()) / 16);
      }
      --since_check;
      if (evaluations_ + 2 * per_region > budget.max_evaluations || heap_.empty()) break;
      std::pop_heap(heap_.begin(), heap_.end(), by_priority);
      Cell cell = std::move(heap_.back());
      heap_.pop_back();

      auto [left_corners, right_corners] = bisect_longest_edge(cell.corners);
      const double parent_shift = shift_;
      Cell left = evaluate(left_corners, cell.weight / 2);
      Cell right = evaluate(right_corners, cell.weight / 2);
      // The parent's value must agree with its children to within their claimed
      // error; when it does not, the children's estimates are too optimistic.
      const double f = std::exp(parent_shift - shift_);
      for (std::size_t c = 0; c < components_; ++c) {
        const double gap = std::abs(cell.value[c] * f - left.value[c] - right.value[c]);
        const double claimed = std::abs(left.diff[c]) + std::abs(right.diff[c]);
        if (gap <= claimed) continue;
        if (claimed > 0.0) {
          left.diff[c] *= gap / claimed;
          right.diff[c] *= gap / claimed;
        } else {
          left.diff[c] = right.diff[c] = gap / 2;
        }
      }
      left.priority = priority(left);
      right.priority = priority(right);
      set_rank(left);
      set_rank(right);
      push(std::move(left));
      push(std::move(right));
    }
    refresh();

    VectorEstimate est;
    est.integrator = Integrator::Deterministic;
    est.log_scale = shift_;
    est.value = total_;
    est.error = abs_error_;
    est.ratio_error = ratio_error_;
    est.covariance_with_first.assign(components_, 0.0);
    est.evaluations = evaluations_;
    est.converged = converged;
    return est;
  }

 private:
  struct Cell {
    std::vector<Probs> corners;
    double weight;
    std::vector<double> value;
    std::vector<double> diff;
    double priority;
    // Priority on a coarse logarithmic grid; ties go to the older cell. Keeps the
    // split order stable under last-bit changes of the integrand (e.g. a log offset).
    std::int64_t rank = 0;
    std::uint64_t id = 0;
  };

  static bool by_priority(const Cell& x, const Cell& y) {
    return x.rank != y.rank ? x.rank < y.rank : x.id > y.id;
  }

  static void set_rank(Cell& cell) {
    cell.rank = cell.priority > 0.0 ? static_cast<std::int64_t>(std::floor(64.0 * std::log2(cell.priority)))
                                    : std::numeric_limits<std::int64_t>::min();
  }

  double priority(const Cell& cell) const {
    if (components_ == 1) return std::abs(cell.diff[0]);
    double p = 0.0;
    for (std::size_t c = 1; c < components_; ++c) p = std::max(p, std::abs(cell.diff[c] - ratio_[c] * cell.diff[0]));
    return p;
  }

  Cell evaluate(const std::vector<Probs>& corners, double weight) {
    const std::size_t npts = rule_.points.size();
    double hi = kNegInf;
    for (std::size_t q = 0; q < npts; ++q) {
      std::span<double> out(logs_.data() + q * components_, components_);
      integrand_(barycentric_point(corners, rule_.points[q]), out);
      for (double l : out) hi = std::max(hi, l);
    }
    evaluations_ += static_cast<std::int64_t>(npts);
    // Keep the common scale near the largest value seen so far.
    if (hi != kNegInf && (shift_ == kNegInf || hi > shift_ + 30.0)) rescale(hi);

    Cell cell{corners, weight, std::vector<double>(components_, 0.0), std::vector<double>(components_, 0.0), 0.0, 0,
              next_id_++};
    for (std::size_t q = 0; q < npts; ++q) {
      for (std::size_t c = 0; c < components_; ++c) {
        const double l = logs_[q * components_ + c];
        if (l == kNegInf) continue;
        const double x = std::exp(l - shift_);
        cell.value[c] += rule_.weights[q] * x;
        cell.diff[c] += (rule_.weights[q] - rule_.lower_weights[q]) * x;
      }
    }
    for (std::size_t c = 0; c < components_; ++c) {
      cell.value[c] *= weight;
      cell.diff[c] *= weight;
    }
    cell.priority = priority(cell);
    set_rank(cell);
    return cell;
  }

  void push(Cell cell) {
    heap_.push_back(std::move(cell));
    std::push_heap(heap_.begin(), heap_.end(), by_priority);
  }

  void rescale(double new_shift) {
    if (shift_ != kNegInf) {
      const double f = std::exp(shift_ - new_shift);
      for (auto& cell : heap_) {
        for (double& v : cell.value) v *= f;
        for (double& d : cell.diff) d *= f;
        cell.priority *= f;
        set_rank(cell);
      }
    }
    shift_ = new_shift;
  }

  // Recomputes totals, ratio estimates and both error measures from the cells,
  // then reorders the heap under the updated ratios.
  void refresh() {
    std::fill(total_.begin(), total_.end(), 0.0);
    abs_error_.assign(components_, 0.0);
    ratio_error_.assign(components_, 0.0);
    for (const auto& cell : heap_)
      for (std::size_t c = 0; c < components_; ++c) total_[c] += cell.value[c];
    for (std::size_t c = 0; c < components_; ++c) ratio_[c] = total_[0] != 0.0 ? total_[c] / total_[0] : 0.0;
    for (auto& cell : heap_) {
      for (std::size_t c = 0; c < components_; ++c) {
        abs_error_[c] += std::abs(cell.diff[c]);
        ratio_error_[c] += std::abs(cell.diff[c] - ratio_[c] * cell.diff[0]);
      }
      cell.priority = priority(cell);
      set_rank(cell);
    }
    for (std::size_t c = 0; c < components_; ++c)
      ratio_error_[c] = total_[0] != 0.0 ? ratio_error_[c] / std::abs(total_[0]) : 0.0;
    std::make_heap(heap_.begin(), heap_.end(), by_priority);
  }

  // Scalar integrals: relative error of the value. Vector integrals: absolute
  // error of every ratio against component 0.
  bool within_tolerance(double tol) const {
    const double scale = std::abs(total_[0]);
    if (!(scale > 0.0)) return false;
    if (components_ == 1) return abs_error_[0] <= tol * scale;
    for (std::size_t c = 1; c < components_; ++c)
      if (ratio_error_[c] > tol) return false;
    return true;
  }

  const LogIntegrand& integrand_;
  std::size_t components_;
  SimplexRule rule_;
  std::vector<double> logs_;
  std::vector<Cell> heap_;
  std::vector<double> total_, ratio_, abs_error_, ratio_error_;
  double shift_ = kNegInf;
  std::int64_t evaluations_ = 0;
  std::uint64_t next_id_ = 0;
};

}  // namespace

VectorEstimate integrate_vector(const std::vector<WeightedSimplex>& region, const LogIntegrand& integrand,
                                std::size_t components, Integrator integrator, const IntegrationBudget& budget) {
  if (region.empty() || components == 0) throw std::domain_error("integrate_vector: empty region or integrand");
  if (integrator == Integrator::MonteCarlo) return integrate_monte_carlo(region, integrand, components, budget);
  const int dimension = static_cast<int>(region.front().corners.size()) - 1;
  return AdaptiveCubature(integrand, components, dimension).run(region, budget);
}

namespace {

QuadratureEstimate scalar_from(const VectorEstimate& v) {
  QuadratureEstimate q;
  const double scale = std::exp(v.log_scale);
  q.value = v.value[0] * scale;
  if (v.integrator == Integrator::MonteCarlo) {
    q.std_error = v.error[0] * scale;
  } else {
    q.error_indicator = v.error[0] * scale;
  }
  q.evaluations = v.evaluations;
  q.converged = v.converged;
  return q;
}

LogIntegrand lift(const ScalarLogIntegrand& f) {
  return [&f](const Probs& p, std::span<double> out) { out[0] = f(Distribution::from_weights(p)); };
}

}  // namespace

QuadratureEstimate integrate_simplex(const ScalarLogIntegrand& integrand, Integrator integrator,
                                     const IntegrationBudget& budget) {
  return scalar_from(integrate_vector(simplex_region(), lift(integrand), 1, integrator, budget));
}

QuadratureEstimate integrate_polytope(const ConstraintPolytope& poly, const ScalarLogIntegrand& integrand,
                                      Integrator integrator, const IntegrationBudget& budget) {
  return scalar_from(integrate_vector(polytope_region(poly), lift(integrand), 1, integrator, budget));
}

const QuadratureEstimate& require_converged(const QuadratureEstimate& estimate) {
  if (!estimate.converged) throw BudgetExhausted(estimate);
  return estimate;
}

}  // namespace dicemax
