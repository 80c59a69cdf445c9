#include "lndev/conditions.hpp"

#include <algorithm>
#include <boost/random/sobol.hpp>
#include <boost/random/uniform_01.hpp>
#include <cmath>
#include <limits>
#include <random>

#include "lndev/error.hpp"
#include "lndev/geometry.hpp"
#include "lndev/tensor_ops.hpp"

namespace lndev {

namespace {

std::size_t z(int i) { return static_cast<std::size_t>(i); }

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double dot(const TensorValue& a, const TensorValue& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Running maximum of relative residuals with a NaN-aware update.
struct Accumulator {
  double value = 0.0;
  bool failed = false;
  std::string note;
  void add(double residual, double scale) {
    const double r = residual / std::max(1.0, scale);
    if (!std::isfinite(r)) {
      value = kNaN;
      return;
    }
    if (!std::isnan(value)) value = std::max(value, r);
  }
};

PropertyRecord finish(std::string name, const Accumulator& acc, double threshold,
                      std::vector<std::vector<double>> recovered) {
  PropertyRecord p;
  p.name = std::move(name);
  p.residual = acc.value;
  p.threshold = threshold;
  p.holds = !acc.failed && std::isfinite(acc.value) && acc.value <= threshold;
  if (p.holds) p.recovered = std::move(recovered);
  p.note = acc.note;
  return p;
}

PropertyRecord not_applicable(std::string name, std::string why) {
  PropertyRecord p;
  p.name = std::move(name);
  p.applicable = false;
  p.residual = kNaN;
  p.note = std::move(why);
  return p;
}

// Covariant derivative of a value tensor field given by `f`, by central
// differences in the coordinates (one Richardson level) plus connection terms.
TensorValue fd_covariant_derivative(const std::function<TensorValue(const ChartPoint&)>& f,
                                    const LocalGeometry& g) {
  const int n = g.dim();
  const ChartPoint& x = g.point();
  const TensorValue t0 = f(x);
  std::vector<TensorValue> partials;
  for (int a = 0; a < n; ++a) {
    const double h = 1e-3 * std::max(1.0, std::abs(x[a]));
    auto at = [&](double d) {
      std::vector<double> p(x.coords().begin(), x.coords().end());
      p[z(a)] += d;
      return f(ChartPoint(p));
    };
    const TensorValue p1 = at(h), m1 = at(-h), p2 = at(0.5 * h), m2 = at(-0.5 * h);
    TensorValue d = t0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double c1 = (p1[i] - m1[i]) / (2 * h);
      const double c2 = (p2[i] - m2[i]) / h;
      d[i] = (4 * c2 - c1) / 3;
    }
    partials.push_back(std::move(d));
  }
  std::vector<Variance> slots = t0.slots();
  slots.push_back(Variance::lower);
  TensorValue out(n, slots, t0.frame());
  const auto& gam = g.gamma();
  for (std::size_t fi = 0; fi < t0.size(); ++fi) {
    auto idx = t0.multi_index(fi);
    for (int m = 0; m < n; ++m) {
      double v = 0.0;
      for (int a = 0; a < n; ++a) v += g.frame(m, a).value * partials[z(a)][fi];
      for (int s = 0; s < t0.rank(); ++s) {
        const int orig = idx[z(s)];
        for (int l = 0; l < n; ++l) {
          idx[z(s)] = l;
          const double tv = t0[t0.flat_index(idx)];
          if (t0.slot(s) == Variance::upper) v += gam(orig, l, m).value * tv;
          else v -= gam(l, orig, m).value * tv;
        }
        idx[z(s)] = orig;
      }
      auto oidx = idx;
      oidx.push_back(m);
      out[out.flat_index(oidx)] = v;
    }
  }
  return out;
}

}  // namespace

const PropertyRecord& ClassificationReport::at(const std::string& name) const {
  for (const auto& p : properties) {
    if (p.name == name) return p;
  }
  throw ContractError("report has no property '" + name + "'");
}

bool ClassificationReport::has(const std::string& name) const {
  return std::any_of(properties.begin(), properties.end(), [&](const auto& p) { return p.name == name; });
}

std::vector<ChartPoint> sample_points(const SampleBox& box, int count, std::uint64_t seed) {
  const std::size_t n = box.lo.size();
  if (n < 2 || box.hi.size() != n) throw ContractError("sample box needs matching lo/hi of dimension >= 2");
  for (std::size_t a = 0; a < n; ++a) {
    if (!(box.hi[a] >= box.lo[a])) throw ContractError("sample box has hi < lo");
  }
  if (count <= 0) throw ContractError("sample count must be positive");
  boost::random::sobol qrng(n);
  boost::random::uniform_01<double> unit;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> shift_dist(0.0, 1.0);
  std::vector<double> shift(n);
  for (auto& s : shift) s = shift_dist(rng);
  std::vector<ChartPoint> out;
  for (int c = 0; c < count; ++c) {
    std::vector<double> p(n);
    for (std::size_t a = 0; a < n; ++a) {
      double v = unit(qrng) + shift[a];
      v -= std::floor(v);
      p[a] = box.lo[a] + v * (box.hi[a] - box.lo[a]);
    }
    out.emplace_back(std::move(p));
  }
  return out;
}

double holds_threshold(const ConnectionSpace& space, const Thresholds& t) {
  return space.derivative_mode() == DerivativeMode::analytic ? t.analytic : t.finite_difference;
}

std::string to_string(SymmetryKind kind) {
  switch (kind) {
    case SymmetryKind::projective: return "projective";
    case SymmetryKind::affine: return "affine";
    case SymmetryKind::isometric: return "isometric";
    case SymmetryKind::conformal: return "conformal";
  }
  return "unknown";
}

SymmetryKind parse_symmetry_kind(const std::string& name) {
  for (auto k : {SymmetryKind::projective, SymmetryKind::affine, SymmetryKind::isometric, SymmetryKind::conformal}) {
    if (to_string(k) == name) return k;
  }
  throw ContractError("unknown symmetry kind '" + name + "'");
}

std::vector<PropertyRecord> check_symmetry(const ConnectionSpace& space, const VectorField& xi,
                                           SymmetryKind kind, const std::vector<ChartPoint>& points,
                                           const Thresholds& thresholds) {
  if (points.empty()) throw ContractError("check_symmetry needs at least one point");
  const double thr = holds_threshold(space, thresholds);
  const int n = space.dim();
  if ((kind == SymmetryKind::isometric || kind == SymmetryKind::conformal) && !space.has_metric()) {
    throw ContractError(to_string(kind) + " symmetry needs a metric");
  }
  // Symmetry residuals are absolute max-norms.
  double res = 0.0, dens = 0.0;
  std::vector<std::vector<double>> phi;
  for (const auto& x : points) {
    switch (kind) {
      case SymmetryKind::affine:
        res = std::max(res, max_abs(lie_derivative_connection(space, xi, x).L));
        break;
      case SymmetryKind::projective:
        res = std::max(res, max_abs(projective_part(lie_derivative_connection(space, xi, x).L)));
        break;
      case SymmetryKind::isometric:
        res = std::max(res, max_abs(lie_derivative_metric(space, xi, x)));
        break;
      case SymmetryKind::conformal: {
        LocalGeometry g(space, x);
        const TensorValue gm = values(g.metric());
        const TensorValue lg = values(g.lie_derivative(g.metric(), g.vector(xi)));
        const double p = dot(lg, gm) / (2.0 * dot(gm, gm));
        phi.push_back({p});
        double r = 0.0;
        for (std::size_t i = 0; i < gm.size(); ++i) r = std::max(r, std::abs(lg[i] - 2 * p * gm[i]));
        res = std::max(res, r);
        const TensorValue gi = values(g.inverse_metric());
        double det = 1.0;
        {
          std::vector<double> m(gm.data().begin(), gm.data().end());
          for (int c = 0; c < n; ++c) {
            int piv = c;
            for (int r2 = c + 1; r2 < n; ++r2)
              if (std::abs(m[z(r2 * n + c)]) > std::abs(m[z(piv * n + c)])) piv = r2;
            if (piv != c) {
              for (int k = 0; k < n; ++k) std::swap(m[z(c * n + k)], m[z(piv * n + k)]);
              det = -det;
            }
            det *= m[z(c * n + c)];
            if (m[z(c * n + c)] == 0.0) break;
            for (int r2 = c + 1; r2 < n; ++r2) {
              const double f = m[z(r2 * n + c)] / m[z(c * n + c)];
              for (int k = c; k < n; ++k) m[z(r2 * n + k)] -= f * m[z(c * n + k)];
            }
          }
        }
        if (!(std::abs(det) > space.det_epsilon()) || !std::isfinite(det)) {
          throw SingularFrameError("degenerate metric: weight-normalized conformal form undefined");
        }
        double tr = 0.0;
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) tr += gi(k, l) * lg(k, l);
        const double wgt = std::pow(std::abs(det), -1.0 / n);
        double d = 0.0;
        for (std::size_t i = 0; i < gm.size(); ++i) d = std::max(d, std::abs(wgt * (lg[i] - tr / n * gm[i])));
        dens = std::max(dens, d);
        break;
      }
    }
  }
  std::vector<PropertyRecord> out;
  PropertyRecord p;
  p.name = to_string(kind);
  p.residual = res;
  p.threshold = thr;
  p.holds = std::isfinite(res) && res <= thr;
  if (p.holds && kind == SymmetryKind::conformal) p.recovered = phi;
  out.push_back(p);
  if (kind == SymmetryKind::conformal) {
    PropertyRecord q;
    q.name = "conformal-density";
    q.residual = dens;
    q.threshold = thr;
    q.holds = std::isfinite(dens) && dens <= thr;
    out.push_back(q);
  }
  return out;
}

ClassificationReport classify_space(const ConnectionSpace& space, const std::vector<ChartPoint>& points,
                                    const ClassifyOptions& options) {
  if (points.empty()) throw ContractError("classify_space needs at least one point");
  if (options.recurrence_order != 1 && options.recurrence_order != 2) {
    throw ContractError("recurrence order must be 1 or 2");
  }
  const int n = space.dim();
  const double thr = holds_threshold(space, options.thresholds);
  const bool metric = space.has_metric();

  Accumulator torsion_free, flat, recurrent, equiaffine, semi, transport, einstein, ce_curv, ce_cotton;
  std::vector<std::vector<double>> rec_A, rec_w, rec_f, rec_P;

  for (const auto& x : points) {
    LocalGeometry g(space, x);
    const TensorValue gam = values(g.gamma());
    const double gscale = std::max(max_abs(gam), max_abs(gam) * max_abs(gam));
    const TensorValue t = values(g.torsion());
    torsion_free.add(max_abs(t), max_abs(gam));
    const TensorValue r = values(g.curvature());
    flat.add(max_abs(r), gscale);
    const TensorValue ric = contract(r, 0, 3);
    {
      double a = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a = std::max(a, std::abs(ric(i, j) - ric(j, i)));
      equiaffine.add(a, max_abs(ric));
    }

    // recurrence: nabla^p R = R (x) A
    try {
      TensorValue dr;
      if (options.recurrence_order == 1) {
        dr = values(g.covariant_derivative(g.curvature()));
      } else {
        auto first = [&space](const ChartPoint& p) {
          LocalGeometry gp(space, p);
          return values(gp.covariant_derivative(gp.curvature()));
        };
        dr = fd_covariant_derivative(first, g);
        recurrent.note = "second derivatives of the curvature by finite differences";
      }
      const std::size_t block = dr.size() / r.size();
      const double rr = dot(r, r);
      std::vector<double> A(block, 0.0);
      if (rr > 0.0) {
        for (std::size_t b = 0; b < block; ++b) {
          double s = 0.0;
          for (std::size_t f = 0; f < r.size(); ++f) s += r[f] * dr[f * block + b];
          A[b] = s / rr;
        }
      }
      double res = 0.0;
      for (std::size_t f = 0; f < r.size(); ++f)
        for (std::size_t b = 0; b < block; ++b) res = std::max(res, std::abs(dr[f * block + b] - r[f] * A[b]));
      recurrent.add(res, std::max(max_abs(dr), max_abs(r)));
      rec_A.push_back(A);
    } catch (const ToleranceError& e) {
      recurrent.failed = true;
      recurrent.value = kNaN;
      recurrent.note = std::string("not enough derivative levels: ") + e.what();
    }

    if (!metric) continue;
    const JetTensor gj = g.metric();
    const TensorValue gm = values(gj);
    const TensorValue gi = values(g.inverse_metric());
    const TensorValue dg = values(g.covariant_derivative(gj));  // [i][j][k] = g_{ij|k}
    transport.add(max_abs(dg), max_abs(gm));
    {
      std::vector<double> w(z(n), 0.0);
      const double gg = dot(gm, gm);
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) s += dg(i, j, k) * gm(i, j);
        w[z(k)] = s / gg;
      }
      double res = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) res = std::max(res, std::abs(dg(i, j, k) - w[z(k)] * gm(i, j)));
      semi.add(res, std::max(max_abs(dg), max_abs(gm)));
      rec_w.push_back(w);
    }
    double scal = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) scal += ric(i, j) * gi(i, j);
    {
      const double f = scal / n;
      double res = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) res = std::max(res, std::abs(ric(i, j) - f * gm(i, j)));
      einstein.add(res, max_abs(ric));
      rec_f.push_back({f});
    }

    if (n < 3) continue;
    try {
      // P_ij = (R_ij + (2/n) R_[ij] - scal g_ij / (2(n-1))) / (n-2), on jets for its derivative
      const JetTensor rj = contract(g.curvature(), 0, 3);
      const JetTensor& gij = g.inverse_metric();
      Jet sj(0.0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) sj += rj(i, j) * gij(i, j);
      JetTensor P = JetTensor::valence(n, 0, 2);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const Jet anti = 0.5 * (rj(i, j) - rj(j, i));
          P(i, j) = (rj(i, j) + (2.0 / n) * anti - (1.0 / (2.0 * (n - 1))) * sj * gj(i, j)) * (1.0 / (n - 2));
        }
      const TensorValue pv = values(P);
      // Displayed curvature form, sign matched to the curvature convention in use:
      //   R^i_jkl + d^i_k P_lj - d^i_l P_kj - d^i_j (P_kl - P_lk) - g_jk P^i_l + g_jl P^i_k
      TensorValue pu = TensorValue::valence(n, 1, 1);  // P^i_l = P_lm g^mi
      for (int i = 0; i < n; ++i)
        for (int l = 0; l < n; ++l) {
          double s = 0.0;
          for (int m = 0; m < n; ++m) s += pv(l, m) * gi(m, i);
          pu(i, l) = s;
        }
      double res = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
              double v = r(i, j, k, l);
              if (i == k) v += pv(l, j);
              if (i == l) v -= pv(k, j);
              if (i == j) v -= pv(k, l) - pv(l, k);
              v += -gm(j, k) * pu(i, l) + gm(j, l) * pu(i, k);
              res = std::max(res, std::abs(v));
            }
      ce_curv.add(res, max_abs(r));
      const TensorValue dp = values(g.covariant_derivative(P));  // [j][k][i] = P_{jk|i}
      double cot = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) cot = std::max(cot, std::abs(dp(j, k, i) - dp(i, k, j)));
      ce_cotton.add(cot, max_abs(dp));
      rec_P.push_back(std::vector<double>(pv.data().begin(), pv.data().end()));
    } catch (const ToleranceError& e) {
      ce_cotton.failed = true;
      ce_cotton.value = kNaN;
      ce_cotton.note = std::string("not enough derivative levels: ") + e.what();
    }
  }

  ClassificationReport rep;
  rep.sample_points = points;
  rep.properties.push_back(finish("torsion-free", torsion_free, thr, {}));
  rep.properties.push_back(finish("recurrent", recurrent, thr, rec_A));
  rep.properties.back().note += rep.properties.back().note.empty() ? "" : "; ";
  rep.properties.back().note += "order " + std::to_string(options.recurrence_order);
  rep.properties.push_back(finish("flat", flat, thr, {}));
  rep.properties.push_back(finish("equiaffine", equiaffine, thr, {}));
  if (metric) {
    rep.properties.push_back(finish("semi-metric", semi, thr, rec_w));
    rep.properties.push_back(finish("einstein", einstein, thr, rec_f));
    rep.properties.push_back(finish("metric-transport", transport, thr, {}));
    if (n >= 3) {
      PropertyRecord c = finish("conformally-euclidean.curvature", ce_curv, thr, {});
      PropertyRecord d = finish("conformally-euclidean.cotton", ce_cotton, thr, {});
      Accumulator both;
      both.value = std::isnan(ce_curv.value) || std::isnan(ce_cotton.value) ? kNaN : std::max(ce_curv.value, ce_cotton.value);
      both.failed = ce_curv.failed || ce_cotton.failed;
      both.note = ce_cotton.note;
      rep.properties.push_back(finish("conformally-euclidean", both, thr, rec_P));
      rep.properties.push_back(c);
      rep.properties.push_back(d);
    } else {
      rep.properties.push_back(not_applicable("conformally-euclidean", "needs n >= 3"));
    }
  } else {
    for (const char* name : {"semi-metric", "einstein", "metric-transport", "conformally-euclidean"}) {
      rep.properties.push_back(not_applicable(name, "no metric attached"));
    }
  }
  return rep;
}

}  // namespace lndev
