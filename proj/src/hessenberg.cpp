#include "ftsim/hessenberg.hpp"

#include <cmath>

namespace ftsim {

namespace {

// Stable Givens coefficients zeroing b against a.
void givens(double a, double b, double& c, double& s, double& r) {
  if (b == 0.0) {
    c = 1.0;
    s = 0.0;
    r = a;
  } else if (std::abs(b) > std::abs(a)) {
    const double t = a / b;
    const double u = std::sqrt(1.0 + t * t);
    s = 1.0 / u;
    c = s * t;
    r = b * u;
  } else {
    const double t = b / a;
    const double u = std::sqrt(1.0 + t * t);
    c = 1.0 / u;
    s = c * t;
    r = a * u;
  }
}

}  // namespace

Hessenberg::Hessenberg(SimCluster& cluster, int m, const std::string& label)
    : cluster_(&cluster), m_(m) {
  if (m < 1) throw UsageError("Hessenberg needs at least one column");
  const auto mm = static_cast<std::size_t>(m);
  h_raw_ = cluster.region_or_alloc(0, RegionKind::Reliable, label,
                                   (mm + 1) * mm);
  r_tri_ = cluster.region_or_alloc(0, RegionKind::Reliable, label + "/r",
                                   (mm + 1) * mm);
  givens_ = cluster.region_or_alloc(0, RegionKind::Reliable, label + "/givens", 2 * mm);
  rhs_ = cluster.region_or_alloc(0, RegionKind::Reliable, label + "/rhs", mm + 1);
}

void Hessenberg::reset(double beta) {
  auto& t = cluster_->regions();
  for (double& v : t.at(h_raw_).data) v = 0.0;
  for (double& v : t.at(r_tri_).data) v = 0.0;
  for (double& v : t.at(givens_).data) v = 0.0;
  auto& g = t.at(rhs_).data;
  for (double& v : g) v = 0.0;
  g[0] = beta;
  j_ = 0;
  lucky_ = false;
  estimate_ = std::abs(beta);
}

double& Hessenberg::rref(int i, int j) {
  return cluster_->regions().at(r_tri_).data[static_cast<std::size_t>(j) *
                                                 static_cast<std::size_t>(m_ + 1) +
                                             static_cast<std::size_t>(i)];
}

double Hessenberg::rref(int i, int j) const {
  return cluster_->regions().at(r_tri_).data[static_cast<std::size_t>(j) *
                                                 static_cast<std::size_t>(m_ + 1) +
                                             static_cast<std::size_t>(i)];
}

double Hessenberg::entry(int i, int j) const {
  return cluster_->regions().at(h_raw_).data[static_cast<std::size_t>(j) *
                                                 static_cast<std::size_t>(m_ + 1) +
                                             static_cast<std::size_t>(i)];
}

double Hessenberg::r_entry(int i, int j) const { return rref(i, j); }

double Hessenberg::append_column(std::span<const double> h_col) {
  if (j_ >= m_) throw UsageError("Hessenberg is full");
  if (static_cast<int>(h_col.size()) != j_ + 2)
    throw UsageError("column must carry j+2 entries");
  const int j = j_;
  auto& t = cluster_->regions();
  auto& raw = t.at(h_raw_).data;
  auto& gv = t.at(givens_).data;
  auto& g = t.at(rhs_).data;

  for (int i = 0; i <= j + 1; ++i) {
    raw[static_cast<std::size_t>(j) * static_cast<std::size_t>(m_ + 1) +
        static_cast<std::size_t>(i)] = h_col[static_cast<std::size_t>(i)];
    rref(i, j) = h_col[static_cast<std::size_t>(i)];
  }

  // previously accumulated rotations
  for (int i = 0; i < j; ++i) {
    const double c = gv[static_cast<std::size_t>(i)];
    const double s = gv[static_cast<std::size_t>(m_ + i)];
    const double top = rref(i, j);
    const double bot = rref(i + 1, j);
    rref(i, j) = c * top + s * bot;
    rref(i + 1, j) = -s * top + c * bot;
  }

  const double subdiag = h_col[static_cast<std::size_t>(j + 1)];
  lucky_ = subdiag == 0.0;

  double c = 1.0, s = 0.0, r = rref(j, j);
  givens(rref(j, j), rref(j + 1, j), c, s, r);
  gv[static_cast<std::size_t>(j)] = c;
  gv[static_cast<std::size_t>(m_ + j)] = s;
  rref(j, j) = r;
  rref(j + 1, j) = 0.0;

  const double gj = g[static_cast<std::size_t>(j)];
  g[static_cast<std::size_t>(j)] = c * gj;
  g[static_cast<std::size_t>(j + 1)] = -s * gj;

  ++j_;
  estimate_ = std::abs(g[static_cast<std::size_t>(j_)]);
  if (lucky_) estimate_ = 0.0;  // exact Krylov invariance: solution is exact
  return estimate_;
}

bool Hessenberg::solvable(int cols) const {
  if (cols < 1 || cols > j_) return false;
  for (int i = 0; i < cols; ++i) {
    const double d = rref(i, i);
    if (d == 0.0 || !std::isfinite(d)) return false;
  }
  return true;
}

std::vector<double> Hessenberg::solve(int cols) const {
  if (cols < 1 || cols > j_) throw UsageError("solve: bad column count");
  const auto& t = cluster_->regions();
  const auto& g = t.at(rhs_).data;
  std::vector<double> y(static_cast<std::size_t>(cols), 0.0);
  for (int i = cols - 1; i >= 0; --i) {
    double sum = g[static_cast<std::size_t>(i)];
    for (int k = i + 1; k < cols; ++k) sum -= rref(i, k) * y[static_cast<std::size_t>(k)];
    const double d = rref(i, i);
    if (d == 0.0) throw UsageError("singular triangular factor");
    y[static_cast<std::size_t>(i)] = sum / d;
  }
  return y;
}

LsqResult hessenberg_lsq(const std::vector<std::vector<double>>& columns, double beta) {
  const int m = static_cast<int>(columns.size());
  if (m < 1) throw UsageError("need at least one column");
  std::vector<std::vector<double>> R(columns.size());
  std::vector<double> gc(static_cast<std::size_t>(m)), gs(static_cast<std::size_t>(m));
  std::vector<double> g(static_cast<std::size_t>(m) + 1, 0.0);
  g[0] = beta;
  bool lucky = false;
  for (int j = 0; j < m; ++j) {
    const auto& col = columns[static_cast<std::size_t>(j)];
    if (static_cast<int>(col.size()) != j + 2)
      throw UsageError("column " + std::to_string(j) + " must carry j+2 entries");
    std::vector<double> v(col.begin(), col.end());
    for (int i = 0; i < j; ++i) {
      const double top = v[static_cast<std::size_t>(i)];
      const double bot = v[static_cast<std::size_t>(i + 1)];
      v[static_cast<std::size_t>(i)] = gc[static_cast<std::size_t>(i)] * top +
                                       gs[static_cast<std::size_t>(i)] * bot;
      v[static_cast<std::size_t>(i + 1)] = -gs[static_cast<std::size_t>(i)] * top +
                                           gc[static_cast<std::size_t>(i)] * bot;
    }
    if (col[static_cast<std::size_t>(j + 1)] == 0.0) lucky = true;
    double c = 1.0, s = 0.0, r = 0.0;
    givens(v[static_cast<std::size_t>(j)], v[static_cast<std::size_t>(j + 1)], c, s, r);
    gc[static_cast<std::size_t>(j)] = c;
    gs[static_cast<std::size_t>(j)] = s;
    v[static_cast<std::size_t>(j)] = r;
    v[static_cast<std::size_t>(j + 1)] = 0.0;
    const double gj = g[static_cast<std::size_t>(j)];
    g[static_cast<std::size_t>(j)] = c * gj;
    g[static_cast<std::size_t>(j + 1)] = -s * gj;
    R[static_cast<std::size_t>(j)] = std::move(v);
  }
  LsqResult out;
  out.lucky_breakdown = lucky;
  out.residual_estimate = lucky ? 0.0 : std::abs(g[static_cast<std::size_t>(m)]);
  out.y.assign(static_cast<std::size_t>(m), 0.0);
  for (int i = m - 1; i >= 0; --i) {
    double sum = g[static_cast<std::size_t>(i)];
    for (int k = i + 1; k < m; ++k)
      sum -= R[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] *
             out.y[static_cast<std::size_t>(k)];
    out.y[static_cast<std::size_t>(i)] = sum / R[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
  }
  return out;
}

}  // namespace ftsim
