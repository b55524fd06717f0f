#include "ftsim/dist_vector.hpp"

#include <cmath>

namespace ftsim {

std::int64_t Partition::begin(int rank) const {
  const std::int64_t base = global_n / n_ranks;
  const std::int64_t rem = global_n % n_ranks;
  return rank * base + std::min<std::int64_t>(rank, rem);
}

std::int64_t Partition::end(int rank) const { return begin(rank + 1); }

int Partition::owner(std::int64_t g) const {
  // block sizes differ by at most one; ranks [0, rem) hold base+1 rows
  const std::int64_t base = global_n / n_ranks;
  const std::int64_t rem = global_n % n_ranks;
  const std::int64_t big = (base + 1) * rem;
  if (g < big) return static_cast<int>(g / (base + 1));
  return static_cast<int>(rem + (g - big) / (base == 0 ? 1 : base));
}

DistVector::DistVector(SimCluster& cluster, std::int64_t global_n, RegionKind kind,
                       const std::string& label)
    : cluster_(&cluster), kind_(kind), label_(label) {
  if (global_n < 0) throw UsageError("vector length must be >= 0");
  part_ = Partition{cluster.n_ranks(), global_n};
  blocks_.reserve(static_cast<std::size_t>(cluster.n_ranks()));
  for (int r = 0; r < cluster.n_ranks(); ++r)
    blocks_.push_back(cluster.region_or_alloc(
        r, kind, label, static_cast<std::size_t>(part_.local_n(r))));
}

std::span<double> DistVector::block(int rank) {
  return cluster_->regions().at(blocks_[static_cast<std::size_t>(rank)]).span();
}

std::span<const double> DistVector::block(int rank) const {
  return cluster_->regions().at(blocks_[static_cast<std::size_t>(rank)]).span();
}

Region& DistVector::region(int rank) {
  return cluster_->regions().at(blocks_[static_cast<std::size_t>(rank)]);
}

const Region& DistVector::region(int rank) const {
  return cluster_->regions().at(blocks_[static_cast<std::size_t>(rank)]);
}

double DistVector::get(std::int64_t g) const {
  const int r = part_.owner(g);
  return block(r)[static_cast<std::size_t>(g - part_.begin(r))];
}

void DistVector::set(std::int64_t g, double value) {
  const int r = part_.owner(g);
  block(r)[static_cast<std::size_t>(g - part_.begin(r))] = value;
}

std::vector<double> DistVector::gather() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(part_.global_n));
  for (int r = 0; r < part_.n_ranks; ++r) {
    auto b = block(r);
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

void DistVector::scatter(std::span<const double> values) {
  if (static_cast<std::int64_t>(values.size()) != part_.global_n)
    throw UsageError("scatter length mismatch");
  for (int r = 0; r < part_.n_ranks; ++r) {
    auto b = block(r);
    const auto off = static_cast<std::size_t>(part_.begin(r));
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = values[off + i];
  }
}

void DistVector::fill(double value) {
  for (int r = 0; r < part_.n_ranks; ++r)
    for (double& v : block(r)) v = value;
}

void require_same_distribution(const DistVector& x, const DistVector& y) {
  if (!(x.part() == y.part()))
    throw UsageError("vectors have different distributions");
}

void copy(const DistVector& x, DistVector& y) {
  require_same_distribution(x, y);
  for (int r = 0; r < x.part().n_ranks; ++r) {
    auto xs = x.block(r);
    auto ys = y.block(r);
    for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = xs[i];
  }
}

void scale(DistVector& x, double alpha) {
  for (int r = 0; r < x.part().n_ranks; ++r)
    for (double& v : x.block(r)) v *= alpha;
}

void axpy(double alpha, const DistVector& x, DistVector& y) {
  require_same_distribution(x, y);
  for (int r = 0; r < x.part().n_ranks; ++r) {
    auto xs = x.block(r);
    auto ys = y.block(r);
    for (std::size_t i = 0; i < xs.size(); ++i) ys[i] += alpha * xs[i];
  }
}

namespace {

ReduceComponent dot_component(const DistVector& x, const DistVector& y) {
  ReduceComponent comp;
  comp.addends_by_rank.resize(static_cast<std::size_t>(x.part().n_ranks));
  for (int r = 0; r < x.part().n_ranks; ++r) {
    auto xs = x.block(r);
    auto ys = y.block(r);
    auto& addends = comp.addends_by_rank[static_cast<std::size_t>(r)];
    addends.resize(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) addends[i] = xs[i] * ys[i];
  }
  return comp;
}

}  // namespace

double dot(const DistVector& x, const DistVector& y) {
  require_same_distribution(x, y);
  auto vals = x.cluster()->allreduce_ordered({dot_component(x, y)});
  return vals[0];
}

CollectiveHandle idot(const DistVector& x, const DistVector& y) {
  require_same_distribution(x, y);
  return x.cluster()->iallreduce_ordered({dot_component(x, y)});
}

double norm2(const DistVector& x) { return std::sqrt(dot(x, x)); }

double dot_local(const DistVector& x, const DistVector& y) {
  require_same_distribution(x, y);
  double sum = 0.0;
  for (int r = 0; r < x.part().n_ranks; ++r) {
    auto xs = x.block(r);
    auto ys = y.block(r);
    for (std::size_t i = 0; i < xs.size(); ++i) sum += xs[i] * ys[i];
  }
  return sum;
}

double norm2_sq_local(const DistVector& x) { return dot_local(x, x); }

bool all_finite(const DistVector& x) {
  for (int r = 0; r < x.part().n_ranks; ++r)
    for (double v : x.block(r))
      if (!std::isfinite(v)) return false;
  return true;
}

void promote(const DistVector& src, DistVector& dst) {
  require_same_distribution(src, dst);
  for (int r = 0; r < src.part().n_ranks; ++r)
    ftsim::promote(src.region(r), dst.region(r));
}

}  // namespace ftsim
