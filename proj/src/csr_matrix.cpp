#include "ftsim/csr_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "ftsim/bytes.hpp"

namespace ftsim {

CsrMatrix CsrMatrix::from_triplets(std::int64_t n, std::vector<Triplet> triplets,
                                   int n_ranks) {
  if (n < 0) throw UsageError("matrix dimension must be >= 0");
  if (n_ranks < 1) throw UsageError("matrix needs at least one rank block");
  for (const auto& t : triplets) {
    if (t.row < 0 || t.row >= n || t.col < 0 || t.col >= n)
      throw UsageError("triplet index out of range");
    if (!std::isfinite(t.value))
      throw UsageError("matrix values must be finite at construction");
  }
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  // merge duplicates
  std::vector<Triplet> merged;
  merged.reserve(triplets.size());
  for (const auto& t : triplets) {
    if (!merged.empty() && merged.back().row == t.row && merged.back().col == t.col)
      merged.back().value += t.value;
    else
      merged.push_back(t);
  }

  CsrMatrix A;
  A.n_ = n;
  A.part_ = Partition{n_ranks, n};
  A.blocks_.resize(static_cast<std::size_t>(n_ranks));
  std::size_t pos = 0;
  for (int r = 0; r < n_ranks; ++r) {
    auto& blk = A.blocks_[static_cast<std::size_t>(r)];
    blk.row_begin = A.part_.begin(r);
    blk.row_end = A.part_.end(r);
    blk.offsets.assign(static_cast<std::size_t>(blk.row_end - blk.row_begin) + 1, 0);
    std::size_t local_nnz = 0;
    const std::size_t start = pos;
    while (pos < merged.size() && merged[pos].row < blk.row_end) {
      ++local_nnz;
      ++pos;
    }
    blk.cols.reserve(local_nnz);
    blk.vals.reserve(local_nnz);
    for (std::size_t i = start; i < pos; ++i) {
      const auto local_row = static_cast<std::size_t>(merged[i].row - blk.row_begin);
      blk.offsets[local_row + 1] += 1;
      blk.cols.push_back(merged[i].col);
      blk.vals.push_back(merged[i].value);
    }
    for (std::size_t i = 1; i < blk.offsets.size(); ++i) blk.offsets[i] += blk.offsets[i - 1];
  }
  return A;
}

CsrMatrix CsrMatrix::identity(std::int64_t n, int n_ranks) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  return from_triplets(n, std::move(t), n_ranks);
}

CsrMatrix CsrMatrix::diagonal(const std::vector<double>& values, int n_ranks) {
  std::vector<Triplet> t;
  t.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    t.push_back({static_cast<std::int64_t>(i), static_cast<std::int64_t>(i), values[i]});
  return from_triplets(static_cast<std::int64_t>(values.size()), std::move(t), n_ranks);
}

CsrMatrix CsrMatrix::laplace1d(std::int64_t n, int n_ranks) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(3 * n));
  for (std::int64_t i = 0; i < n; ++i) {
    if (i > 0) t.push_back({i, i - 1, -1.0});
    t.push_back({i, i, 2.0});
    if (i + 1 < n) t.push_back({i, i + 1, -1.0});
  }
  return from_triplets(n, std::move(t), n_ranks);
}

CsrMatrix CsrMatrix::laplace2d(std::int64_t nx, std::int64_t ny, int n_ranks) {
  const std::int64_t n = nx * ny;
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(5 * n));
  for (std::int64_t y = 0; y < ny; ++y) {
    for (std::int64_t x = 0; x < nx; ++x) {
      const std::int64_t g = y * nx + x;
      if (y > 0) t.push_back({g, g - nx, -1.0});
      if (x > 0) t.push_back({g, g - 1, -1.0});
      t.push_back({g, g, 4.0});
      if (x + 1 < nx) t.push_back({g, g + 1, -1.0});
      if (y + 1 < ny) t.push_back({g, g + nx, -1.0});
    }
  }
  return from_triplets(n, std::move(t), n_ranks);
}

CsrMatrix CsrMatrix::load_matrix_market(const std::string& path, int n_ranks) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open matrix file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty matrix file: " + path);
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || object != "matrix" || format != "coordinate")
    throw ConfigError("expected MatrixMarket coordinate header in " + path);
  if (field != "real" && field != "integer" && field != "pattern")
    throw ConfigError("unsupported MatrixMarket field '" + field + "' in " + path);
  const bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general")
    throw ConfigError("unsupported MatrixMarket symmetry '" + symmetry + "' in " + path);

  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  std::int64_t rows = 0, cols = 0, nnz = 0;
  {
    std::istringstream sizes(line);
    if (!(sizes >> rows >> cols >> nnz))
      throw ConfigError("malformed MatrixMarket size line in " + path);
  }
  if (rows != cols) throw ConfigError("matrix must be square: " + path);

  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(symmetric ? 2 * nnz : nnz));
  for (std::int64_t k = 0; k < nnz; ++k) {
    if (!std::getline(in, line))
      throw ConfigError("truncated MatrixMarket file: " + path);
    if (!line.empty() && line[0] == '%') {
      --k;
      continue;
    }
    std::istringstream row(line);
    std::int64_t i = 0, j = 0;
    double v = 1.0;
    if (!(row >> i >> j)) throw ConfigError("malformed entry in " + path);
    if (field != "pattern") row >> v;
    t.push_back({i - 1, j - 1, v});
    if (symmetric && i != j) t.push_back({j - 1, i - 1, v});
  }
  return from_triplets(rows, std::move(t), n_ranks);
}

void CsrMatrix::save_matrix_market(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write matrix file: " + path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << n_ << " " << n_ << " " << nnz() << "\n";
  char buf[64];
  for (const auto& blk : blocks_) {
    for (std::int64_t lr = 0; lr < blk.row_end - blk.row_begin; ++lr) {
      for (std::int64_t k = blk.offsets[static_cast<std::size_t>(lr)];
           k < blk.offsets[static_cast<std::size_t>(lr) + 1]; ++k) {
        std::snprintf(buf, sizeof(buf), "%lld %lld %.17g\n",
                      static_cast<long long>(blk.row_begin + lr + 1),
                      static_cast<long long>(blk.cols[static_cast<std::size_t>(k)] + 1),
                      blk.vals[static_cast<std::size_t>(k)]);
        out << buf;
      }
    }
  }
}

std::int64_t CsrMatrix::nnz() const {
  std::int64_t total = 0;
  for (const auto& blk : blocks_) total += static_cast<std::int64_t>(blk.vals.size());
  return total;
}

double CsrMatrix::inf_norm() const {
  double best = 0.0;
  for (const auto& blk : blocks_) {
    for (std::int64_t lr = 0; lr < blk.row_end - blk.row_begin; ++lr) {
      double row_sum = 0.0;
      for (std::int64_t k = blk.offsets[static_cast<std::size_t>(lr)];
           k < blk.offsets[static_cast<std::size_t>(lr) + 1]; ++k)
        row_sum += std::abs(blk.vals[static_cast<std::size_t>(k)]);
      best = std::max(best, row_sum);
    }
  }
  return best;
}

CsrMatrix CsrMatrix::repartition(int n_ranks) const {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(nnz()));
  for (const auto& blk : blocks_) {
    for (std::int64_t lr = 0; lr < blk.row_end - blk.row_begin; ++lr) {
      for (std::int64_t k = blk.offsets[static_cast<std::size_t>(lr)];
           k < blk.offsets[static_cast<std::size_t>(lr) + 1]; ++k)
        t.push_back({blk.row_begin + lr, blk.cols[static_cast<std::size_t>(k)],
                     blk.vals[static_cast<std::size_t>(k)]});
    }
  }
  return from_triplets(n_, std::move(t), n_ranks);
}

// ---------------------------------------------------------------------------

std::vector<double> spmv_serial(const CsrMatrix& A, std::span<const double> x) {
  if (static_cast<std::int64_t>(x.size()) != A.n())
    throw UsageError("spmv dimension mismatch");
  std::vector<double> y(static_cast<std::size_t>(A.n()), 0.0);
  for (int r = 0; r < A.n_ranks(); ++r) {
    const auto& blk = A.block(r);
    for (std::int64_t lr = 0; lr < blk.row_end - blk.row_begin; ++lr) {
      double acc = 0.0;
      for (std::int64_t k = blk.offsets[static_cast<std::size_t>(lr)];
           k < blk.offsets[static_cast<std::size_t>(lr) + 1]; ++k)
        acc += blk.vals[static_cast<std::size_t>(k)] *
               x[static_cast<std::size_t>(blk.cols[static_cast<std::size_t>(k)])];
      y[static_cast<std::size_t>(blk.row_begin + lr)] = acc;
    }
  }
  return y;
}

void spmv(SimCluster& cluster, const CsrMatrix& A, const DistVector& x, DistVector& y) {
  if (A.n() != x.size() || A.n() != y.size()) throw UsageError("spmv dimension mismatch");
  if (A.n_ranks() != x.part().n_ranks)
    throw UsageError("matrix and vector use different partitions");
  const Partition& part = x.part();
  const int P = part.n_ranks;

  // Which off-block entries each rank needs, sorted by global index.
  std::vector<std::vector<std::int64_t>> needed(static_cast<std::size_t>(P));
  for (int r = 0; r < P; ++r) {
    const auto& blk = A.block(r);
    auto& list = needed[static_cast<std::size_t>(r)];
    for (std::int64_t c : blk.cols)
      if (c < blk.row_begin || c >= blk.row_end) list.push_back(c);
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }

  // Halo exchange: owners push the requested values in a deterministic
  // (owner, needer) order, packed in ascending global index.
  std::vector<std::map<std::int64_t, double>> halo(static_cast<std::size_t>(P));
  for (int needer = 0; needer < P; ++needer) {
    // group needs by owner
    std::map<int, std::vector<std::int64_t>> by_owner;
    for (std::int64_t g : needed[static_cast<std::size_t>(needer)])
      by_owner[part.owner(g)].push_back(g);
    for (auto& [owner, idxs] : by_owner) {
      ByteWriter w;
      w.put_u64(idxs.size());
      auto xo = x.block(owner);
      for (std::int64_t g : idxs)
        w.put_f64(xo[static_cast<std::size_t>(g - part.begin(owner))]);
      cluster.send(owner, needer, w.take(), "halo");
      auto payload = cluster.recv(owner, needer);
      ByteReader rd(payload);
      const std::uint64_t count = rd.get_u64();
      for (std::uint64_t i = 0; i < count; ++i)
        halo[static_cast<std::size_t>(needer)][idxs[static_cast<std::size_t>(i)]] = rd.get_f64();
    }
  }

  for (int r = 0; r < P; ++r) {
    const auto& blk = A.block(r);
    auto xb = x.block(r);
    auto yb = y.block(r);
    const auto& h = halo[static_cast<std::size_t>(r)];
    for (std::int64_t lr = 0; lr < blk.row_end - blk.row_begin; ++lr) {
      double acc = 0.0;
      for (std::int64_t k = blk.offsets[static_cast<std::size_t>(lr)];
           k < blk.offsets[static_cast<std::size_t>(lr) + 1]; ++k) {
        const std::int64_t c = blk.cols[static_cast<std::size_t>(k)];
        const double xv = (c >= blk.row_begin && c < blk.row_end)
                              ? xb[static_cast<std::size_t>(c - blk.row_begin)]
                              : h.at(c);
        acc += blk.vals[static_cast<std::size_t>(k)] * xv;
      }
      yb[static_cast<std::size_t>(lr)] = acc;
    }
  }
}

}  // namespace ftsim
