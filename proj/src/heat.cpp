#include "ftsim/heat.hpp"

#include <algorithm>
#include <cmath>

#include "ftsim/bytes.hpp"
#include "ftsim/dist_vector.hpp"

namespace ftsim {

void HeatConfig::validate() const {
  if (n_global < 1) throw ConfigError("heat: need at least one grid point");
  if (alpha <= 0.0) throw ConfigError("heat: diffusivity must be > 0");
  if (dx <= 0.0 || dt <= 0.0) throw ConfigError("heat: dx and dt must be > 0");
  if (n_steps < 0) throw ConfigError("heat: n_steps must be >= 0");
  if (persist_interval < 1) throw ConfigError("heat: persist interval must be >= 1");
  const double limit = dx * dx / (2.0 * alpha);
  if (dt > limit)
    throw ConfigError("heat: unstable step, require dt <= dx^2/(2*alpha) = " +
                      std::to_string(limit));
}

namespace {

struct RankState {
  std::span<double> u;
  std::span<double> hist_l;  // values sent left, per step since last persist
  std::span<double> hist_r;  // values sent right
  std::int64_t last_persist = 0;
  std::int64_t hist_valid_after = 0;  // steps <= this are no longer retained
};

/// u' over one subdomain given the incoming halo values.
void apply_stencil(std::span<double> u, std::vector<double>& scratch, double r,
                   double left_in, double right_in) {
  const std::size_t n = u.size();
  scratch.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i == 0 ? left_in : u[i - 1];
    const double right = i + 1 == n ? right_in : u[i + 1];
    scratch[i] = u[i] + r * (left - 2.0 * u[i] + right);
  }
  for (std::size_t i = 0; i < n; ++i) u[i] = scratch[i];
}

std::vector<std::uint8_t> pack_state(std::int64_t step, std::span<const double> u) {
  ByteWriter w;
  w.put_i64(step);
  w.put_f64s(u);
  return w.take();
}

void unpack_state(std::span<const std::uint8_t> blob, std::int64_t& step,
                  std::vector<double>& u) {
  ByteReader r(blob);
  step = r.get_i64();
  u = r.get_f64s();
}

}  // namespace

HeatRunResult run_plain(SimCluster& cluster, const HeatConfig& config,
                        std::span<const double> initial) {
  config.validate();
  if (static_cast<std::int64_t>(initial.size()) != config.n_global)
    throw UsageError("initial field length mismatch");
  const double t0 = cluster.clock_units();
  const int P = cluster.n_ranks();
  const Partition part{P, config.n_global};
  const double rc = config.r();

  std::vector<std::span<double>> u(static_cast<std::size_t>(P));
  for (int r = 0; r < P; ++r) {
    const RegionId id = cluster.region_or_alloc(
        r, RegionKind::Unreliable, "u", static_cast<std::size_t>(part.local_n(r)));
    u[static_cast<std::size_t>(r)] = cluster.regions().at(id).span();
    for (std::int64_t i = 0; i < part.local_n(r); ++i)
      u[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)] =
          initial[static_cast<std::size_t>(part.begin(r) + i)];
  }

  std::vector<double> scratch;
  std::vector<double> left_in(static_cast<std::size_t>(P)), right_in(static_cast<std::size_t>(P));
  for (std::int64_t s = 1; s <= config.n_steps; ++s) {
    cluster.advance_compute(config.step_cost);
    for (int r = 0; r < P; ++r) {
      if (r > 0) {
        ByteWriter w;
        w.put_f64(u[static_cast<std::size_t>(r)][0]);
        cluster.send(r, r - 1, w.take(), "halo");
      }
      if (r + 1 < P) {
        ByteWriter w;
        w.put_f64(u[static_cast<std::size_t>(r)].back());
        cluster.send(r, r + 1, w.take(), "halo");
      }
    }
    for (int r = 0; r < P; ++r) {
      if (r > 0) {
        ByteReader rd(cluster.recv(r - 1, r));
        left_in[static_cast<std::size_t>(r)] = rd.get_f64();
      } else {
        left_in[static_cast<std::size_t>(r)] = config.left_value;
      }
      if (r + 1 < P) {
        ByteReader rd(cluster.recv(r + 1, r));
        right_in[static_cast<std::size_t>(r)] = rd.get_f64();
      } else {
        right_in[static_cast<std::size_t>(r)] = config.right_value;
      }
    }
    for (int r = 0; r < P; ++r)
      apply_stencil(u[static_cast<std::size_t>(r)], scratch, rc,
                    left_in[static_cast<std::size_t>(r)], right_in[static_cast<std::size_t>(r)]);
  }

  HeatRunResult out;
  out.steps = config.n_steps;
  for (int r = 0; r < P; ++r)
    out.final_field.insert(out.final_field.end(), u[static_cast<std::size_t>(r)].begin(),
                           u[static_cast<std::size_t>(r)].end());
  out.simulated_elapsed = cluster.clock_units() - t0;
  return out;
}

HeatRunResult run_with_lflr(SimCluster& cluster, const HeatConfig& config,
                            std::span<const double> initial, const FaultPlan& plan,
                            PersistOptions persist_opts) {
  config.validate();
  if (static_cast<std::int64_t>(initial.size()) != config.n_global)
    throw UsageError("initial field length mismatch");
  const double t0 = cluster.clock_units();
  const int P = cluster.n_ranks();
  const Partition part{P, config.n_global};
  const double rc = config.r();
  const std::int64_t C = config.persist_interval;

  PersistentStore store(cluster, persist_opts);
  std::vector<RankState> st(static_cast<std::size_t>(P));
  auto bind_spans = [&](int r) {
    auto& s = st[static_cast<std::size_t>(r)];
    s.u = cluster.regions().find(r, "u")->span();
    s.hist_l = cluster.regions().find(r, "hist_l")->span();
    s.hist_r = cluster.regions().find(r, "hist_r")->span();
  };
  for (int r = 0; r < P; ++r) {
    cluster.region_or_alloc(r, RegionKind::Unreliable, "u",
                            static_cast<std::size_t>(part.local_n(r)));
    cluster.region_or_alloc(r, RegionKind::Reliable, "hist_l", static_cast<std::size_t>(C));
    cluster.region_or_alloc(r, RegionKind::Reliable, "hist_r", static_cast<std::size_t>(C));
    bind_spans(r);
    for (std::int64_t i = 0; i < part.local_n(r); ++i)
      st[static_cast<std::size_t>(r)].u[static_cast<std::size_t>(i)] =
          initial[static_cast<std::size_t>(part.begin(r) + i)];
  }

  HeatRunResult out;
  std::int64_t completed_step = 0;
  std::vector<double> scratch;

  // Recovery: restore the last persisted block, then replay the missed steps
  // from the neighbors' retained outgoing halo values. Only the failed rank
  // and its grid neighbors touch the wire.
  for (int r = 0; r < P; ++r) {
    store.register_recovery(r, [&, r](RecoveryContext& ctx) {
      bind_spans(r);  // respawn re-blanked the regions
      auto& mine = st[static_cast<std::size_t>(r)];
      auto it = ctx.restored.find("u");
      if (it == ctx.restored.end())
        throw UnrecoverableFailureError("heat: no persisted block for rank " +
                                        std::to_string(r));
      std::int64_t p = 0;
      std::vector<double> saved;
      unpack_state(it->second.blob, p, saved);
      if (static_cast<std::int64_t>(saved.size()) != part.local_n(r))
        throw UnrecoverableFailureError("heat: persisted block has wrong length");
      for (std::size_t i = 0; i < saved.size(); ++i) mine.u[i] = saved[i];
      mine.last_persist = p;
      mine.hist_valid_after = p;  // respawn blanked the retention; replay rebuilds from p+1

      const std::int64_t missed = completed_step - p;
      std::vector<double> left_hist, right_hist;
      if (missed > 0) {
        // retention holds the neighbors' last C outgoing values, indexed by
        // (step-1) mod C; the window is long enough exactly when the missed
        // span fits into one persist interval
        if (missed > C)
          throw UnrecoverableFailureError("heat: missed span exceeds the retention window");
        auto pull = [&](int nb, bool left_side) {
          if (!ctx.cluster->is_alive(nb) ||
              st[static_cast<std::size_t>(nb)].hist_valid_after > p)
            throw UnrecoverableFailureError(
                "heat: halo history for ranks " + std::to_string(r) + "/" +
                std::to_string(nb) + " is unavailable");
          const auto& hist = left_side ? st[static_cast<std::size_t>(nb)].hist_r
                                       : st[static_cast<std::size_t>(nb)].hist_l;
          ByteWriter w;
          for (std::int64_t q = p + 1; q <= completed_step; ++q)
            w.put_f64(hist[static_cast<std::size_t>((q - 1) % C)]);
          ctx.cluster->send(nb, r, w.take(), "recovery:halo");
          ByteReader rd(ctx.cluster->recv(nb, r));
          auto& out = left_side ? left_hist : right_hist;
          for (std::int64_t q = 0; q < missed; ++q) out.push_back(rd.get_f64());
          ctx.fetched_bytes += static_cast<std::uint64_t>(missed) * sizeof(double);
        };
        if (r > 0) pull(r - 1, true);
        if (r + 1 < P) pull(r + 1, false);
        // replay; retention is rebuilt so this rank can serve later
        // recoveries of its own neighbors
        for (std::int64_t q = p + 1; q <= completed_step; ++q) {
          const std::int64_t slot = (q - 1) % C;
          mine.hist_l[static_cast<std::size_t>(slot)] = mine.u[0];
          mine.hist_r[static_cast<std::size_t>(slot)] = mine.u[mine.u.size() - 1];
          const double li =
              r > 0 ? left_hist[static_cast<std::size_t>(q - p - 1)] : config.left_value;
          const double ri = r + 1 < P ? right_hist[static_cast<std::size_t>(q - p - 1)]
                                      : config.right_value;
          std::vector<double> tmp;
          apply_stencil(mine.u, tmp, rc, li, ri);
        }
        ctx.cluster->advance_compute(r, config.step_cost * static_cast<double>(missed));
      }
    });
  }

  auto persist_all = [&](std::int64_t step) {
    for (int r = 0; r < P; ++r) {
      if (!cluster.is_alive(r)) continue;
      auto& mine = st[static_cast<std::size_t>(r)];
      (void)store.persist(r, "u", pack_state(step, mine.u));
      mine.last_persist = step;
    }
  };

  cluster.attach_fault_plan(plan);
  persist_all(0);

  std::vector<double> left_in(static_cast<std::size_t>(P)), right_in(static_cast<std::size_t>(P));
  for (std::int64_t s = 1; s <= config.n_steps; ++s) {
    cluster.advance_compute(config.step_cost);

    // survivors stall at the exchange while failed ranks are brought back
    for (int r = 0; r < P; ++r)
      if (cluster.status(r) == RankStatus::Failed)
        out.recoveries.push_back(store.recover(r));

    for (int r = 0; r < P; ++r) {
      auto& mine = st[static_cast<std::size_t>(r)];
      const std::int64_t slot = (s - 1) % C;
      mine.hist_l[static_cast<std::size_t>(slot)] = mine.u[0];
      mine.hist_r[static_cast<std::size_t>(slot)] = mine.u[mine.u.size() - 1];
      if (r > 0) {
        ByteWriter w;
        w.put_f64(mine.u[0]);
        cluster.send(r, r - 1, w.take(), "halo");
      }
      if (r + 1 < P) {
        ByteWriter w;
        w.put_f64(mine.u[mine.u.size() - 1]);
        cluster.send(r, r + 1, w.take(), "halo");
      }
    }
    for (int r = 0; r < P; ++r) {
      if (r > 0) {
        ByteReader rd(cluster.recv(r - 1, r));
        left_in[static_cast<std::size_t>(r)] = rd.get_f64();
      } else {
        left_in[static_cast<std::size_t>(r)] = config.left_value;
      }
      if (r + 1 < P) {
        ByteReader rd(cluster.recv(r + 1, r));
        right_in[static_cast<std::size_t>(r)] = rd.get_f64();
      } else {
        right_in[static_cast<std::size_t>(r)] = config.right_value;
      }
    }
    for (int r = 0; r < P; ++r)
      apply_stencil(st[static_cast<std::size_t>(r)].u, scratch, rc,
                    left_in[static_cast<std::size_t>(r)],
                    right_in[static_cast<std::size_t>(r)]);

    completed_step = s;
    if (s % C == 0) persist_all(s);
  }

  // faults scheduled after the last step (if any) are ignored by design

  for (int r = 0; r < P; ++r) {
    if (cluster.status(r) == RankStatus::Failed)
      out.recoveries.push_back(store.recover(r));
  }

  out.steps = config.n_steps;
  for (int r = 0; r < P; ++r) {
    auto u = st[static_cast<std::size_t>(r)].u;
    out.final_field.insert(out.final_field.end(), u.begin(), u.end());
  }
  out.simulated_elapsed = cluster.clock_units() - t0;
  return out;
}

double steady_state_check(const HeatConfig& config, int n_ranks, std::uint64_t seed) {
  ClusterConfig cc;
  cc.n_ranks = n_ranks;
  cc.seed = seed;
  SimCluster cluster(cc);
  std::vector<double> initial(static_cast<std::size_t>(config.n_global), 0.0);
  const auto run = run_plain(cluster, config, initial);
  double worst = 0.0;
  const auto n = static_cast<double>(config.n_global);
  for (std::size_t i = 0; i < run.final_field.size(); ++i) {
    const double xi = static_cast<double>(i + 1) / (n + 1.0);
    const double steady = config.left_value + (config.right_value - config.left_value) * xi;
    worst = std::max(worst, std::abs(run.final_field[i] - steady));
  }
  return worst;
}

}  // namespace ftsim
