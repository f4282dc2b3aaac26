#ifndef MAXNT_RADIO_HPP
#define MAXNT_RADIO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "maxnt/error.hpp"

namespace maxnt {

inline constexpr double kPowerOff = -std::numeric_limits<double>::infinity();

/// Tolerance (dB) on the detectability comparisons; closed-form powers land
/// exactly on the threshold up to rounding.
inline constexpr double kDetectToleranceDb = 1e-9;

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

inline double mw_to_dbm(double mw) {
  if (!(mw > 0.0)) throw Error(ErrorCode::NonPositivePower, "power in mW must be positive");
  return 10.0 * std::log10(mw);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Channel gain h_ij. Unit gain, or symmetric log-normal shadowing drawn from
/// (seed, unordered pair).
struct GainModel {
  enum class Kind { Unit, LogNormal };
  Kind kind{Kind::Unit};
  double sigma_db{0.0};
  std::uint64_t seed{0};

  double gain(int i, int j) const {
    if (kind == Kind::Unit || sigma_db == 0.0) return 1.0;
    if (i > j) std::swap(i, j);
    std::uint64_t key = seed ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32 |
                                static_cast<std::uint32_t>(j));
    // splitmix64 finalizer to decorrelate neighbouring pairs
    key += 0x9e3779b97f4a7c15ULL;
    key = (key ^ (key >> 30)) * 0xbf58476d1ce4e5b9ULL;
    key = (key ^ (key >> 27)) * 0x94d049bb133111ebULL;
    key ^= key >> 31;
    std::mt19937_64 rng(key);
    std::normal_distribution<double> gauss(0.0, 1.0);
    return db_to_linear(sigma_db * gauss(rng));
  }
};

/// Link and channel parameters. Powers in dBm, distances in km.
struct RadioParams {
  double nu{4.0};
  double noise_dbm{-50.0};
  double beta_db{2.5};
  double p_tmax_dbm{27.0};
  double p_rmin_dbm{-63.0};
  double bandwidth_hz{125e3};
  /// SNR above which the link rate stops growing (highest modulation order).
  double rate_snr_cap_db{std::numeric_limits<double>::infinity()};
  GainModel gain_model{};

  void validate() const {
    if (!(nu > 0.0)) throw Error(ErrorCode::InvalidArgument, "pathloss exponent must be positive");
    if (!(bandwidth_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "bandwidth must be positive");
    if (!(p_tmax_dbm > p_rmin_dbm)) throw Error(ErrorCode::InvalidArgument, "p_tmax must exceed p_rmin");
    if (!std::isfinite(noise_dbm) || !std::isfinite(beta_db))
      throw Error(ErrorCode::InvalidArgument, "noise and threshold must be finite");
    if (gain_model.sigma_db < 0.0) throw Error(ErrorCode::InvalidArgument, "shadowing sigma must be >= 0");
  }
};

/// Received power in dBm at distance d_km for transmit power p_t_dbm and gain h.
inline double received_dbm(double d_km, double p_t_dbm, double h, const RadioParams& params) {
  if (!(d_km > 0.0)) throw Error(ErrorCode::ZeroDistance, "link distance must be positive");
  if (!(h > 0.0) || p_t_dbm == kPowerOff) return kPowerOff;
  return p_t_dbm + 10.0 * std::log10(h) - 10.0 * params.nu * std::log10(d_km);
}

/// SNR in dB of h * P_T * d^-nu / N.
inline double link_snr(double d_km, double p_t_dbm, double h, const RadioParams& params) {
  const double rx = received_dbm(d_km, p_t_dbm, h, params);
  return rx == kPowerOff ? kPowerOff : rx - params.noise_dbm;
}

/// The SNR reaches beta and the received power reaches p_rmin.
inline bool is_detectable(double d_km, double p_t_dbm, double h, const RadioParams& params) {
  const double rx = received_dbm(d_km, p_t_dbm, h, params);
  if (rx == kPowerOff) return false;
  return rx - params.noise_dbm >= params.beta_db - kDetectToleranceDb &&
         rx >= params.p_rmin_dbm - kDetectToleranceDb;
}

/// Longest unit-gain link that p_tmax can make detectable.
inline double transmission_range_km(const RadioParams& params) {
  const double by_snr = (params.p_tmax_dbm - params.noise_dbm - params.beta_db) / (10.0 * params.nu);
  const double by_rx = (params.p_tmax_dbm - params.p_rmin_dbm) / (10.0 * params.nu);
  return std::pow(10.0, std::min(by_snr, by_rx));
}

/// Shannon rate B log2(1 + SNR) with the SNR clipped at rate_snr_cap_db.
inline double link_rate_bps(double snr_db, const RadioParams& params) {
  if (snr_db == kPowerOff) return 0.0;
  const double s = std::min(snr_db, params.rate_snr_cap_db);
  return params.bandwidth_hz * std::log2(1.0 + db_to_linear(s));
}

/// Undirected link that must be detectable in both directions.
struct RequiredLink {
  int i{0};
  int j{0};
  double d{0.0};  // km
  double h{1.0};
};

/// Minimum transmit power (mW) for one direction of a link: the larger of the
/// SNR constraint and the receive-power floor (the latter without gain).
inline double required_power_mw(double d_km, double h, const RadioParams& params) {
  if (!(d_km > 0.0)) throw Error(ErrorCode::ZeroDistance, "link distance must be positive");
  const double pathloss = std::pow(d_km, params.nu);
  const double snr_term = h > 0.0 ? db_to_linear(params.beta_db) * dbm_to_mw(params.noise_dbm) * pathloss / h
                                  : std::numeric_limits<double>::infinity();
  const double rx_term = dbm_to_mw(params.p_rmin_dbm) * pathloss;
  return std::max(snr_term, rx_term);
}

struct PowerAssignment {
  std::vector<double> p_t_dbm;  // kPowerOff for nodes without links

  double total_mw() const {
    double s = 0.0;
    for (double p : p_t_dbm)
      if (p != kPowerOff) s += dbm_to_mw(p);
    return s;
  }
};

namespace detail {

inline void check_links(const std::vector<RequiredLink>& links, int n) {
  for (const auto& l : links) {
    if (l.i < 0 || l.j < 0 || l.i >= n || l.j >= n || l.i == l.j)
      throw Error(ErrorCode::InvalidArgument, "required link endpoint out of range");
    if (!(l.d > 0.0)) throw Error(ErrorCode::ZeroDistance, "required link distance must be positive");
  }
}

inline InfeasibleError infeasible(const RequiredLink& l, double need_mw, const RadioParams& params) {
  return InfeasibleError(l.i, l.j,
                         "link (" + std::to_string(l.i) + "," + std::to_string(l.j) + ") needs " +
                             std::to_string(mw_to_dbm(need_mw)) + " dBm > p_tmax " +
                             std::to_string(params.p_tmax_dbm) + " dBm");
}

}  // namespace detail

/// Minimum total power (mW) making every required link detectable both ways,
/// subject to the p_tmax cap. The program separates by node, so the optimum
/// is each node's largest single-link requirement.
inline PowerAssignment assign_power_lp(const std::vector<RequiredLink>& links, int n, const RadioParams& params) {
  detail::check_links(links, n);
  const double cap_mw = dbm_to_mw(params.p_tmax_dbm);
  std::vector<double> need(static_cast<std::size_t>(n), 0.0);
  for (const auto& l : links) {
    const double p = required_power_mw(l.d, l.h, params);
    if (p > cap_mw * (1.0 + 1e-12)) throw detail::infeasible(l, p, params);
    need[l.i] = std::max(need[l.i], p);
    need[l.j] = std::max(need[l.j], p);
  }
  PowerAssignment out;
  out.p_t_dbm.reserve(need.size());
  for (double p : need) out.p_t_dbm.push_back(p > 0.0 ? mw_to_dbm(std::min(p, cap_mw)) : kPowerOff);
  return out;
}

// ---------------------------------------------------------------------------
// Dense two-phase simplex, used to cross-check the closed form.

enum class Sense { LessEqual, GreaterEqual, Equal };

struct LinearConstraint {
  std::vector<double> coef;
  Sense sense{Sense::LessEqual};
  double rhs{0.0};
};

/// minimize cost . x  subject to rows, x >= 0.
struct LinearProgram {
  int vars{0};
  std::vector<double> cost;
  std::vector<LinearConstraint> rows;
};

struct LpSolution {
  enum class Status { Optimal, Infeasible, Unbounded };
  Status status{Status::Infeasible};
  std::vector<double> x;
  double objective{0.0};
};

namespace detail {

// Equilibrates rows, then columns, to unit max magnitude. Returns the column
// factors: the scaled problem's y satisfies x = factor * y.
inline std::vector<double> equilibrate(LinearProgram& lp) {
  for (auto& r : lp.rows) {
    double peak = 0.0;
    for (double c : r.coef) peak = std::max(peak, std::abs(c));
    if (peak == 0.0) continue;
    for (double& c : r.coef) c /= peak;
    r.rhs /= peak;
  }
  std::vector<double> factor(static_cast<std::size_t>(lp.vars), 1.0);
  for (int j = 0; j < lp.vars; ++j) {
    double peak = 0.0;
    for (const auto& r : lp.rows)
      if (j < static_cast<int>(r.coef.size())) peak = std::max(peak, std::abs(r.coef[j]));
    if (peak == 0.0) continue;
    factor[j] = 1.0 / peak;
    for (auto& r : lp.rows)
      if (j < static_cast<int>(r.coef.size())) r.coef[j] /= peak;
    if (j < static_cast<int>(lp.cost.size())) lp.cost[j] /= peak;
  }
  return factor;
}

}  // namespace detail

/// Tableau simplex with Bland's rule; phase one drives artificials out. The
/// program is equilibrated first so pivot tolerances are scale-free.
inline LpSolution solve_simplex(LinearProgram lp) {
  const auto factor = detail::equilibrate(lp);
  const int m = static_cast<int>(lp.rows.size());
  const int nv = lp.vars;
  double scale = 1.0;
  for (const auto& r : lp.rows) scale = std::max(scale, std::abs(r.rhs));
  const double eps = 1e-12;
  const double feas_tol = 1e-9 * scale;

  // Column layout: originals, slack/surplus (one per inequality), artificials.
  int n_slack = 0, n_art = 0;
  for (const auto& r : lp.rows) {
    if (r.sense != Sense::Equal) ++n_slack;
    const bool flip = r.rhs < 0.0;
    const Sense s = flip ? (r.sense == Sense::LessEqual ? Sense::GreaterEqual
                                                        : r.sense == Sense::GreaterEqual ? Sense::LessEqual : Sense::Equal)
                         : r.sense;
    if (s != Sense::LessEqual) ++n_art;
  }
  const int cols = nv + n_slack + n_art;
  std::vector<std::vector<double>> t(static_cast<std::size_t>(m + 1), std::vector<double>(cols + 1, 0.0));
  std::vector<int> basis(static_cast<std::size_t>(m), -1);
  std::vector<char> artificial(static_cast<std::size_t>(cols), 0);

  int slack_col = nv, art_col = nv + n_slack;
  for (int i = 0; i < m; ++i) {
    const auto& r = lp.rows[i];
    const double sign = r.rhs < 0.0 ? -1.0 : 1.0;
    Sense s = r.sense;
    if (sign < 0.0 && s != Sense::Equal) s = s == Sense::LessEqual ? Sense::GreaterEqual : Sense::LessEqual;
    for (int j = 0; j < nv && j < static_cast<int>(r.coef.size()); ++j) t[i][j] = sign * r.coef[j];
    t[i][cols] = sign * r.rhs;
    if (r.sense != Sense::Equal) {
      t[i][slack_col] = s == Sense::LessEqual ? 1.0 : -1.0;
      if (s == Sense::LessEqual) basis[i] = slack_col;
      ++slack_col;
    }
    if (s != Sense::LessEqual) {
      t[i][art_col] = 1.0;
      artificial[art_col] = 1;
      basis[i] = art_col;
      ++art_col;
    }
  }

  auto pivot = [&](int row, int col) {
    const double p = t[row][col];
    for (auto& v : t[row]) v /= p;
    for (int i = 0; i <= m; ++i) {
      if (i == row) continue;
      const double f = t[i][col];
      if (f == 0.0) continue;
      for (int j = 0; j <= cols; ++j) t[i][j] -= f * t[row][j];
    }
    basis[row] = col;
  };

  // Returns false when unbounded.
  auto optimize = [&](const std::vector<char>& allowed) {
    while (true) {
      int enter = -1;
      for (int j = 0; j < cols; ++j) {
        if (allowed[j] && t[m][j] < -eps) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        if (t[i][enter] <= eps) continue;
        const double ratio = t[i][cols] / t[i][enter];
        const double tie = 1e-15 * std::max(1.0, std::abs(ratio));
        if (leave < 0 || ratio < best - tie || (std::abs(ratio - best) <= tie && basis[i] < basis[leave])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  };

  LpSolution sol;
  std::vector<char> allowed(static_cast<std::size_t>(cols), 1);
  if (n_art > 0) {
    // Phase one objective: sum of artificials, expressed in non-basic terms.
    std::fill(t[m].begin(), t[m].end(), 0.0);
    for (int i = 0; i < m; ++i) {
      if (!artificial[basis[i]]) continue;
      for (int j = 0; j <= cols; ++j) t[m][j] -= t[i][j];
    }
    for (int j = 0; j < cols; ++j)
      if (artificial[j]) t[m][j] = 0.0;
    optimize(allowed);
    if (-t[m][cols] > feas_tol) {
      sol.status = LpSolution::Status::Infeasible;
      return sol;
    }
    // Pivot remaining (zero-valued) artificials out of the basis.
    for (int i = 0; i < m; ++i) {
      if (!artificial[basis[i]]) continue;
      for (int j = 0; j < cols; ++j) {
        if (!artificial[j] && std::abs(t[i][j]) > eps) {
          pivot(i, j);
          break;
        }
      }
    }
    for (int j = 0; j < cols; ++j)
      if (artificial[j]) allowed[j] = 0;
  }

  std::fill(t[m].begin(), t[m].end(), 0.0);
  for (int j = 0; j < nv && j < static_cast<int>(lp.cost.size()); ++j) t[m][j] = lp.cost[j];
  for (int i = 0; i < m; ++i) {
    const double f = t[m][basis[i]];
    if (f == 0.0) continue;
    for (int j = 0; j <= cols; ++j) t[m][j] -= f * t[i][j];
  }
  if (!optimize(allowed)) {
    sol.status = LpSolution::Status::Unbounded;
    return sol;
  }
  sol.status = LpSolution::Status::Optimal;
  sol.x.assign(static_cast<std::size_t>(nv), 0.0);
  for (int i = 0; i < m; ++i)
    if (basis[i] < nv) sol.x[basis[i]] = t[i][cols];
  sol.objective = 0.0;
  for (int j = 0; j < nv && j < static_cast<int>(lp.cost.size()); ++j) sol.objective += lp.cost[j] * sol.x[j];
  for (int j = 0; j < nv; ++j) sol.x[j] *= factor[j];
  return sol;
}

/// Same program as assign_power_lp, written out row by row and handed to the
/// generic simplex.
inline PowerAssignment assign_power_simplex(const std::vector<RequiredLink>& links, int n, const RadioParams& params) {
  detail::check_links(links, n);
  LinearProgram lp;
  lp.vars = n;
  lp.cost.assign(static_cast<std::size_t>(n), 1.0);
  const double cap_mw = dbm_to_mw(params.p_tmax_dbm);
  for (int i = 0; i < n; ++i) {
    LinearConstraint c;
    c.coef.assign(static_cast<std::size_t>(n), 0.0);
    c.coef[i] = 1.0;
    c.sense = Sense::LessEqual;
    c.rhs = cap_mw;
    lp.rows.push_back(std::move(c));
  }
  const double beta = db_to_linear(params.beta_db);
  const double noise = dbm_to_mw(params.noise_dbm);
  const double rmin = dbm_to_mw(params.p_rmin_dbm);
  for (const auto& l : links) {
    const double pathloss = std::pow(l.d, params.nu);
    for (int end : {l.i, l.j}) {
      // SNR >= beta  <=>  h * p * d^-nu / N >= beta
      LinearConstraint snr;
      snr.coef.assign(static_cast<std::size_t>(n), 0.0);
      snr.coef[end] = l.h / (pathloss * noise);
      snr.sense = Sense::GreaterEqual;
      snr.rhs = beta;
      lp.rows.push_back(std::move(snr));
      LinearConstraint floor;
      floor.coef.assign(static_cast<std::size_t>(n), 0.0);
      floor.coef[end] = 1.0;
      floor.sense = Sense::GreaterEqual;
      floor.rhs = pathloss * rmin;
      lp.rows.push_back(std::move(floor));
    }
  }
  const auto sol = solve_simplex(lp);
  if (sol.status != LpSolution::Status::Optimal) {
    for (const auto& l : links) {
      const double p = required_power_mw(l.d, l.h, params);
      if (p > cap_mw * (1.0 + 1e-12)) throw detail::infeasible(l, p, params);
    }
    throw Error(ErrorCode::Infeasible, "power program has no feasible point");
  }
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  for (const auto& l : links) used[l.i] = used[l.j] = 1;
  PowerAssignment out;
  for (int i = 0; i < n; ++i) out.p_t_dbm.push_back(used[i] && sol.x[i] > 0.0 ? mw_to_dbm(sol.x[i]) : kPowerOff);
  return out;
}

}  // namespace maxnt

#endif  // MAXNT_RADIO_HPP
