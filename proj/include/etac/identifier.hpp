#pragma once

// Finite-time least-squares identifier. The windowed normal equations are
// rebuilt at event times from running integrals (accumulators) carried as
// extra ODE states:
//
//   z' = f(x,u)   w' = x - z   B' = g(x,u)   phi' = B'(x - z)   Q' = B   R' = B'B
//
// all starting from zero at t = 0. With y = x - z and B(t) = int_0^t g, the
// identity y(t) - y(s) = (B(t) - B(s)) theta holds along every noise-free
// solution, so each window produces a consistent linear system Z = G theta.
//
// Scale convention: gram_from_snapshots returns dt*dR - dQ'dQ, which is one
// half of the literal double integral over [mu, tau]^2 of q'q (expanding the
// square yields each cross term twice). Z carries the same factor, so the
// constrained projection is unchanged.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "etac/errors.hpp"
#include "etac/linalg.hpp"
#include "etac/model.hpp"

namespace etac {

struct IdentifierState {
  Vector z, w;
  Matrix B;
  Vector phi;
  Matrix Q, R;

  static IdentifierState zero(std::size_t n, std::size_t l) {
    return {Vector(n, 0.0), Vector(n, 0.0), Matrix(n, l), Vector(l, 0.0), Matrix(n, l), Matrix(l, l)};
  }

  /// (2n + l)(1 + l) scalars.
  static constexpr std::size_t packed_size(std::size_t n, std::size_t l) { return (2 * n + l) * (1 + l); }

  std::size_t n() const noexcept { return z.size(); }
  std::size_t l() const noexcept { return phi.size(); }

  /// Layout: z | w | B (row-major) | phi | Q (row-major) | R (row-major).
  void pack(std::span<double> out) const {
    if (out.size() != packed_size(n(), l())) throw DimensionError("IdentifierState::pack: size mismatch");
    auto it = out.begin();
    it = std::copy(z.begin(), z.end(), it);
    it = std::copy(w.begin(), w.end(), it);
    it = std::copy(B.flat().begin(), B.flat().end(), it);
    it = std::copy(phi.begin(), phi.end(), it);
    it = std::copy(Q.flat().begin(), Q.flat().end(), it);
    std::copy(R.flat().begin(), R.flat().end(), it);
  }

  static IdentifierState unpack(std::span<const double> in, std::size_t n, std::size_t l) {
    if (in.size() != packed_size(n, l)) throw DimensionError("IdentifierState::unpack: size mismatch");
    IdentifierState s = zero(n, l);
    std::size_t o = 0;
    auto take = [&](std::span<double> dst) {
      std::copy(in.begin() + o, in.begin() + o + dst.size(), dst.begin());
      o += dst.size();
    };
    take(s.z);
    take(s.w);
    take(s.B.flat());
    take(s.phi);
    take(s.Q.flat());
    take(s.R.flat());
    return s;
  }
};

/// Time derivative of the accumulators: (f, x - z, g, B'(x - z), B, B'B).
inline IdentifierState accumulator_rhs(const PlantModel& plant, const Vector& x, const Vector& u,
                                       const IdentifierState& s) {
  if (x.size() != plant.n || u.size() != plant.m || s.n() != plant.n || s.l() != plant.l)
    throw DimensionError("accumulator_rhs: dimensions inconsistent with plant " + plant.name);
  IdentifierState d = IdentifierState::zero(plant.n, plant.l);
  d.z = plant.f(x, u);
  const Vector y = x - s.z;
  d.w = y;
  d.B = plant.g(x, u);
  if (d.B.rows() != plant.n || d.B.cols() != plant.l) throw DimensionError("accumulator_rhs: g has wrong shape");
  d.phi = transpose_times(s.B, y);
  d.Q = s.B;
  d.R = transpose_times(s.B, s.B);
  return d;
}

/// Allocation-light variant writing into packed storage; used inside the ODE right-hand side.
inline void accumulator_rhs_packed(const Vector& fx, const Matrix& gx, const Vector& x,
                                   std::span<const double> s, std::span<double> ds) {
  const std::size_t n = x.size();
  const std::size_t l = gx.cols();
  const double* z = s.data();
  const double* B = s.data() + 2 * n;
  double* dz = ds.data();
  double* dw = dz + n;
  double* dB = dw + n;
  double* dphi = dB + n * l;
  double* dQ = dphi + l;
  double* dR = dQ + n * l;
  for (std::size_t i = 0; i < n; ++i) {
    dz[i] = fx[i];
    dw[i] = x[i] - z[i];
  }
  for (std::size_t k = 0; k < n * l; ++k) {
    dB[k] = gx.flat()[k];
    dQ[k] = B[k];
  }
  for (std::size_t a = 0; a < l; ++a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += B[i * l + a] * (x[i] - z[i]);
    dphi[a] = acc;
    for (std::size_t b = 0; b < l; ++b) {
      double r = 0.0;
      for (std::size_t i = 0; i < n; ++i) r += B[i * l + a] * B[i * l + b];
      dR[a * l + b] = r;
    }
  }
}

/// Plant state and accumulators at one instant (an event time or "now").
struct Snapshot {
  double t = 0.0;
  Vector x;
  IdentifierState state;
};

struct GramSystem {
  Matrix G;
  Vector Z;

  std::size_t l() const noexcept { return Z.size(); }

  /// ||Z - G theta||.
  double inconsistency(std::span<const double> theta) const { return norm(Z - G * theta); }

  /// Symmetric and eigenvalues >= -1e-9 max(1, ||G||).
  bool psd_within_roundoff() const {
    const SymEig e = sym_eig(G);
    return e.eigenvalues.empty() || e.eigenvalues.back() >= -1e-9 * std::max(1.0, norm(G));
  }

  GramSystem scaled(double s) const { return {G * s, s * Z}; }
};

struct WindowSpec {
  int N_tilde = 1;
  double T = 1.0;

  void validate() const {
    if (N_tilde < 1) throw ParameterError("WindowSpec: N_tilde must be >= 1");
    if (!(T > 0.0)) throw ParameterError("WindowSpec: T must be > 0");
  }
};

struct MuIndex {
  double mu_time;
  std::size_t event_index;
};

/// Window start for the update at tau_{i+1}: the earliest tau_j, j <= i, with
/// tau_j >= tau_{i+1} - N_tilde T. `taus` must hold tau_0 .. tau_{i+1}.
inline MuIndex mu_index(std::span<const double> taus, std::size_t i, const WindowSpec& window) {
  if (taus.size() < i + 2) throw PreconditionError("mu_index: need event times up to tau_{i+1}");
  const double threshold = taus[i + 1] - window.N_tilde * window.T;
  for (std::size_t j = 0; j <= i; ++j)
    if (taus[j] >= threshold) return {taus[j], j};
  // Unreachable when inter-event gaps are <= T; fall back to the latest event.
  return {taus[i], i};
}

inline void require_window(const Snapshot& at_tau, const Snapshot& at_mu) {
  if (!(at_mu.t < at_tau.t)) throw OrderingError("Gram window requires mu < tau");
  if (at_tau.state.n() != at_mu.state.n() || at_tau.state.l() != at_mu.state.l())
    throw DimensionError("Gram window: snapshot shapes differ");
}

/// Windowed double-integral normal equations from accumulator differences:
///   G = dt dR - dQ'dQ,  Z = dt dphi - dQ'dw.
inline GramSystem gram_from_snapshots(const Snapshot& at_tau, const Snapshot& at_mu) {
  require_window(at_tau, at_mu);
  const double dt = at_tau.t - at_mu.t;
  const Matrix dR = at_tau.state.R - at_mu.state.R;
  const Matrix dQ = at_tau.state.Q - at_mu.state.Q;
  const Vector dphi = at_tau.state.phi - at_mu.state.phi;
  const Vector dw = at_tau.state.w - at_mu.state.w;
  GramSystem out;
  out.G = symmetrized(dR * dt - transpose_times(dQ, dQ));
  out.Z = dt * dphi - transpose_times(dQ, dw);
  return out;
}

/// Single-integral variant anchored at mu:
///   G~ = int q'(t,mu) q(t,mu) dt,  Z~ = int q'(t,mu) p(t,mu) dt,
/// expanded in snapshot differences with B(mu) and y(mu) = x(mu) - z(mu).
inline GramSystem gram_single_integral(const Snapshot& at_tau, const Snapshot& at_mu) {
  require_window(at_tau, at_mu);
  const double dt = at_tau.t - at_mu.t;
  const Matrix& Bmu = at_mu.state.B;
  const Vector ymu = at_mu.x - at_mu.state.z;
  const Matrix dR = at_tau.state.R - at_mu.state.R;
  const Matrix dQ = at_tau.state.Q - at_mu.state.Q;
  const Vector dphi = at_tau.state.phi - at_mu.state.phi;
  const Vector dw = at_tau.state.w - at_mu.state.w;

  const Matrix cross = transpose_times(dQ, Bmu);
  GramSystem out;
  out.G = symmetrized(dR - cross - cross.transpose() + transpose_times(Bmu, Bmu) * dt);
  out.Z = dphi - transpose_times(dQ, ymu) - transpose_times(Bmu, dw) + dt * transpose_times(Bmu, ymu);
  return out;
}

// ---- parameter update ----------------------------------------------------------

struct MinNormPolicy {
  double rank_tol = kDefaultRankTol;
};
struct TikhonovPolicy {
  double eta = 1e-8;
};
/// Holds the estimate when lambda_max(G) < eps, otherwise behaves as MinNorm.
struct DeadZonePolicy {
  double rank_tol = kDefaultRankTol;
  double eps = 1e-6;
};
using UpdatePolicy = std::variant<MinNormPolicy, TikhonovPolicy, DeadZonePolicy>;

struct UpdateReport {
  int rank = 0;
  double residual = 0.0;
  bool skipped = false;
  double lambda_max = 0.0;
};

struct UpdateOutcome {
  Vector theta;
  UpdateReport report;
};

inline UpdateOutcome update_estimate(std::span<const double> theta_prev, const GramSystem& gram,
                                     const UpdatePolicy& policy) {
  if (gram.G.rows() != gram.l() || gram.G.cols() != gram.l() || theta_prev.size() != gram.l())
    throw DimensionError("update_estimate: inconsistent Gram system / estimate dimensions");
  const SymEig eig = sym_eig(gram.G);
  UpdateOutcome out{Vector(theta_prev.begin(), theta_prev.end()), {}};
  out.report.lambda_max = eig.lambda_max();

  auto min_norm = [&](double rank_tol) {
    MinNormResult r = min_norm_update(gram.G, gram.Z, theta_prev, rank_tol);
    out.theta = std::move(r.theta);
    out.report.rank = r.rank;
    out.report.residual = r.residual;
  };

  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, MinNormPolicy>) {
          min_norm(p.rank_tol);
        } else if constexpr (std::is_same_v<P, TikhonovPolicy>) {
          out.theta = tikhonov_update(gram.G, gram.Z, p.eta);
          out.report.rank = static_cast<int>(gram.l());
          out.report.residual = norm(gram.G * out.theta - gram.Z);
        } else {
          if (eig.lambda_max() < p.eps) {
            out.report.skipped = true;
            out.report.rank = 0;
          } else {
            min_norm(p.rank_tol);
          }
        }
      },
      policy);
  return out;
}

/// An identifier realized by its own auxiliary ODE block, valid for windows that
/// start at t = 0. `gram_from_origin` maps the block at tau to (G, Z) for [0, tau];
/// `scale_vs_snapshot` is the constant c with that pair = c * gram_from_snapshots.
struct AuxiliaryIdentifier {
  std::string name;
  std::size_t dim = 0;
  std::function<void(double t, std::span<const double> x, std::span<const double> aux,
                     std::span<double> daux)>
      rhs;
  std::function<GramSystem(std::span<const double> aux)> gram_from_origin;
  double scale_vs_snapshot = 1.0;
};

enum class IdentifierVariant { Double, Single, Auxiliary };

struct IdentifierConfig {
  IdentifierVariant variant = IdentifierVariant::Double;
  UpdatePolicy policy = MinNormPolicy{};
  AuxiliaryIdentifier auxiliary;  // used when variant == Auxiliary
};

}  // namespace etac
