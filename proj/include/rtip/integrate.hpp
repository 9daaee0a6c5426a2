#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rtip/equilibria.hpp"
#include "rtip/model.hpp"

namespace rtip {

enum class TrajectoryStatus { completed, escaped, tolerance_failure };

std::string to_string(TrajectoryStatus s);

/// Accepted integrator node: state and its first two time derivatives.
struct TrajectorySample {
    double t = 0.0;
    double x = 0.0;
    double dx = 0.0;
    double ddx = 0.0;
};

/// Solution of x' = f(x, Lambda(r t)) with quintic Hermite dense output.
///
/// Samples are stored with increasing t; backward integrations are reversed.
/// An escaped trajectory ends (forward) or starts (backward) at the escape time.
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(double r, double t0, double x0, std::vector<TrajectorySample> samples, TrajectoryStatus status,
               std::optional<double> escape_time);

    double r() const noexcept { return r_; }
    double t0() const noexcept { return t0_; }
    double x0() const noexcept { return x0_; }
    const std::vector<TrajectorySample>& samples() const noexcept { return samples_; }
    TrajectoryStatus status() const noexcept { return status_; }
    bool escaped() const noexcept { return status_ == TrajectoryStatus::escaped; }
    std::optional<double> escape_time() const noexcept { return escape_time_; }

    double t_begin() const { return samples_.front().t; }
    double t_end() const { return samples_.back().t; }
    bool covers(double t) const { return !samples_.empty() && t >= t_begin() && t <= t_end(); }

    /// Dense value; t must lie in [t_begin, t_end].
    double eval(double t) const;

    /// Like eval, but past an escape returns +-infinity in the escape direction.
    double value_or_escape(double t) const;

    /// Final state in integration order (x at t1, or at the escape time).
    double final_state() const;

private:
    double r_ = 0.0, t0_ = 0.0, x0_ = 0.0;
    std::vector<TrajectorySample> samples_;
    TrajectoryStatus status_ = TrajectoryStatus::completed;
    std::optional<double> escape_time_;
};

struct IntegratorOptions {
    double tol = 1e-10;
    /// Escape threshold is escape_fraction * x_max of the model's trusted box.
    double escape_fraction = 0.99;
    double h_max = 0.0;  // 0: unbounded
    std::size_t max_steps = 50'000'000;
};

/// Dormand-Prince 5(4) with PI step control. Throws ToleranceFailure when the
/// step size underflows 1e-12 * |t1 - t0|.
Trajectory solve_ivp(const ModelSpec& model, double r, double t0, double x0, double t1,
                     const IntegratorOptions& opts = {});

enum class PullbackSide { attractor, repeller };

struct PullbackOptions {
    double tol = 1e-10;
    double anchor_spacing = 0.0;  // 0: 10 / r
    std::size_t max_anchors = 50;
    std::size_t checkpoints = 201;
    /// A gap that stops shrinking over three anchors is accepted as the
    /// integration noise floor if it is below this bound.
    double noise_floor_limit = 1e-6;
};

/// Numerical estimate of the locally pullback attracting (x^r_-) or repelling
/// (x^r_+) solution on a time window.
struct PullbackSolution {
    PullbackSide side = PullbackSide::attractor;
    double r = 0.0;
    double t_lo = 0.0, t_hi = 0.0;  // trusted window, truncated at an escape
    Trajectory trajectory;
    std::vector<double> anchor_times;
    std::vector<double> anchor_gaps;  // gap between successive anchors' estimates
    double convergence_gap = 0.0;
    bool noise_limited = false;  // accepted at a stalled gap above tol

    bool escaped() const noexcept { return trajectory.escaped(); }
    double value(double t) const { return trajectory.value_or_escape(t); }
};

/// Anchored Cauchy iteration: start on the stable branch at s_k = t_lo - k * ds and
/// integrate forward until successive estimates agree to tol on the window.
/// Gaps are measured as |a - b| / (1 + min(|a|, |b|)); checkpoints where both
/// estimates exceed 10 (1 + max|X|) in magnitude (past the onset of a blow-up)
/// are skipped.
/// Throws NoConvergence after max_anchors.
PullbackSolution estimate_pullback_attractor(const ModelSpec& model, const QuasiStaticBranch& stable, double r,
                                             double t_lo, double t_hi, const PullbackOptions& opts = {});

/// Time-reversed analogue started on the unstable branch at s_k = t_hi + k * ds.
PullbackSolution estimate_pullback_repeller(const ModelSpec& model, const QuasiStaticBranch& unstable, double r,
                                            double t_lo, double t_hi, const PullbackOptions& opts = {});

/// CSV with columns t,x and status lines as '#' metadata.
std::string trajectory_csv(const Trajectory& traj);

}  // namespace rtip
