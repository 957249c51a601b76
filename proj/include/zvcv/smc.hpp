#pragma once

#include "zvcv/models.hpp"
#include "zvcv/samples.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace zvcv {

/// Particles targeting the power posterior p_t, with the likelihood and
/// prior parts of every gradient kept apart so they can be re-tempered.
struct Snapshot {
    double t = 0.0;
    Matrix theta;
    Vector weights;  // normalised
    Vector log_like;
    Vector log_prior;
    Matrix grad_log_like;
    Matrix grad_log_prior;

    Index count() const { return theta.rows(); }
    /// Samples for p_t: gradient t * grad log l + grad log p0.
    SampleSet samples() const;
    /// The same particles importance-weighted to p_{t_new}, t_new >= t.
    SampleSet samples_at(double t_new) const;
    /// Normalised weights proportional to W * l^(t_new - t).
    Vector weights_at(double t_new) const;
};

/// Result of moving the weights from one temperature to the next.
struct Reweighting {
    Vector weights;          // normalised
    double log_increment;    // log sum_i W_i l_i^dt
};

/// W_i l_i^dt normalised, computed in log space.
Reweighting reweight(const Vector& prev_weights, const Vector& log_like, double dt);

double ess(const Vector& weights);
/// N (sum W r)^2 / sum W r^2 with N = weights.size().
double cess(const Vector& prev_weights, const Vector& ratios);

enum class Criterion { ess, cess };

/// Largest temperature step (<= 1 - t_cur) keeping the criterion at or
/// above `target`, by bisection (at most 50 halvings). Returns 1 when the
/// whole remaining step already satisfies it.
double next_temperature(const Vector& prev_weights, const Vector& log_like, double t_cur, Criterion criterion,
                        double target);

/// Indices of N multinomial draws with probabilities `weights`.
std::vector<Index> resample_multinomial(const Vector& weights, std::uint64_t seed);

/// Tempered target used by the MALA kernel.
struct TemperedTarget {
    const TargetModel* model;
    double t;
};

/// Particle state at one temperature.
struct ParticleState {
    Matrix theta;
    Vector log_like;
    Vector log_prior;
    Matrix grad_log_like;
    Matrix grad_log_prior;

    Index count() const { return theta.rows(); }
    static ParticleState from(const TargetModel& model, Matrix theta);
    ParticleState select(const std::vector<Index>& idx) const;
};

struct MoveStats {
    Vector accept_prob;   // per particle, last sweep
    Vector jump;          // per particle Mahalanobis distance moved, last sweep
    Vector esjd;          // per particle accept_prob * squared Mahalanobis proposal jump
    double acceptance_rate = 0.0;
};

/// Sample covariance of weighted particles plus 1e-8 * trace/d * I.
Matrix proposal_covariance(const Matrix& theta, const Vector& weights);

/// One sweep of preconditioned MALA over every particle:
/// theta* ~ N(theta + h^2/2 cov grad log p_t, h^2 cov). `stream` keys the
/// per-particle random numbers.
MoveStats mala_sweep(ParticleState& state, const TemperedTarget& target, double h, const Matrix& cov,
                     std::uint64_t seed, std::uint64_t stream_a, std::uint64_t stream_b);

/// `count` log-uniform values from h_min to h_max.
std::vector<double> step_size_grid(double h_min, double h_max, int count = 20);

/// Step size maximising the median ESJD of one trial sweep from `state`
/// (left unchanged); ties go to the larger h. Falls back to the smallest
/// value, with a warning, if nothing is ever accepted.
double tune_step_size(const ParticleState& state, const TemperedTarget& target, const std::vector<double>& grid,
                      const Matrix& cov, std::uint64_t seed, std::uint64_t stream);

/// Run `sweep` (which returns per-particle jump distances) until at least
/// `fraction` of particles have travelled further than `threshold` in
/// total, or `cap` sweeps. Returns the number of sweeps made.
int choose_num_repeats(const std::function<Vector()>& sweep, double threshold, double fraction, int cap = 100);

enum class JumpStat { mean, median };

/// Mean (or median) Mahalanobis distance between distinct particles.
double interparticle_distance(const Matrix& theta, const Vector& weights, const Matrix& cov, JumpStat stat);

struct SmcConfig {
    Index n = 500;
    double rho = 0.5;
    double rho_tilde = 0.9;
    double h_min = 0.01;
    double h_max = 1.0;
    int h_grid = 20;
    double jump_fraction = 0.5;
    JumpStat jump_threshold_stat = JumpStat::mean;
    int max_repeats = 100;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Temperatures, step sizes and repeat counts of a run; enough to replay it.
struct FrozenSchedule {
    std::vector<double> temperatures;  // t_0 = 0, ..., t_T = 1
    std::vector<double> h;             // per move step (size T)
    std::vector<int> repeats;          // per move step (size T)
};

struct SmcRun {
    std::vector<Snapshot> snapshots;      // one per temperature, after moving
    std::vector<double> log_increments;   // size T
    FrozenSchedule schedule;
    std::vector<double> acceptance;       // mean acceptance of the final sweep per step
    Index n = 0;
    std::uint64_t seed = 0;

    double log_evidence() const;
    std::vector<double> temperatures() const { return schedule.temperatures; }
};

/// Adaptive likelihood-annealing SMC: ESS-targeted temperatures,
/// multinomial resampling every step, ESJD-tuned MALA with adaptive
/// repeats.
SmcRun run_smc(const TargetModel& model, const SmcConfig& cfg);

/// Non-adaptive run through a frozen schedule.
SmcRun replay_smc(const TargetModel& model, const FrozenSchedule& schedule, Index n, std::uint64_t seed);

struct TemperatureSchedule {
    std::vector<double> temperatures;
    std::vector<std::size_t> population_index;  // snapshot used for each temperature

    void validate() const;
};

/// The temperatures of the run, each served by its own snapshot.
TemperatureSchedule native_schedule(const std::vector<Snapshot>& snapshots);

/// Temperatures re-chosen after the fact so that the CESS of every step is
/// rho_tilde * N; each is served by the latest snapshot not above it.
TemperatureSchedule posthoc_schedule(const std::vector<Snapshot>& snapshots, double rho_tilde);

/// Samples for each temperature of a schedule.
std::vector<SampleSet> schedule_samples(const std::vector<Snapshot>& snapshots, const TemperatureSchedule& schedule);

/// Snapshot archive: snapshot_XXX.csv per temperature plus manifest.json.
void write_run(const std::filesystem::path& dir, const SmcRun& run, const std::string& model_name);

struct LoadedRun {
    std::vector<Snapshot> snapshots;
    FrozenSchedule schedule;
    std::vector<double> log_increments;
    Index n = 0;
    std::uint64_t seed = 0;
    std::string model;
};
LoadedRun read_run(const std::filesystem::path& dir);

}  // namespace zvcv
