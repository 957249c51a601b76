#include "zvcv/smc.hpp"

#include "zvcv/archive.hpp"
#include "zvcv/errors.hpp"
#include "zvcv/log.hpp"
#include "zvcv/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace zvcv {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// t * log l + log p0 without 0 * (-inf) at t = 0.
double tempered(double t, double log_like, double log_prior) {
    return t == 0.0 ? log_prior : t * log_like + log_prior;
}

// Stream keys that never collide with move sweeps (< max_repeats) or
// step-size trials (>= trial_offset).
constexpr std::uint64_t trial_offset = 1u << 20;
constexpr std::uint64_t resample_key = 1u << 30;
constexpr std::uint64_t prior_key = 0xA11CE;

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) { return Rng::stream(seed, a, b).next(); }

}  // namespace

// ---------------------------------------------------------------- snapshot

Vector Snapshot::weights_at(double t_new) const {
    if (t_new < t) throw InvalidSchedule("cannot re-temper a snapshot to a lower temperature");
    return reweight(weights, log_like, t_new - t).weights;
}

SampleSet Snapshot::samples() const {
    const Matrix grad = t == 0.0 ? grad_log_prior : Matrix(t * grad_log_like + grad_log_prior);
    return SampleSet(theta, grad, weights, log_like, log_prior);
}

SampleSet Snapshot::samples_at(double t_new) const {
    const Matrix grad = t_new == 0.0 ? grad_log_prior : Matrix(t_new * grad_log_like + grad_log_prior);
    return SampleSet(theta, grad, weights_at(t_new), log_like, log_prior);
}

// ------------------------------------------------------ weights & criteria

Reweighting reweight(const Vector& prev_weights, const Vector& log_like, double dt) {
    if (prev_weights.size() != log_like.size()) throw InvalidInput("reweight: size mismatch");
    if (!(dt >= 0.0)) throw InvalidSchedule("temperature increments must be nonnegative");
    const Index n = prev_weights.size();
    if (dt == 0.0) return {prev_weights, 0.0};
    Vector lw(n);
    double m = neg_inf;
    for (Index i = 0; i < n; ++i) {
        const double ll = std::isnan(log_like[i]) ? neg_inf : log_like[i];
        lw[i] = prev_weights[i] > 0.0 ? std::log(prev_weights[i]) + dt * ll : neg_inf;
        m = std::max(m, lw[i]);
    }
    if (m == neg_inf || !std::isfinite(m)) throw DegenerateWeights("every importance weight is zero or infinite");
    Vector w = (lw.array() - m).exp().matrix();
    const double total = w.sum();
    return {w / total, m + std::log(total)};
}

double ess(const Vector& weights) {
    const double s = weights.sum();
    return s * s / weights.squaredNorm();
}

double cess(const Vector& prev_weights, const Vector& ratios) {
    const double a = prev_weights.dot(ratios);
    const double b = prev_weights.dot(ratios.cwiseAbs2());
    return static_cast<double>(prev_weights.size()) * a * a / b;
}

double next_temperature(const Vector& prev_weights, const Vector& log_like, double t_cur, Criterion criterion,
                        double target) {
    const Index n = prev_weights.size();
    if (log_like.size() != n) throw InvalidInput("next_temperature: size mismatch");
    if (!(t_cur >= 0.0 && t_cur < 1.0)) throw InvalidSchedule("current temperature must lie in [0, 1)");
    const double remaining = 1.0 - t_cur;

    // Ratios are scaled by l_max^dt; both criteria are scale invariant.
    double ll_max = neg_inf;
    for (Index i = 0; i < n; ++i)
        if (prev_weights[i] > 0.0 && log_like[i] > ll_max) ll_max = log_like[i];
    if (!std::isfinite(ll_max)) throw DegenerateWeights("no particle with positive weight has a finite likelihood");
    auto value = [&](double dt) {
        Vector r(n);
        for (Index i = 0; i < n; ++i) {
            const double ll = std::isnan(log_like[i]) ? neg_inf : log_like[i];
            r[i] = std::exp(dt * (ll - ll_max));
        }
        if (criterion == Criterion::cess) return cess(prev_weights, r);
        return ess(prev_weights.cwiseProduct(r));
    };

    if (value(remaining) >= target) return 1.0;
    if (target >= static_cast<double>(n))
        throw InvalidSchedule("criterion target " + std::to_string(target) + " is unreachable with " +
                              std::to_string(n) + " particles");
    const double tol = 1e-3 * static_cast<double>(n);
    double lo = 0.0, hi = remaining;
    for (int iter = 0; iter < 50; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (value(mid) >= target) lo = mid;
        else hi = mid;
        if (lo > 0.0 && value(lo) - target <= tol) break;
    }
    if (lo < 1e-8) throw DegenerateWeights("temperature step fell below 1e-8");
    return t_cur + lo;
}

std::vector<Index> resample_multinomial(const Vector& weights, std::uint64_t seed) {
    const Index n = weights.size();
    if (n < 1) throw InvalidInput("cannot resample an empty population");
    std::vector<double> cum(static_cast<std::size_t>(n));
    std::partial_sum(weights.data(), weights.data() + n, cum.begin());
    const double total = cum.back();
    if (!(total > 0.0) || !std::isfinite(total)) throw DegenerateWeights("weights do not sum to a positive value");
    Rng rng(seed);
    std::vector<Index> out(static_cast<std::size_t>(n));
    for (auto& o : out) {
        const double u = rng.uniform() * total;
        const auto it = std::upper_bound(cum.begin(), cum.end(), u);
        o = std::min<Index>(static_cast<Index>(it - cum.begin()), n - 1);
        while (weights[o] <= 0.0 && o > 0) --o;  // never land on a zero-weight particle
    }
    return out;
}

// -------------------------------------------------------------------- MALA

ParticleState ParticleState::from(const TargetModel& model, Matrix theta) {
    auto e = evaluate_all(model, theta);
    return {std::move(theta), std::move(e.log_like), std::move(e.log_prior), std::move(e.grad_log_like),
            std::move(e.grad_log_prior)};
}

ParticleState ParticleState::select(const std::vector<Index>& idx) const {
    const Index n = static_cast<Index>(idx.size());
    ParticleState out{Matrix(n, theta.cols()), Vector(n), Vector(n), Matrix(n, theta.cols()), Matrix(n, theta.cols())};
    for (Index r = 0; r < n; ++r) {
        const Index i = idx[static_cast<std::size_t>(r)];
        out.theta.row(r) = theta.row(i);
        out.log_like[r] = log_like[i];
        out.log_prior[r] = log_prior[i];
        out.grad_log_like.row(r) = grad_log_like.row(i);
        out.grad_log_prior.row(r) = grad_log_prior.row(i);
    }
    return out;
}

Matrix proposal_covariance(const Matrix& theta, const Vector& weights) {
    const Index d = theta.cols();
    Matrix cov = theta.rows() >= 2 ? weighted_covariance(theta, weights) : Matrix::Zero(d, d);
    if (!cov.allFinite()) cov = Matrix::Zero(d, d);
    double scale = cov.trace() / static_cast<double>(d);
    if (!(scale > 0.0)) scale = 1.0;
    cov.diagonal().array() += 1e-8 * scale;
    return cov;
}

MoveStats mala_sweep(ParticleState& state, const TemperedTarget& target, double h, const Matrix& cov,
                     std::uint64_t seed, std::uint64_t stream_a, std::uint64_t stream_b) {
    if (!(h > 0.0)) throw InvalidInput("MALA step size must be positive");
    const Index n = state.count(), d = state.theta.cols();
    const Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) throw ConditioningError("proposal covariance is not positive definite");
    const Matrix chol = llt.matrixL();
    const double t = target.t;
    const double h2 = h * h;

    MoveStats stats{Vector::Zero(n), Vector::Zero(n), Vector::Zero(n), 0.0};
    std::vector<char> accepted(static_cast<std::size_t>(n), 0);
#pragma omp parallel for schedule(dynamic, 8)
    for (Index i = 0; i < n; ++i) {
        Rng rng = Rng::stream(seed, stream_a, stream_b, static_cast<std::uint64_t>(i));
        const Vector theta = state.theta.row(i).transpose();
        Vector grad = state.grad_log_prior.row(i).transpose();
        if (t != 0.0) grad += t * state.grad_log_like.row(i).transpose();
        const Vector fwd_mean = theta + 0.5 * h2 * (cov * grad);
        Vector z(d);
        for (Index k = 0; k < d; ++k) z[k] = rng.normal();
        const Vector prop = fwd_mean + h * (chol * z);
        const double u = rng.uniform_open();

        const Vector step = prop - theta;
        const double jump_sq = step.dot(llt.solve(step));
        const ModelEval e = target.model->evaluate(prop);
        const double lp_new = tempered(t, e.log_like, e.log_prior);
        const double lp_old = tempered(t, state.log_like[i], state.log_prior[i]);
        double alpha = 0.0;
        if (std::isfinite(lp_new) && e.grad_log_like.allFinite() && e.grad_log_prior.allFinite()) {
            const Vector grad_new = t == 0.0 ? e.grad_log_prior : Vector(t * e.grad_log_like + e.grad_log_prior);
            const Vector bwd_mean = prop + 0.5 * h2 * (cov * grad_new);
            const Vector rf = prop - fwd_mean, rb = theta - bwd_mean;
            const double log_q_fwd = -0.5 * rf.dot(llt.solve(rf)) / h2;
            const double log_q_bwd = -0.5 * rb.dot(llt.solve(rb)) / h2;
            const double log_alpha = lp_new - lp_old + log_q_bwd - log_q_fwd;
            alpha = std::isnan(log_alpha) ? 0.0 : std::exp(std::min(0.0, log_alpha));
            if (std::log(u) < log_alpha) {
                state.theta.row(i) = prop.transpose();
                state.log_like[i] = e.log_like;
                state.log_prior[i] = e.log_prior;
                state.grad_log_like.row(i) = e.grad_log_like.transpose();
                state.grad_log_prior.row(i) = e.grad_log_prior.transpose();
                stats.jump[i] = std::sqrt(jump_sq);
                accepted[static_cast<std::size_t>(i)] = 1;
            }
        }
        stats.accept_prob[i] = alpha;
        stats.esjd[i] = alpha * jump_sq;
    }
    stats.acceptance_rate =
        static_cast<double>(std::count(accepted.begin(), accepted.end(), 1)) / static_cast<double>(std::max<Index>(n, 1));
    return stats;
}

std::vector<double> step_size_grid(double h_min, double h_max, int count) {
    if (!(h_min > 0.0) || !(h_max >= h_min) || count < 1) throw InvalidInput("invalid step-size grid");
    if (count == 1) return {h_min};
    std::vector<double> grid;
    const double a = std::log(h_min), b = std::log(h_max);
    for (int i = 0; i < count; ++i) grid.push_back(std::exp(a + (b - a) * i / (count - 1)));
    grid.back() = h_max;
    return grid;
}

namespace {

double median(Vector v) {
    if (v.size() == 0) return 0.0;
    std::vector<double> x(v.data(), v.data() + v.size());
    const std::size_t mid = x.size() / 2;
    std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid), x.end());
    double m = x[mid];
    if (x.size() % 2 == 0) m = 0.5 * (m + *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid)));
    return m;
}

}  // namespace

double tune_step_size(const ParticleState& state, const TemperedTarget& target, const std::vector<double>& grid,
                      const Matrix& cov, std::uint64_t seed, std::uint64_t stream) {
    if (grid.empty()) throw InvalidInput("step-size grid is empty");
    if (grid.size() == 1) return grid.front();
    double best = -1.0;
    std::size_t chosen = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        ParticleState trial = state;
        const auto stats = mala_sweep(trial, target, grid[g], cov, seed, stream, trial_offset + g);
        const double med = median(stats.esjd);
        if (med > best || (med == best && grid[g] > grid[chosen])) {
            best = med;
            chosen = g;
        }
    }
    if (!(best > 0.0)) {
        warn("no MALA proposal was accepted at any trial step size; using the smallest");
        return *std::min_element(grid.begin(), grid.end());
    }
    return grid[chosen];
}

int choose_num_repeats(const std::function<Vector()>& sweep, double threshold, double fraction, int cap) {
    if (cap < 1) throw InvalidInput("repeat cap must be at least 1");
    Vector total;
    for (int s = 1; s <= cap; ++s) {
        const Vector jump = sweep();
        if (total.size() == 0) total = Vector::Zero(jump.size());
        total += jump;
        const double far = static_cast<double>((total.array() > threshold).count());
        if (far >= fraction * static_cast<double>(total.size())) return s;
    }
    warn("particles did not travel far enough within " + std::to_string(cap) + " MCMC repeats");
    return cap;
}

double interparticle_distance(const Matrix& theta, const Vector& weights, const Matrix& cov, JumpStat stat) {
    const Index n = theta.rows();
    if (n < 2) return 0.0;
    const Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) throw ConditioningError("covariance is not positive definite");
    // Whitened coordinates: Mahalanobis distance becomes Euclidean.
    const Matrix z = llt.matrixL().solve(theta.transpose()).transpose();
    if (stat == JumpStat::mean) {
        double num = 0.0, den = 0.0;
#pragma omp parallel for reduction(+ : num, den) schedule(dynamic, 16)
        for (Index i = 0; i < n; ++i) {
            if (weights[i] <= 0.0) continue;
            for (Index l = i + 1; l < n; ++l) {
                if (weights[l] <= 0.0) continue;
                const double w = weights[i] * weights[l];
                num += w * (z.row(i) - z.row(l)).norm();
                den += w;
            }
        }
        return den > 0.0 ? num / den : 0.0;
    }
    // Median over pairs of a deterministic thinned subset (at most 2000
    // particles) to bound memory.
    std::vector<Index> keep;
    for (Index i = 0; i < n; ++i)
        if (weights[i] > 0.0) keep.push_back(i);
    const std::size_t stride = std::max<std::size_t>(1, keep.size() / 2000 + (keep.size() % 2000 != 0 ? 1 : 0));
    std::vector<Index> sub;
    for (std::size_t r = 0; r < keep.size(); r += stride) sub.push_back(keep[r]);
    std::vector<double> dist;
    for (std::size_t a = 0; a < sub.size(); ++a)
        for (std::size_t b = a + 1; b < sub.size(); ++b) dist.push_back((z.row(sub[a]) - z.row(sub[b])).norm());
    if (dist.empty()) return 0.0;
    return median(Eigen::Map<Vector>(dist.data(), static_cast<Index>(dist.size())));
}

// --------------------------------------------------------------- the run

void SmcConfig::validate() const {
    if (n < 2) throw ConfigError("SMC needs at least two particles");
    if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("rho must lie in (0, 1)");
    if (!(rho_tilde > 0.0 && rho_tilde < 1.0)) throw ConfigError("rho_tilde must lie in (0, 1)");
    if (!(h_min > 0.0 && h_min < h_max)) throw ConfigError("need 0 < h_min < h_max");
    if (h_grid < 1) throw ConfigError("step-size grid needs at least one value");
    if (!(jump_fraction >= 0.0 && jump_fraction <= 1.0)) throw ConfigError("jump fraction must lie in [0, 1]");
    if (max_repeats < 1) throw ConfigError("max_repeats must be at least 1");
}

double SmcRun::log_evidence() const { return std::accumulate(log_increments.begin(), log_increments.end(), 0.0); }

namespace {

Snapshot make_snapshot(double t, const ParticleState& s, const Vector& w) {
    return Snapshot{t, s.theta, w, s.log_like, s.log_prior, s.grad_log_like, s.grad_log_prior};
}

void check_initial(const ParticleState& s) {
    for (Index i = 0; i < s.count(); ++i)
        if (!std::isfinite(s.log_prior[i]) || !s.grad_log_prior.row(i).allFinite())
            throw NumericError("prior draw " + std::to_string(i) + " has a non-finite prior density or gradient");
}

// Shared step of the adaptive and replayed runs: reweight to t_new,
// resample, and move. `choose` picks (h, repeats) given the resampled state.
template <typename Choose>
void advance(SmcRun& run, ParticleState& state, Vector& weights, double& t, double t_new, const TargetModel& model,
             std::uint64_t seed, std::uint64_t step, Choose&& choose) {
    const auto rw = reweight(weights, state.log_like, t_new - t);
    run.log_increments.push_back(rw.log_increment);
    t = t_new;
    const Matrix cov = proposal_covariance(state.theta, rw.weights);
    const auto idx = resample_multinomial(rw.weights, derived_seed(seed, step, resample_key));
    ParticleState moved = state.select(idx);
    const TemperedTarget target{&model, t};
    const auto [h, repeats, acceptance] = choose(moved, rw.weights, cov, target, state);
    state = std::move(moved);
    weights = uniform_weights(state.count());
    run.schedule.temperatures.push_back(t);
    run.schedule.h.push_back(h);
    run.schedule.repeats.push_back(repeats);
    run.acceptance.push_back(acceptance);
    run.snapshots.push_back(make_snapshot(t, state, weights));
}

struct MoveResult {
    double h;
    int repeats;
    double acceptance;
};

}  // namespace

SmcRun run_smc(const TargetModel& model, const SmcConfig& cfg) {
    cfg.validate();
    SmcRun run;
    run.n = cfg.n;
    run.seed = cfg.seed;
    ParticleState state = ParticleState::from(model, model.sample_prior(cfg.n, derived_seed(cfg.seed, prior_key, 0)));
    check_initial(state);
    Vector weights = uniform_weights(cfg.n);
    double t = 0.0;
    run.schedule.temperatures.push_back(0.0);
    run.snapshots.push_back(make_snapshot(0.0, state, weights));
    const auto grid = step_size_grid(cfg.h_min, cfg.h_max, cfg.h_grid);
    const double target_ess = cfg.rho * static_cast<double>(cfg.n);

    for (std::uint64_t step = 1; t < 1.0; ++step) {
        const double t_new = next_temperature(weights, state.log_like, t, Criterion::ess, target_ess);
        advance(run, state, weights, t, t_new, model, cfg.seed, step,
                [&](ParticleState& moved, const Vector& pre_weights, const Matrix& cov, const TemperedTarget& target,
                    const ParticleState& pre) {
                    const double threshold =
                        interparticle_distance(pre.theta, pre_weights, cov, cfg.jump_threshold_stat);
                    const double h = tune_step_size(moved, target, grid, cov, cfg.seed, step);
                    std::uint64_t sweep = 0;
                    double acceptance = 0.0;
                    const int repeats = choose_num_repeats(
                        [&] {
                            const auto st = mala_sweep(moved, target, h, cov, cfg.seed, step, sweep++);
                            acceptance = st.acceptance_rate;
                            return st.jump;
                        },
                        threshold, cfg.jump_fraction, cfg.max_repeats);
                    return MoveResult{h, repeats, acceptance};
                });
    }
    return run;
}

SmcRun replay_smc(const TargetModel& model, const FrozenSchedule& schedule, Index n, std::uint64_t seed) {
    const auto& temps = schedule.temperatures;
    if (temps.size() < 2 || temps.front() != 0.0 || temps.back() != 1.0)
        throw InvalidSchedule("a replay schedule must run from 0 to 1");
    for (std::size_t j = 1; j < temps.size(); ++j)
        if (!(temps[j] > temps[j - 1])) throw InvalidSchedule("temperatures must increase strictly");
    if (schedule.h.size() != temps.size() - 1 || schedule.repeats.size() != temps.size() - 1)
        throw InvalidSchedule("need one step size and repeat count per temperature step");
    if (n < 2) throw ConfigError("SMC needs at least two particles");

    SmcRun run;
    run.n = n;
    run.seed = seed;
    ParticleState state = ParticleState::from(model, model.sample_prior(n, derived_seed(seed, prior_key, 0)));
    check_initial(state);
    Vector weights = uniform_weights(n);
    double t = 0.0;
    run.schedule.temperatures.push_back(0.0);
    run.snapshots.push_back(make_snapshot(0.0, state, weights));
    for (std::size_t j = 1; j < temps.size(); ++j) {
        const std::uint64_t step = j;
        advance(run, state, weights, t, temps[j], model, seed, step,
                [&](ParticleState& moved, const Vector&, const Matrix& cov, const TemperedTarget& target,
                    const ParticleState&) {
                    const double h = schedule.h[j - 1];
                    const int repeats = schedule.repeats[j - 1];
                    double acceptance = 0.0;
                    for (int s = 0; s < repeats; ++s)
                        acceptance = mala_sweep(moved, target, h, cov, seed, step, static_cast<std::uint64_t>(s))
                                         .acceptance_rate;
                    return MoveResult{h, repeats, acceptance};
                });
    }
    return run;
}

// --------------------------------------------------------------- schedules

void TemperatureSchedule::validate() const {
    if (temperatures.empty() || temperatures.front() != 0.0)
        throw InvalidSchedule("schedule must start at inverse temperature 0");
    if (temperatures.back() != 1.0) throw InvalidSchedule("schedule must end at inverse temperature 1");
    if (population_index.size() != temperatures.size())
        throw InvalidSchedule("every temperature needs a particle population");
    for (std::size_t j = 1; j < temperatures.size(); ++j)
        if (!(temperatures[j] > temperatures[j - 1])) throw InvalidSchedule("temperatures must increase strictly");
}

TemperatureSchedule native_schedule(const std::vector<Snapshot>& snapshots) {
    TemperatureSchedule s;
    for (std::size_t k = 0; k < snapshots.size(); ++k) {
        s.temperatures.push_back(snapshots[k].t);
        s.population_index.push_back(k);
    }
    return s;
}

TemperatureSchedule posthoc_schedule(const std::vector<Snapshot>& snapshots, double rho_tilde) {
    if (snapshots.empty() || snapshots.front().t != 0.0) throw InvalidSchedule("need a snapshot at temperature 0");
    if (!(rho_tilde > 0.0 && rho_tilde < 1.0)) throw ConfigError("rho_tilde must lie in (0, 1)");
    for (std::size_t k = 1; k < snapshots.size(); ++k)
        if (!(snapshots[k].t > snapshots[k - 1].t)) throw InvalidSchedule("snapshot temperatures must increase");

    TemperatureSchedule out{{0.0}, {0}};
    double t = 0.0;
    std::size_t k = 0;
    while (t < 1.0) {
        const Snapshot& snap = snapshots[k];
        const Vector w = snap.weights_at(t);
        const double target = rho_tilde * static_cast<double>(snap.count());
        t = next_temperature(w, snap.log_like, t, Criterion::cess, target);
        while (k + 1 < snapshots.size() && snapshots[k + 1].t <= t) ++k;
        out.temperatures.push_back(t);
        out.population_index.push_back(k);
    }
    return out;
}

std::vector<SampleSet> schedule_samples(const std::vector<Snapshot>& snapshots, const TemperatureSchedule& schedule) {
    schedule.validate();
    std::vector<SampleSet> out;
    for (std::size_t j = 0; j < schedule.temperatures.size(); ++j) {
        const std::size_t k = schedule.population_index[j];
        if (k >= snapshots.size()) throw InvalidSchedule("schedule refers to a missing snapshot");
        if (snapshots[k].t > schedule.temperatures[j]) throw InvalidSchedule("population is hotter than its temperature");
        out.push_back(snapshots[k].samples_at(schedule.temperatures[j]));
    }
    return out;
}

// ------------------------------------------------------------------ archive

namespace {

std::string snapshot_name(std::size_t k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snapshot_%03zu.csv", k);
    return buf;
}

}  // namespace

void write_run(const std::filesystem::path& dir, const SmcRun& run, const std::string& model_name) {
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json j;
    j["model"] = model_name;
    j["n"] = run.n;
    j["seed"] = run.seed;
    j["temperatures"] = run.schedule.temperatures;
    j["log_increments"] = run.log_increments;
    j["h"] = run.schedule.h;
    j["repeats"] = run.schedule.repeats;
    j["acceptance"] = run.acceptance;
    j["log_evidence"] = run.log_evidence();
    std::vector<std::string> names;
    for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
        const auto& snap = run.snapshots[k];
        names.push_back(snapshot_name(k));
        write_sample_csv(dir / names.back(), snap.samples(), &snap.grad_log_like);
    }
    j["snapshots"] = names;
    write_text_file(dir / "manifest.json", j.dump(2) + "\n");
}

LoadedRun read_run(const std::filesystem::path& dir) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw IoError((dir / "manifest.json").string() + ": " + e.what());
    }
    LoadedRun out;
    try {
        out.model = j.value("model", std::string());
        out.n = j.at("n").get<Index>();
        out.seed = j.at("seed").get<std::uint64_t>();
        out.schedule.temperatures = j.at("temperatures").get<std::vector<double>>();
        out.schedule.h = j.at("h").get<std::vector<double>>();
        out.schedule.repeats = j.at("repeats").get<std::vector<int>>();
        out.log_increments = j.at("log_increments").get<std::vector<double>>();
        const auto names = j.at("snapshots").get<std::vector<std::string>>();
        if (names.size() != out.schedule.temperatures.size())
            throw IoError("manifest lists " + std::to_string(names.size()) + " snapshots for " +
                          std::to_string(out.schedule.temperatures.size()) + " temperatures");
        for (std::size_t k = 0; k < names.size(); ++k) {
            const auto archive = read_sample_csv(dir / names[k]);
            const SampleSet& s = archive.samples;
            if (!archive.grad_log_like || !s.log_like() || !s.log_prior())
                throw IoError(names[k] + " lacks the likelihood columns needed to re-temper particles");
            const double t = out.schedule.temperatures[k];
            Snapshot snap{t,
                          s.theta(),
                          s.weights(),
                          *s.log_like(),
                          *s.log_prior(),
                          *archive.grad_log_like,
                          t == 0.0 ? s.grad_log_target() : Matrix(s.grad_log_target() - t * *archive.grad_log_like)};
            out.snapshots.push_back(std::move(snap));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError((dir / "manifest.json").string() + ": " + e.what());
    }
    return out;
}

}  // namespace zvcv
